"""Tiny PDF text extractor.

Covers the subset the engine actually meets: page content streams, optional
FlateDecode compression, and the Tj / TJ / quote text-showing operators
inside BT..ET blocks. Streams are visited in byte order, which matches page
order for the linearly written documents the fixtures and most simple
generators produce. Not a general PDF renderer and does not try to be.
"""

from __future__ import annotations

import base64
import re
import zlib

_STREAM = re.compile(rb"stream\r?\n(.*?)endstream", re.DOTALL)
_TEXT_BLOCK = re.compile(rb"BT(.*?)ET", re.DOTALL)
# literal string followed by a text-showing operator, or a TJ array;
# one alternation so document order survives
_SHOW = re.compile(
    rb"\(((?:\\.|[^\\()])*)\)\s*(?:Tj|')|\[((?:\\.|[^\\\[\]])*)\]\s*TJ",
    re.DOTALL)
_ARRAY_STRING = re.compile(rb"\(((?:\\.|[^\\()])*)\)")

_ESCAPES = {
    b"n": b"\n", b"r": b"\r", b"t": b"\t", b"b": b"\b", b"f": b"\f",
    b"(": b"(", b")": b")", b"\\": b"\\",
}


class PdfError(ValueError):
    """Raised when the bytes do not look like a readable PDF."""


def _unescape(raw: bytes) -> bytes:
    out = bytearray()
    i = 0
    while i < len(raw):
        c = raw[i:i + 1]
        if c != b"\\":
            out += c
            i += 1
            continue
        nxt = raw[i + 1:i + 2]
        if nxt in _ESCAPES:
            out += _ESCAPES[nxt]
            i += 2
        elif nxt.isdigit():
            # octal escape, up to three digits
            digits = raw[i + 1:i + 4]
            j = 0
            while j < len(digits) and digits[j:j + 1].isdigit() and j < 3:
                j += 1
            out.append(int(digits[:j], 8) & 0xFF)
            i += 1 + j
        else:
            i += 1  # lone backslash, swallow it
    return bytes(out)


def _decode_stream(raw: bytes) -> bytes:
    body = raw.rstrip(b"\r\n")
    try:
        return zlib.decompress(body)
    except zlib.error:
        pass
    # ASCII85 wrapping (with or without a <~ prefix) around Flate data
    if body.endswith(b"~>"):
        try:
            packed = base64.a85decode(body, adobe=True, ignorechars=b" \t\r\n")
        except ValueError:
            return raw
        try:
            return zlib.decompress(packed)
        except zlib.error:
            return packed
    return raw


def _block_text(block: bytes) -> list[str]:
    pieces: list[str] = []
    for match in _SHOW.finditer(block):
        if match.group(1) is not None:
            pieces.append(_unescape(match.group(1)).decode("latin-1"))
        else:
            parts = [_unescape(m.group(1)).decode("latin-1")
                     for m in _ARRAY_STRING.finditer(match.group(2))]
            if parts:
                pieces.append("".join(parts))
    return pieces


def extract_pdf_text(raw: bytes) -> str:
    """Concatenated text of all content streams, page order preserved."""
    if not raw.startswith(b"%PDF"):
        raise PdfError("missing %PDF header")
    lines: list[str] = []
    for stream_match in _STREAM.finditer(raw):
        data = _decode_stream(stream_match.group(1))
        for block_match in _TEXT_BLOCK.finditer(data):
            pieces = _block_text(block_match.group(1))
            if pieces:
                lines.append(" ".join(pieces))
    text = "\n".join(" ".join(line.split()) for line in lines if line.strip())
    return text
