"""Run configuration and manifest.

Every tunable the engine consumes lives on CaesarConfig. Values come from,
in increasing precedence: built-in defaults, a flat JSON config file, and
CAESAR_* environment variables. Short symbolic aliases (T, P_m, tau_e, ...)
are accepted everywhere the descriptive names are.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

REASONING_LEVELS = ("low", "medium", "high")

# symbol -> field name, the vocabulary used by config files and CAESAR_* vars
ALIASES = {
    "T": "exploration_budget",
    "P_m": "max_page_chars",
    "L_m": "max_links_per_page",
    "R_m": "max_revisits",
    "S_m": "max_web_searches",
    "D_m": "max_depth",
    "N_c": "neighbor_context",
    "tau_e": "explore_temperature",
    "R_e": "explore_reasoning",
    "T_hat": "insight_budget",
    "N": "refinement_rounds",
    "H_c": "max_qa_history",
    "C_m": "max_citations_per_claim",
    "tau_s": "synth_temperature",
    "R_s": "synth_reasoning",
    "O_m": "max_output_tokens",
    "R_k": "retrieve_k",
    "R_n": "rerank_n",
    "Q": "user_query",
}

ENV_PREFIX = "CAESAR_"


class ConfigError(ValueError):
    """Raised for unparseable sources and invariant violations.

    The message always names the offending key so callers can surface it.
    """


@dataclass(frozen=True)
class CaesarConfig:
    exploration_budget: int = 1000
    """Exploration step budget T. May be 0 (run degenerates to the root node)."""

    max_page_chars: int = 100_000
    """Page text cap P_m in characters; longer pages are truncated."""

    max_links_per_page: int = 2000
    """Candidate link cap L_m per page."""

    max_revisits: int = 20
    """Revisit cap R_m; URLs perceived this many times are filtered out."""

    max_web_searches: int = 30
    """Web search action budget S_m for the whole run."""

    max_depth: int = 10_000
    """Hard graph depth cap D_m."""

    neighbor_context: int = 5
    """Neighbor insight blocks N_c injected into the think prompt."""

    explore_temperature: float = 0.9
    """Sampling temperature tau_e for exploration-phase calls."""

    explore_reasoning: str = "low"
    """Reasoning effort R_e for exploration-phase calls."""

    insight_budget: int = 30
    """Recursive insight iteration cap T_hat."""

    refinement_rounds: int = 3
    """Adversarial refinement rounds N."""

    max_qa_history: int = 50
    """QA pairs H_c kept in the follow-up prompt context."""

    max_citations_per_claim: int = 5
    """Citation cap C_m per claim."""

    synth_temperature: float = 0.1
    """Sampling temperature tau_s for synthesis-phase calls."""

    synth_reasoning: str = "high"
    """Reasoning effort R_s for synthesis-phase calls."""

    max_output_tokens: int = 50_000
    """Per-call output token ceiling O_m."""

    retrieve_k: int = 50
    """Top-k retrieval width R_k."""

    rerank_n: int = 10
    """Top-n rerank width R_n."""

    chunk_size: int = 400
    """Chunk size in tokens for KB indexing."""

    chunk_overlap: int = 80
    """Chunk overlap in tokens."""

    allowed_domains: tuple[str, ...] = ()
    """Domain suffix allowlist; empty means unrestricted."""

    user_query: str = ""
    """The research query Q."""

    def __post_init__(self):
        _validate(self)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["allowed_domains"] = list(self.allowed_domains)
        return d

    def replace(self, **changes: Any) -> "CaesarConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(CaesarConfig)}
# env lookup is case-insensitive over both vocabularies
_ENV_KEYS = {name.upper(): name for name in _FIELDS}
_ENV_KEYS.update({alias.upper(): name for alias, name in ALIASES.items()})

_POSITIVE = (
    "max_page_chars", "max_links_per_page", "max_revisits", "max_web_searches",
    "max_depth", "insight_budget", "refinement_rounds", "max_qa_history",
    "max_citations_per_claim", "max_output_tokens", "retrieve_k", "rerank_n",
    "chunk_size", "chunk_overlap",
)


def _validate(cfg: CaesarConfig) -> None:
    if cfg.exploration_budget < 0:
        raise ConfigError("exploration_budget: must be >= 0")
    for name in _POSITIVE:
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name}: must be a positive count")
    if cfg.neighbor_context < 0:
        raise ConfigError("neighbor_context: must be >= 0")
    if cfg.chunk_overlap >= cfg.chunk_size:
        raise ConfigError("chunk_overlap: must be strictly less than chunk_size")
    if cfg.rerank_n > cfg.retrieve_k:
        raise ConfigError("rerank_n: must not exceed retrieve_k")
    for name in ("explore_temperature", "synth_temperature"):
        t = getattr(cfg, name)
        if not 0.0 <= t <= 2.0:
            raise ConfigError(f"{name}: must lie in [0, 2]")
    for name in ("explore_reasoning", "synth_reasoning"):
        if getattr(cfg, name) not in REASONING_LEVELS:
            raise ConfigError(f"{name}: must be one of {REASONING_LEVELS}")
    if not isinstance(cfg.user_query, str):
        raise ConfigError("user_query: must be a string")


def _coerce(name: str, value: Any) -> Any:
    """Coerce a raw file/env value to the field's declared type."""
    f = _FIELDS[name]
    try:
        if name == "allowed_domains":
            if isinstance(value, str):
                value = json.loads(value) if value.lstrip().startswith("[") else [
                    p.strip() for p in value.split(",") if p.strip()
                ]
            if not isinstance(value, (list, tuple)):
                raise TypeError("expected a list of domain suffixes")
            return tuple(str(v) for v in value)
        if f.type in ("int", int):
            if isinstance(value, bool):
                raise TypeError("booleans are not counts")
            out = int(value)
            if isinstance(value, float) and value != out:
                raise TypeError("expected an integer")
            return out
        if f.type in ("float", float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _canonical_key(key: str) -> str:
    if key in _FIELDS:
        return key
    if key in ALIASES:
        return ALIASES[key]
    raise ConfigError(f"{key}: unknown configuration key")


def load_config(source: str | Path | Mapping[str, Any] | None = None,
                env: Mapping[str, str] | None = None) -> CaesarConfig:
    """Build a CaesarConfig from a JSON file (or mapping) plus environment.

    Unknown keys are rejected, never ignored. Environment variables named
    CAESAR_<FIELD> or CAESAR_<ALIAS> override file values.
    """
    values: dict[str, Any] = {}

    if source is not None:
        if isinstance(source, Mapping):
            raw = dict(source)
        else:
            path = Path(source)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
            if not isinstance(raw, dict):
                raise ConfigError(f"{path}: top level must be an object")
        for key, value in raw.items():
            values[_canonical_key(key)] = value

    env = os.environ if env is None else env
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        suffix = key[len(ENV_PREFIX):]
        name = _ENV_KEYS.get(suffix.upper())
        if name is None:
            continue  # unrelated CAESAR_ var (provider keys etc.)
        values[name] = value

    coerced = {name: _coerce(name, value) for name, value in values.items()}
    return CaesarConfig(**coerced)


def default_config_dict() -> dict[str, Any]:
    return CaesarConfig().to_dict()


@dataclass
class RunManifest:
    """Describes one run directory; written before any other artifact."""

    run_id: str
    created_at: str
    config: dict[str, Any]
    providers: dict[str, str] = field(default_factory=dict)
    out_dir: str = ""
    status: str = "incomplete"
    artifacts: list[str] = field(default_factory=list)

    @classmethod
    def create(cls, config: CaesarConfig, providers: dict[str, str],
               out_dir: str | Path, run_id: str | None = None) -> "RunManifest":
        now = datetime.now(timezone.utc)
        rid = run_id or now.strftime("run-%Y%m%dT%H%M%S-") + hex(os.getpid() & 0xFFFF)[2:]
        return cls(run_id=rid, created_at=now.isoformat(), config=config.to_dict(),
                   providers=dict(providers), out_dir=str(out_dir))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(dataclasses.asdict(self), indent=2,
                                         sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        return cls(**data)
