"""Blinded judging demo: shuffled labels, recovered scores, bias check.

Two answers are scored by two scripted judges over three trials. The
judges only ever see ANSWER_1/ANSWER_2 labels in shuffled order; the demo
prints the per-trial ordering to show the blinding, then the
de-anonymized score table, the self-preference bias, and the rank test.

    python3 demos/judge_panel.py
"""

import re

from caesar.judge import aggregate, judge_batch, pairwise_mwu, self_preference_bias
from caesar.llm import ChatClient, ChatRequest, RuleProvider, TokenLedger

ANSWERS = {
    "surveyor": ("Tidal clocks gear a dial to the 24h50m lunar day, and "
                 "harbors posted the readings next to almanac tables."),
    "sprinter": "Tidal clocks show the tide.",
}

_BLOCK = re.compile(r"(ANSWER_\d+):\n([^\n]+)")


def make_judge(kin_markers: tuple[str, ...], bonus: int) -> ChatClient:
    """Scores on answer length, plus a planted bonus for kin phrasing."""

    def fn(request: ChatRequest) -> str:
        lines = []
        for label, content in _BLOCK.findall(request.prompt):
            base = 4 + min(len(content) // 60, 4)
            extra = bonus if any(m in content for m in kin_markers) else 0
            lines.append(f"{label}: new={base + extra} useful={base} "
                         f"surprising={base}")
        return "\n".join(lines)

    return ChatClient(RuleProvider(fn), ledger=TokenLedger())


def main() -> None:
    judges = {
        "judge_verbose": make_judge(("lunar day",), bonus=2),
        "judge_neutral": make_judge((), bonus=0),
    }
    scores, warnings = judge_batch(
        "how did tidal clocks keep harbors on schedule",
        ANSWERS, judges, trials=3, seed=11)
    assert not warnings, warnings

    print("de-anonymized scores (agent was hidden from the judge):")
    for row in scores:
        print(f"  {row.judge:13s} trial {row.trial}  {row.agent:8s} "
              f"new={row.new} useful={row.useful} surprising={row.surprising}"
              f"  total={row.total}")

    print("\nper-agent means:")
    for agent, means in aggregate(scores).items():
        print(f"  {agent:8s} " + "  ".join(
            f"{dim}={value:.2f}" for dim, value in means.items()))

    bias = self_preference_bias(
        scores,
        agent_families={"surveyor": "verbose", "sprinter": "terse"},
        judge_families={"judge_verbose": "verbose",
                        "judge_neutral": "terse"})
    print("\nself-preference bias (judge's kin mean minus others' mean):")
    for judge, value in bias.items():
        print(f"  {judge:13s} {value:+.2f}")

    print("\npairwise rank test on totals:")
    for pair, res in pairwise_mwu(scores).items():
        print(f"  {pair}: U={res['u_statistic']:.1f} "
              f"p={res['p_value']:.4f} ({res['method']})")


if __name__ == "__main__":
    main()
