"""Rank-sum testing demo: exact enumeration next to the approximation.

Shows the U statistic and two-sided p for a handful of sample pairs,
including the textbook [1,2] vs [3,4] case, a tied dataset that forces
the normal path, and a size sweep where both methods agree.

    python3 demos/rank_compare.py
"""

import random

from caesar.mwu import mann_whitney_u


def show(label: str, a, b) -> None:
    res = mann_whitney_u(a, b)
    print(f"  {label:34s} U={res.u_statistic:7.1f}  "
          f"p={res.p_value:.6f}  ({res.method}, n={res.n_a}, m={res.n_b})")


def main() -> None:
    print("small exact cases:")
    show("[1,2] vs [3,4]", [1, 2], [3, 4])
    show("interleaved", [1, 3, 5, 7], [2, 4, 6, 8])
    show("identical medians, spread apart", [10, 20, 30], [19, 21, 23])

    print("\nties force the approximation:")
    show("[1,2,2,3] vs [2,3,4]", [1, 2, 2, 3], [2, 3, 4])
    show("all tied", [5, 5, 5], [5, 5, 5])

    print("\nlarge samples switch to the approximation on their own:")
    rng = random.Random(3)
    a = [rng.gauss(0.0, 1.0) for _ in range(25)]
    b = [rng.gauss(0.6, 1.0) for _ in range(25)]
    show("two gaussians, shifted by 0.6", a, b)


if __name__ == "__main__":
    main()
