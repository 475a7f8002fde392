"""Regenerate interval_goldens.json from the high-precision oracle.

Run from the repository root: ``python3 tests/data/generate_goldens.py``.
Takes several minutes.
"""
import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import oracles  # noqa: E402

N, BETA = 1000, 1e-4


def main():
    rows = []
    for q in range(0, 101):
        t2 = oracles.posteriori_root(N, BETA, q)
        t_lo, t_hi = oracles.interval_roots(N, BETA, q)
        eps2 = 1.0 - t2
        eps3_upper = 1.0 - t_lo
        rows.append({
            "q": q,
            "t_posteriori": t2,
            "t_lower": t_lo,
            "t_upper": t_hi,
            "epsilon_posteriori": eps2,
            "epsilon_lower": max(0.0, 1.0 - t_hi),
            "epsilon_upper": eps3_upper,
            "relative_gap": abs(eps3_upper - eps2) / eps2,
        })
        print(q, eps2, eps3_upper, flush=True)
    out = os.path.join(os.path.dirname(__file__), "interval_goldens.json")
    with open(out, "w") as fh:
        json.dump({"n": N, "beta": BETA, "rows": rows}, fh, indent=1)


if __name__ == "__main__":
    main()
