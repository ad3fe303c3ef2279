"""Print (1/N) log H_N for the contact process on K_N against its limit.

Run from the repo root:
  python tools/complete_graph_limit.py [lambda]
"""

import sys
import pathlib

ROOT = pathlib.Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from metastab.services.birthdeath import complete_graph_bounds
from metastab.services.bounds_er import complete_graph_exponent


def main() -> int:
    lam = float(sys.argv[1]) if len(sys.argv) > 1 else 2.0
    print("lambda =", lam, " limit =", complete_graph_exponent(lam))
    print("N, exact, explicit_upper, proposition_lower")
    for n in (50, 100, 200, 400, 800, 1600, 3200):
        b = complete_graph_bounds(n, lam)
        lower = b.log_lower / n if b.log_lower is not None else None
        print(n, b.log_exact / n, b.log_upper / n, lower)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
