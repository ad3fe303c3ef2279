"""Dump the sparse Erdos-Renyi threshold curve tau0(sigma) as CSV on stdout.

Run from the repo root:
  python tools/tau0_curve.py > tau0.csv
"""

import sys
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from metastab.services.bounds_er import SIGMA_MIN, tau0_curve


def main() -> int:
    sigmas = np.concatenate([np.linspace(SIGMA_MIN * 1.001, 10.0, 60), np.geomspace(10.0, 1e4, 60)[1:]])
    print("sigma,tau0,sigma_tau0")
    for sigma, tau0, product in tau0_curve(sigmas.tolist()):
        print(f"{sigma!r},{tau0!r},{product!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
