"""Sup error of a projected reference net as a function of the truncation level.

    python scripts/projection_curve.py [--n 32] [--j 8] [--decay 2] > curve.csv
"""

import argparse

import numpy as np

from qpnet import tasks


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--j", type=int, default=8)
    ap.add_argument("--decay", type=float, default=2.0)
    ap.add_argument("--inputs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()
    net = tasks.reference_net(args.n, args.j, np.random.default_rng(args.seed), decay=args.decay)
    curve = tasks.projection_curve(net, tasks.fourier_inputs(args.inputs, args.n, seed=args.seed))
    print("truncation,sup_error")
    for k, err in enumerate(curve, 1):
        print(f"{k},{err!r}")


if __name__ == "__main__":
    main()
