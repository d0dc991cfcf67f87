#!/usr/bin/env python3
"""Emit a point,risk CSV along a valley path between two rescalings of the
constructed one-hidden-layer minimum, demonstrating risk invariance.

Usage: python scripts/valley_path_curve.py [--steps 10] [--out curve.csv]
"""

import argparse

import numpy as np

from spurmin import (
    LossKind,
    Mlp,
    build_shallow_minimum,
    build_valley_path,
    empirical_risk,
    fit_linear,
    net_cell_inputs,
    relu,
    xor_dataset,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=10)
    ap.add_argument("--out", default="curve.csv")
    ap.add_argument("--factors", default="2.0,0.5,3.0",
                    help="per-unit rescaling factors defining the far endpoint")
    args = ap.parse_args()

    data = xor_dataset()
    fit = fit_linear(data, LossKind.SQUARED)
    minimum = build_shallow_minimum(fit, data, (2, 3, 1), relu())
    W1, W2, b2, _ = net_cell_inputs(minimum.net, data.X)
    factors = np.array([float(f) for f in args.factors.split(",")])
    path = build_valley_path((W1, W2), (W1 / factors[:, None], W2 * factors),
                             steps_per_move=args.steps)

    with open(args.out, "w") as fh:
        fh.write("point,risk\n")
        for i, (W1p, W2p) in enumerate(path):
            net = Mlp((2, 3, 1), (W1p[:, :2], W2p[None, :]),
                      (W1p[:, 2], np.array([b2])), relu())
            fh.write(f"{i},{empirical_risk(net, data, LossKind.SQUARED)!r}\n")
    print(f"{len(path)} path points written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
