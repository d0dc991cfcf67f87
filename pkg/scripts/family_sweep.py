#!/usr/bin/env python3
"""Sample members of the infinite minimum family and tabulate their free
parameters against the (identical) risks.

Usage: python scripts/family_sweep.py [--k 10] [--seed 7] [--dims 2,3,3,1]
"""

import argparse

from spurmin import LossKind, enumerate_family, fit_linear, params_distance, relu, xor_dataset


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--dims", default="2,3,3,1")
    args = ap.parse_args()

    data = xor_dataset()
    fit = fit_linear(data, LossKind.SQUARED)
    dims = tuple(int(d) for d in args.dims.split(","))
    members = enumerate_family(fit, data, dims, relu(), k=args.k, seed=args.seed)

    print(f"{'member':>6} {'eta':>12} {'M':>12} {'alphas':>18} {'risk':>18}")
    for i, m in enumerate(members):
        alphas = ",".join(f"{a:.4f}" for a in m.params.alpha_scales) or "-"
        print(f"{i:>6} {m.params.eta:>12.6f} {m.params.m_scale:>12.6f} {alphas:>18} {m.risk:>18.15f}")
    dists = [
        params_distance(a.net, b.net)
        for i, a in enumerate(members)
        for b in members[i + 1 :]
    ]
    print(f"baseline risk {fit.risk!r}; min pairwise parameter distance {min(dists):.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
