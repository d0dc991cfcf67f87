#!/usr/bin/env python3
"""Run the full pipeline on the 4-point fixture and write the report JSON.

Usage: python scripts/demo_xor.py [--seed 7] [--out report.json]
"""

import argparse
import json
import sys

from spurmin.cli import run_demo
from spurmin.io import to_jsonable


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="report.json")
    args = ap.parse_args()

    report, ok, first_failure = run_demo(seed=args.seed, out=args.out)
    print(json.dumps({
        "baseline_risk": report["fit"]["risk"],
        "stage_gaps": {s: report["stages"][s]["gap"] for s in report["stages"]},
        "corollary_gap": report["corollary"]["gap"],
        "family_min_distance": report["family"]["min_pairwise_distance"],
        "ok": ok,
    }, indent=2, sort_keys=True, default=to_jsonable))
    if not ok:
        print(f"first failing check: {first_failure}", file=sys.stderr)
    print(f"full report written to {args.out}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
