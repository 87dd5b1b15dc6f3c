#!/usr/bin/env python3
"""Audit every proven inequality on a family of approximants.

Checks coefficient factorial bounds, coefficient-gap bounds, the
closed-form sup-norm gap constants for all four trig-type functions and
their derivatives, and the CDF sup-distance bounds (telescoping and
geometric cap), then prints the tightest margin seen per bound family.

Usage:
    python3 scripts/bound_audit.py
    python3 scripts/bound_audit.py --w 0.25 --levels 1:6 --out audit.csv
"""

import argparse
import csv
import sys
from fractions import Fraction

from kreinfeller.convergence import bound_audit
from kreinfeller.measures import WeightVector


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--w", action="append", default=None, metavar="W",
                    help="first branch weight; repeatable (default: 0.5, 1/3, 0.25)")
    ap.add_argument("--levels", default="1:6", help="inclusive level range a:b (default 1:6)")
    ap.add_argument("--order", type=int, default=12, help="coefficient table order (default 12)")
    ap.add_argument("--out", default=None, help="write all rows for the last weight pair as CSV")
    args = ap.parse_args(argv)

    lo, hi = (int(p) for p in args.levels.split(":", 1))
    levels = tuple(range(lo, hi + 1))
    weights = [Fraction(t) for t in (args.w or ["0.5", "1/3", "0.25"])]

    report = None
    for first in weights:
        w = WeightVector.of(first)
        report = bound_audit(w, levels, coeff_order=args.order, raise_on_violation=False)
        bad = report.violations()
        print(f"\nweights ({w.w1}, {w.w2}), levels {lo}..{hi}: "
              f"{len(report.rows)} bound instances, {len(bad)} violations")
        for name, row in sorted(report.worst_slack_per_bound().items()):
            print(f"  {name:28s} tightest margin {row.slack:12.5e}  [{row.instance}]")
        for row in bad[:10]:
            print(f"  VIOLATED {row.bound} [{row.instance}]: "
                  f"measured {row.measured:.6e} > limit {row.limit:.6e}")

    if args.out and report is not None:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\r\n").writerows(report.csv_rows())
        print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
