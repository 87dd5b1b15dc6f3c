#!/usr/bin/env python3
"""Cross-validate the spectral solver against the finite-element oracle.

For each weight pair and refinement level, computes eigenvalues two
independent ways — certified root-finding on the boundary-value curves,
and a P1 finite-element generalized eigenproblem — and reports the worst
relative gap at each mesh size.  The gap must shrink under mesh
refinement; the spectral values are the reference.

Usage:
    python3 scripts/oracle_comparison.py
    python3 scripts/oracle_comparison.py --w 1/3 --levels 1:4 --m-max 6 --mesh-powers 4,5,6
"""

import argparse
import sys
from fractions import Fraction

from kreinfeller.measures import CantorLevel, WeightVector, cantor_approximant
from kreinfeller.series import build_table
from kreinfeller.spectrum import fem_oracle, find_eigenvalues


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--w", action="append", default=None, metavar="W",
                    help="first branch weight; repeatable (default: 0.5, 1/3, 0.25)")
    ap.add_argument("--levels", default="1:4", help="inclusive level range a:b (default 1:4)")
    ap.add_argument("--m-max", type=int, default=6, help="largest eigenvalue index (default 6)")
    ap.add_argument("--mesh-powers", default="4,5,6",
                    help="comma list k for meshes h=3^-k (default 4,5,6)")
    args = ap.parse_args(argv)

    lo, hi = (int(p) for p in args.levels.split(":", 1))
    weights = [Fraction(t) for t in (args.w or ["0.5", "1/3", "0.25"])]
    mesh_powers = [int(p) for p in args.mesh_powers.split(",")]

    header = "  ".join(f"h=3^-{k}" for k in mesh_powers)
    for first in weights:
        w = WeightVector.of(first)
        print(f"\nweights ({w.w1}, {w.w2})   worst relative gap over m<={args.m_max}")
        print(f"  level  boundary   {header}")
        for level in range(lo, hi + 1):
            mu = cantor_approximant(CantorLevel(w, level))
            table = build_table(mu, 2)
            for boundary in ("neumann", "dirichlet"):
                count = args.m_max + 1 if boundary == "neumann" else args.m_max
                records = find_eigenvalues(table, boundary, count)
                start = 1 if boundary == "neumann" else 0
                cells = []
                for k in mesh_powers:
                    if k < level:
                        cells.append("   (mesh too coarse)")
                        continue
                    fem = fem_oracle(mu, 3.0**-k, count, boundary)
                    worst = max(
                        abs(r.lam - lf) / max(abs(r.lam), 1.0)
                        for r, lf in list(zip(records, fem))[start:]
                    )
                    cells.append(f"{worst:10.3e}")
                print(f"   {level}     {boundary:9s} " + "  ".join(cells))
    return 0


if __name__ == "__main__":
    sys.exit(main())
