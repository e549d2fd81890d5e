#!/usr/bin/env python3
"""Large-deviation sweep: bad-set fractions over a Q ladder, for the model's
own rotation and a rational control, written as CSV."""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from qpjacobi.ergodic import deviation_measure
from qpjacobi.greens import midpoint_grid
from qpjacobi.models import resolve_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="maryland")
    ap.add_argument("--lambda", dest="lam", type=float, default=50.0)
    ap.add_argument("--E", type=float, default=1.0)
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--sigma", type=float, default=0.3)
    ap.add_argument("--S", type=float, default=1.0)
    ap.add_argument("--Qs", default="10,32,100,316,1000")
    ap.add_argument("--grid", type=int, default=2000)
    ap.add_argument("--control-omega", type=float, default=0.5)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    model = resolve_model(args.model)
    qs = [int(s) for s in args.Qs.split(",")]
    grid = midpoint_grid(args.grid)
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for tag, omega in (("model", None), ("control", args.control_omega)):
        rows = ["Q,threshold,bad_fraction"]
        for q in qs:
            rep = deviation_measure(
                model, args.lam, args.E, args.N, q, args.S, args.sigma, grid, omega=omega
            )
            rows.append(f"{rep.Q},{rep.threshold:.17g},{rep.bad_fraction:.17g}")
            print(f"{tag:8s} Q={q:5d} threshold={rep.threshold:.4f} bad={rep.bad_fraction:.4f}")
        path = out_dir / f"ldt_{tag}.csv"
        path.write_text("\n".join(rows) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
