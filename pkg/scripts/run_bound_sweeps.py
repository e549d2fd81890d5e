#!/usr/bin/env python3
"""Fit the empirical constants of the two determinant inequalities over a
coupling/size sweep and report their stability."""

import argparse
import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from qpjacobi.greens import check_det_lower_bound, check_minor_bound, midpoint_grid
from qpjacobi.models import resolve_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="maryland")
    ap.add_argument("--Ns", default="4,8,16")
    ap.add_argument("--lambdas", default="10,100,1000")
    ap.add_argument("--x-count", type=int, default=16)
    ap.add_argument("--nodes", type=int, default=1024)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    model = resolve_model(args.model)
    n_list = [int(s) for s in args.Ns.split(",")]
    lam_list = [float(s) for s in args.lambdas.split(",")]
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = ["check,group,constant"]
    for lam in lam_list:
        rep = check_minor_bound(
            model, n_list, [lam], [1.0, math.sqrt(lam), lam], x_count=args.x_count
        )
        print(f"minor bound lambda={lam:g}: {rep.group_constants}")
        for key, val in rep.group_constants.items():
            rows.append(f"minor,lambda={lam:g}/{key},{val:.17g}")

    det = check_det_lower_bound(
        model, lam_list + [2 * l for l in lam_list], [0.5], n_list, midpoint_grid(args.nodes)
    )
    print(f"det bound: fitted C1 = {det.fitted_constant:.4f}")
    for key, val in det.group_constants.items():
        rows.append(f"det,{key},{val:.17g}")

    path = out_dir / "bound_constants.csv"
    path.write_text("\n".join(rows) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
