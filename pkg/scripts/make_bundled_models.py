#!/usr/bin/env python3
"""Regenerate the bundled example model files under src/qpjacobi/data/.

Three models cover the hypothesis space: the scalar tangent model, a 2x2
band model with analytic diagonals, and a 2x2 model with poles on both the
F and R diagonals.
"""

import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from qpjacobi.models import save_model
from qpjacobi.symbols import BlockModel, Dioph, MeroScalar, TrigPoly

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DIOPH = Dioph(A=2.0, C0=0.1)


def maryland():
    tan = MeroScalar.from_ratio(TrigPoly.sine(), TrigPoly.cosine())
    zero = MeroScalar.analytic(TrigPoly.zero())
    return BlockModel(
        l=1,
        W=[[TrigPoly.constant(1.0)]],
        R=[[zero]],
        F=[[tan]],
        omega=GOLDEN,
        dioph=DIOPH,
    )


def analytic2():
    one = TrigPoly.constant(1.0)
    zero = TrigPoly.zero()
    v1 = MeroScalar.analytic(TrigPoly.cosine())
    v2 = MeroScalar.analytic(TrigPoly.cosine(amp=1.5, shift=0.31))
    rz = MeroScalar.analytic(TrigPoly.zero())
    return BlockModel(
        l=2,
        W=[[one, zero], [zero, one]],
        R=[[rz, TrigPoly.constant(1.0)], [TrigPoly.constant(1.0), rz]],
        F=[[v1, zero], [zero, v2]],
        omega=GOLDEN,
        dioph=DIOPH,
    )


def mero2():
    one = TrigPoly.constant(1.0)
    f00 = MeroScalar.from_ratio(TrigPoly.sine(), TrigPoly.cosine())
    f11 = MeroScalar.from_ratio(
        TrigPoly.sine(shift=0.29), TrigPoly.cosine(shift=0.29)
    )
    f01 = TrigPoly.cosine(amp=0.2)
    r00 = MeroScalar.from_ratio(
        TrigPoly.sine(amp=0.5, shift=0.13), TrigPoly.cosine(shift=0.13)
    )
    r11 = MeroScalar.analytic(TrigPoly.cosine(amp=0.3, shift=0.41))
    r01 = TrigPoly.sine(amp=0.1)
    w01 = TrigPoly.cosine(amp=0.25)
    return BlockModel(
        l=2,
        W=[[one, w01], [w01, one]],
        R=[[r00, r01], [r01, r11]],
        F=[[f00, f01], [f01, f11]],
        omega=GOLDEN,
        dioph=DIOPH,
    )


def main():
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "qpjacobi" / "data"
    out.mkdir(parents=True, exist_ok=True)
    for name, builder in (("maryland", maryland), ("analytic2", analytic2), ("mero2", mero2)):
        path = out / f"{name}.json"
        save_model(builder(), path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
