"""Model config files: JSON schema, validation with field paths, hashing,
and the bundled example models."""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import re

from .errors import DegenerateSymbol, ModelFormatError
from .symbols import BlockModel, Dioph, MeroScalar, TrigPoly

_ENTRY_RE = re.compile(r"^([WRF])\[(\d+)\]\[(\d+)\]$")

BUNDLED = ("maryland", "analytic2", "mero2")


def _parse_coeffs(rows, field):
    if not isinstance(rows, list):
        raise ModelFormatError("coefficient table must be a list", field=field)
    coeffs = {}
    for i, row in enumerate(rows):
        here = f"{field}[{i}]"
        if not (isinstance(row, list) and len(row) == 3):
            raise ModelFormatError("expected [k, re, im]", field=here)
        k, re_part, im_part = row
        if not isinstance(k, int):
            raise ModelFormatError("frequency k must be an integer", field=here)
        try:
            c = complex(float(re_part), float(im_part))
        except (TypeError, ValueError):
            raise ModelFormatError("coefficients must be numbers", field=here)
        if k in coeffs:
            raise ModelFormatError(f"duplicate frequency k={k}", field=here)
        coeffs[k] = c
    for k, c in coeffs.items():
        mate = coeffs.get(-k, 0.0)
        if abs(c - mate.conjugate()) > 1e-12 * max(1.0, abs(c)):
            raise ModelFormatError(
                f"table is not Hermitian at k={k} (coeff(-k) != conj(coeff(k)))",
                field=field,
            )
    return coeffs


def model_from_dict(cfg):
    """Build a BlockModel from the JSON config schema.

    Validation failures raise ModelFormatError carrying the offending field
    path, e.g. "entries[2].den".
    """
    if not isinstance(cfg, dict):
        raise ModelFormatError("model config must be a JSON object", field="$")
    try:
        l = int(cfg["l"])
    except (KeyError, TypeError, ValueError):
        raise ModelFormatError("missing or non-integer block size", field="l")
    if l < 1:
        raise ModelFormatError("block size must be >= 1", field="l")
    try:
        omega = float(cfg["omega"])
    except (KeyError, TypeError, ValueError):
        raise ModelFormatError("missing or non-numeric rotation number", field="omega")
    dioph_cfg = cfg.get("dioph")
    if not isinstance(dioph_cfg, dict) or "A" not in dioph_cfg or "C0" not in dioph_cfg:
        raise ModelFormatError("expected {A, C0}", field="dioph")
    dioph = Dioph(A=float(dioph_cfg["A"]), C0=float(dioph_cfg["C0"]))
    pole_tol = float(cfg.get("pole_tol", 1e-8))
    if pole_tol <= 0:
        raise ModelFormatError("pole_tol must be positive", field="pole_tol")
    r_sign = int(cfg.get("r_sign", -1))
    if r_sign not in (-1, 1):
        raise ModelFormatError("r_sign must be +1 or -1", field="r_sign")

    tables = {}  # (name, i, j) -> (num coeffs, den coeffs or None)
    entries = cfg.get("entries")
    if not isinstance(entries, list):
        raise ModelFormatError("missing entry list", field="entries")
    for idx, ent in enumerate(entries):
        here = f"entries[{idx}]"
        if not isinstance(ent, dict) or "entry" not in ent:
            raise ModelFormatError("expected an object with an 'entry' key", field=here)
        match = _ENTRY_RE.match(str(ent["entry"]))
        if not match:
            raise ModelFormatError(
                "entry must look like F[0][0]", field=f"{here}.entry"
            )
        name, i, j = match.group(1), int(match.group(2)), int(match.group(3))
        if not (0 <= i < l and 0 <= j < l):
            raise ModelFormatError("entry index out of range", field=f"{here}.entry")
        num = _parse_coeffs(ent.get("num", []), f"{here}.num")
        den = None
        if "den" in ent:
            if name == "W" or i != j:
                raise ModelFormatError(
                    "only diagonal F/R entries may carry a denominator",
                    field=f"{here}.den",
                )
            den = _parse_coeffs(ent["den"], f"{here}.den")
        key = (name, i, j)
        mirror = (name, j, i)
        if key in tables:
            raise ModelFormatError("duplicate entry", field=f"{here}.entry")
        if mirror in tables and tables[mirror] != (num, den):
            raise ModelFormatError(
                "conflicts with its symmetric counterpart", field=f"{here}.entry"
            )
        tables[key] = (num, den)
        if i != j:
            tables.setdefault(mirror, (num, den))

    def poly(name, i, j):
        num, _ = tables.get((name, i, j), ({}, None))
        return TrigPoly(num)

    def mero(name, i):
        num, den = tables.get((name, i, i), ({}, None))
        den_poly = TrigPoly(den) if den is not None else None
        try:
            return MeroScalar.from_ratio(TrigPoly(num), den_poly, pole_tol=pole_tol)
        except DegenerateSymbol as exc:
            raise ModelFormatError(str(exc), field=f"{name}[{i}][{i}].den")

    W = [[poly("W", i, j) for j in range(l)] for i in range(l)]
    R = [[mero("R", i) if i == j else poly("R", i, j) for j in range(l)] for i in range(l)]
    F = [[mero("F", i) if i == j else poly("F", i, j) for j in range(l)] for i in range(l)]
    try:
        return BlockModel(
            l=l, W=W, R=R, F=F, omega=omega, dioph=dioph,
            pole_tol=pole_tol, r_sign=r_sign,
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc), field="entries")


def _coeff_rows(poly):
    return [[int(k), float(c.real), float(c.imag)] for k, c in poly.items()]


def model_to_dict(model):
    entries = []
    for name, grid in (("W", model.W), ("R", model.R), ("F", model.F)):
        for i in range(model.l):
            for j in range(i, model.l):
                sym = grid[i][j]
                if name in ("R", "F") and i == j:
                    ent = {"entry": f"{name}[{i}][{j}]", "num": _coeff_rows(sym.num)}
                    if not sym.is_analytic or sym.den.coeff(0) != 1.0:
                        ent["den"] = _coeff_rows(sym.den)
                    entries.append(ent)
                else:
                    if sym.is_zero:
                        continue
                    entries.append({"entry": f"{name}[{i}][{j}]", "num": _coeff_rows(sym)})
    return {
        "l": model.l,
        "omega": model.omega,
        "dioph": {"A": model.dioph.A, "C0": model.dioph.C0},
        "pole_tol": model.pole_tol,
        "r_sign": model.r_sign,
        "entries": entries,
    }


def model_hash(model):
    """Short content hash of the canonical serialized form."""
    canon = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}", field="$")
    return model_from_dict(cfg)


def bundled(name):
    """Load one of the shipped example models by name."""
    if name not in BUNDLED:
        raise ModelFormatError(
            f"unknown bundled model {name!r}; choose from {', '.join(BUNDLED)}",
            field="model",
        )
    ref = importlib.resources.files("qpjacobi").joinpath("data", f"{name}.json")
    return model_from_dict(json.loads(ref.read_text()))


def resolve_model(spec):
    """Interpret a CLI --model value as a bundled name or a file path."""
    if spec in BUNDLED:
        return bundled(spec)
    return load_model(spec)
