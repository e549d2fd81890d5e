"""Birkhoff averages of the log-determinant density along rotation orbits,
and empirical measurement of the large-deviation set."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import AllZero
from .greens import avg_logdet, logdet_grid, midpoint_grid

#: underflowed nodes contribute this floor (roughly log of the smallest
#: normal double) so averages stay finite; occurrences are counted
U_FLOOR = -690.0


def _u_values(model, lam, E, N, xs):
    u = logdet_grid(model, lam, E, (1, N), np.asarray(xs, dtype=float)) / (N * model.l)
    floored = int(np.count_nonzero(u < U_FLOOR))
    return np.maximum(u, U_FLOOR), floored


def birkhoff_avg(model, lam, E, N, x, Q, omega=None):
    """(1/Q) sum_{j<Q} u(x + j*omega) with u the log-determinant density.

    `omega` is the orbit step and defaults to the model rotation; u itself is
    a fixed function of the base phase, always built with the model's own
    rotation for its site shifts.  Summation is compensated, so reordering
    the orbit cannot move the result by more than ~1e-12.  Underflow nodes
    contribute the -690 floor.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    step = model.omega if omega is None else float(omega)
    xs = (float(x) + step * np.arange(Q)) % 1.0
    u, _ = _u_values(model, lam, E, N, xs)
    return float(math.fsum(u) / Q)


@functools.lru_cache(maxsize=64)
def _torus_integral(model, lam, E, N, nodes):
    return avg_logdet(model, lam, E, N, midpoint_grid(nodes)).value


@dataclass(frozen=True)
class DeviationReport:
    Q: int
    threshold: float
    bad_fraction: float
    grid_size: int
    S: float
    sigma: float
    integral: float
    floored: int


def deviation_measure(model, lam, E, N, Q, S, sigma, x_grid, omega=None, ref=None):
    """Fraction of grid phases whose Q-step Birkhoff average deviates from the
    torus integral by at least S * Q^(-sigma).

    Unlike birkhoff_avg's orbit-step argument, `omega` here replaces the
    model rotation outright (orbit and operator together); that is the
    control experiment for rational rotations.  The reference integral is a
    midpoint quadrature on a grid four times finer than x_grid, cached per
    (model, lam, E, N).
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if S < 0 or sigma <= 0:
        raise ValueError("require S >= 0 and sigma > 0")
    m = model.with_omega(omega) if omega is not None else model
    xs = np.asarray(x_grid, dtype=float)
    if xs.size < 1000:
        raise ValueError("x_grid must have at least 1000 nodes")
    if ref is None:
        ref = _torus_integral(m, float(lam), float(E), int(N), 4 * int(xs.size))
    acc = np.zeros(xs.shape)
    floored = 0
    for j in range(Q):
        u, nfl = _u_values(m, lam, E, N, (xs + j * m.omega) % 1.0)
        floored += nfl
        acc += u
    avg = acc / Q
    threshold = S * Q ** (-sigma)
    bad = int(np.count_nonzero(np.abs(avg - ref) >= threshold))
    return DeviationReport(
        Q=int(Q),
        threshold=float(threshold),
        bad_fraction=bad / xs.size,
        grid_size=int(xs.size),
        S=float(S),
        sigma=float(sigma),
        integral=float(ref),
        floored=floored,
    )


def ldt_decay_fit(reports):
    """Least-squares slope of log(bad_fraction) against -Q^sigma.

    Returns (c10_fit, monotone) where monotone means the bad fractions are
    non-increasing in Q and actually drop from first to last.  Raises AllZero
    when every report has bad_fraction == 0 (decay too fast to fit).
    """
    rs = sorted(reports, key=lambda r: r.Q)
    qs = [r.Q for r in rs]
    if len(set(qs)) < 4:
        raise ValueError("need at least 4 distinct Q values")
    sigmas = {r.sigma for r in rs}
    if len(sigmas) != 1:
        raise ValueError("reports mix different sigma values")
    sigma = sigmas.pop()
    bfs = [r.bad_fraction for r in rs]
    monotone = all(b2 <= b1 for b1, b2 in zip(bfs, bfs[1:])) and bfs[-1] < bfs[0]
    pts = [(q, b) for q, b in zip(qs, bfs) if b > 0.0]
    if not pts:
        raise AllZero("every bad_fraction is zero; decay too fast to fit")
    if len(pts) < 2:
        raise ValueError("need at least 2 nonzero bad fractions to fit")
    t = np.array([q**sigma for q, _ in pts])
    y = np.log([b for _, b in pts])
    slope, _ = np.polyfit(t, y, 1)
    return float(-slope), monotone
