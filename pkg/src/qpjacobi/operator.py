"""Finite-volume assembly of the block Jacobi operator and its regularized form.

A window [u, v] of sites carries phases x + n*omega for n in [u, v].  The
plain operator H has on-site blocks lam*F_n + r_sign*R_n and hopping blocks
-W_{n+1} / -W_{n+1}^T between sites n and n+1; it is undefined on pole
orbits.  The regularized matrix right-multiplies (H - E) by the diagonal of
denominator products over sqrt(1 + E^2), which cancels every diagonal pole,
so it is assembled entirely from numerator/denominator polynomials and is
finite at any phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np



@dataclass(frozen=True)
class OperatorParams:
    lam: float
    x: float
    E: float
    window: tuple

    def __post_init__(self):
        u, v = self.window
        if v < u:
            raise ValueError("window must satisfy v >= u")
        # lam == 0 is allowed: the free control experiments need it
        if self.lam < 0:
            raise ValueError("coupling lam must be >= 0")
        object.__setattr__(self, "window", (int(u), int(v)))

    @property
    def n_sites(self):
        u, v = self.window
        return v - u + 1


@dataclass(frozen=True)
class BlockTridiagonal:
    """Block-banded storage: N diagonal blocks, N-1 sub/super blocks, all l x l."""

    n_sites: int
    l: int
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n, l = self.n_sites, self.l
        for name, arr, shape in (
            ("diag", self.diag, (n, l, l)),
            ("lower", self.lower, (max(n - 1, 0), l, l)),
            ("upper", self.upper, (max(n - 1, 0), l, l)),
        ):
            a = np.array(arr, dtype=float).reshape(shape)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def dim(self):
        return self.n_sites * self.l

    def block(self, i, j):
        """1-based block accessor; zero outside the tridiagonal band."""
        if not (1 <= i <= self.n_sites and 1 <= j <= self.n_sites):
            raise IndexError("block index out of range")
        if i == j:
            return self.diag[i - 1]
        if i == j + 1:
            return self.lower[j - 1]
        if j == i + 1:
            return self.upper[i - 1]
        return np.zeros((self.l, self.l))

    def to_dense(self):
        n, l = self.n_sites, self.l
        out = np.zeros((n * l, n * l))
        for i in range(n):
            out[i * l : (i + 1) * l, i * l : (i + 1) * l] = self.diag[i]
        for i in range(n - 1):
            out[i * l : (i + 1) * l, (i + 1) * l : (i + 2) * l] = self.upper[i]
            out[(i + 1) * l : (i + 2) * l, i * l : (i + 1) * l] = self.lower[i]
        return out


def index_split(alpha, l, n_sites=None):
    """Split a 1-based flat index into (site offset p, intra-block index q).

    alpha = p*l + q with p in [0, N-1] and q in [1, l]; the map is bijective.
    """
    if alpha < 1:
        raise IndexError("flat index must be >= 1")
    if n_sites is not None and alpha > n_sites * l:
        raise IndexError("flat index out of range")
    p = (alpha - 1) // l
    return p, alpha - p * l


def assemble_hamiltonian(model, params):
    """H over the window: on-site lam*F + r_sign*R, hopping -W / -W^T.

    Raises PoleProximity (with the offending site) when the phase orbit
    comes within pole_tol of a diagonal denominator zero.
    """
    u, v = params.window
    n, l = params.n_sites, model.l
    lam, sign = params.lam, model.r_sign
    diag = np.empty((n, l, l))
    for idx, site in enumerate(range(u, v + 1)):
        y = model.site_phase(params.x, site)
        model.check_poles(y, site=site)
        diag[idx] = lam * model.f_values(y) + sign * model.r_values(y)
    upper = np.empty((max(n - 1, 0), l, l))
    lower = np.empty_like(upper)
    for idx in range(n - 1):
        y = model.site_phase(params.x, u + idx + 1)
        wv = model.w_values(y)
        upper[idx] = -wv
        lower[idx] = -wv.T
    return BlockTridiagonal(n, l, diag, lower, upper)


def assemble_regularized(model, params):
    """(H - E) right-multiplied by diag{M_n / sqrt(1+E^2)} over the window.

    Diagonal entries are built as
        lam*numF*denR + r_sign*numR*denF - E*denF*denR
    (never as a quotient times M), so the result is finite even at pole
    phases.
    """
    u, v = params.window
    n, l = params.n_sites, model.l
    lam, E, sign = params.lam, params.E, model.r_sign
    scale = 1.0 / math.sqrt(1.0 + E * E)
    phases = [model.site_phase(params.x, site) for site in range(u, v + 1)]
    mvals = [model.m_values(y) for y in phases]

    diag = np.empty((n, l, l))
    for idx, y in enumerate(phases):
        fden = [float(model.F[i][i].den(y)) for i in range(l)]
        rden = [float(model.R[i][i].den(y)) for i in range(l)]
        fnum = [float(model.F[i][i].num(y)) for i in range(l)]
        rnum = [float(model.R[i][i].num(y)) for i in range(l)]
        blk = np.empty((l, l))
        for a in range(l):
            for b in range(l):
                if a == b:
                    blk[a, a] = (
                        lam * fnum[a] * rden[a]
                        + sign * rnum[a] * fden[a]
                        - E * fden[a] * rden[a]
                    )
                else:
                    blk[a, b] = (lam * model.F[a][b](y) + sign * model.R[a][b](y)) * mvals[idx][b]
        diag[idx] = scale * blk

    upper = np.empty((max(n - 1, 0), l, l))
    lower = np.empty_like(upper)
    for idx in range(n - 1):
        y_next = phases[idx + 1]
        wv = model.w_values(y_next)
        upper[idx] = -scale * wv * mvals[idx + 1][None, :]
        lower[idx] = -scale * wv.T * mvals[idx][None, :]
    return BlockTridiagonal(n, l, diag, lower, upper)


def row_prefactors(model, params):
    """Flat vector of M_qq(x + site*omega) / sqrt(1+E^2) along the window.

    Left-multiplying the inverse of the regularized matrix by this diagonal
    recovers the Green's function of (H - E).
    """
    u, v = params.window
    scale = 1.0 / math.sqrt(1.0 + params.E * params.E)
    parts = [scale * model.m_values(model.site_phase(params.x, site)) for site in range(u, v + 1)]
    return np.concatenate(parts)


def hopping_sup_bound(model):
    """Coefficient-sum bound for sup_x of any regularized hopping entry."""
    best = 0.0
    for i in range(model.l):
        for j in range(model.l):
            prod = model.W[i][j] * model.F[j][j].den * model.R[j][j].den
            best = max(best, prod.coeff_abs_sum())
    return best


def onsite_sup_bound(model):
    """S1, S2, S3 with sup |Vt entry| <= lam*S1 + S2 + |E|*S3 at any phase."""
    s1 = s2 = s3 = 0.0
    for a in range(model.l):
        for b in range(model.l):
            if a == b:
                s1 = max(s1, (model.F[a][a].num * model.R[a][a].den).coeff_abs_sum())
                s2 = max(s2, (model.R[a][a].num * model.F[a][a].den).coeff_abs_sum())
                s3 = max(s3, (model.F[a][a].den * model.R[a][a].den).coeff_abs_sum())
            else:
                m_col = model.F[b][b].den * model.R[b][b].den
                s1 = max(s1, (model.F[a][b] * m_col).coeff_abs_sum())
                s2 = max(s2, (model.R[a][b] * m_col).coeff_abs_sum())
    return s1, s2, s3
