"""Brute-force eigenvalue crossings of H0 + sV through a level lambda.

The crossing couplings s in [0, 1] are exactly the real coupling resonances
at lambda lying in [0, 1], so this module is the ground truth against which
resonance detection is checked on finite models.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidInputError, UnsupportedError

ENDPOINT_TOL = 1e-8
BISECT_TOL = 1e-10


@dataclass(frozen=True)
class CrossingRecord:
    s_star: float
    direction: int
    eigen_index: int


def _sorted_eigs(h0, V, s):
    return np.linalg.eigvalsh(h0 + s * V)


def _bisect(f, lo, hi, flo):
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossings(model, lam, grid_n=2001):
    """All s in [0, 1] where lambda is an eigenvalue of H0 + sV, with directions.

    Sign changes of (sorted eigenvalue - lambda) on a grid are refined by
    bisection; a cell where an eigenvalue curve dips through lambda and back
    is split at the curve's extremum first.
    """
    if not model.is_finite:
        raise UnsupportedError("crossings needs a finite model (truncate first)")
    h0 = np.asarray(model.h0)
    V = model.perturbation()
    lam = float(lam)
    scale = max(1.0, abs(lam))
    for s in (0.0, 1.0):
        if np.min(np.abs(_sorted_eigs(h0, V, s) - lam)) <= ENDPOINT_TOL * scale:
            raise InvalidInputError(f"lambda={lam} is an eigenvalue of H0 + {s}V")
    if np.max(np.abs(V), initial=0.0) == 0.0:
        return []

    grid = np.linspace(0.0, 1.0, grid_n)
    E = np.array([_sorted_eigs(h0, V, s) for s in grid]) - lam
    records = []
    for k in range(E.shape[1]):
        def f(s, k=k):
            return _sorted_eigs(h0, V, s)[k] - lam

        brackets = []
        col = E[:, k]
        for i in range(grid_n - 1):
            if (col[i] > 0) != (col[i + 1] > 0):
                brackets.append((grid[i], grid[i + 1], col[i]))
        # curves that touch lambda between grid points without a net sign change
        for i in range(1, grid_n - 1):
            a, b, c = col[i - 1], col[i], col[i + 1]
            if not ((a > 0) == (b > 0) == (c > 0)):
                continue
            sgn = 1.0 if b > 0 else -1.0
            if not (sgn * b <= sgn * a and sgn * b <= sgn * c):
                continue
            res = minimize_scalar(lambda s: sgn * f(s), bounds=(grid[i - 1], grid[i + 1]),
                                  method="bounded", options={"xatol": 1e-13})
            if res.fun < 0:
                brackets.append((grid[i - 1], res.x, a))
                brackets.append((res.x, grid[i + 1], sgn * res.fun))
        found = []
        for lo, hi, flo in brackets:
            s_star = _bisect(f, lo, hi, flo)
            if any(abs(s_star - t) < 10 * BISECT_TOL for t in found):
                continue
            found.append(s_star)
            direction = 1 if flo < 0 else -1
            records.append(CrossingRecord(float(s_star), direction, k))
    records.sort(key=lambda r: (r.s_star, r.eigen_index))
    return records


def net_flow(records):
    """Signed number of crossings."""
    return int(sum(r.direction for r in records))


def crossing_direction_hf(model, record):
    """Sign of <u, V u> at the crossing (first-order perturbation theory)."""
    V = model.perturbation()
    w, U = np.linalg.eigh(np.asarray(model.h0) + record.s_star * V)
    u = U[:, record.eigen_index]
    return int(np.sign(np.real(u.conj() @ V @ u)))
