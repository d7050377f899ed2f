"""Non-tangential cones over real sets and the grid-scale Egorov construction.

The cone over lambda is {lambda} plus every z in the upper half-plane with
arg(z - lambda) in [pi/4, 3pi/4].  Given an operator function f sampled on
real points (boundary values) and inside cones, :func:`egorov_compact`
carves a finite union of closed intervals K on which f is uniformly
continuous up to the boundary, missing less than ``delta`` of the interval.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EgorovBudgetExceeded, InvalidInputError

QUARTER = math.pi / 4
ANGLE_TOL = 1e-12


def in_cone(lam, z) -> bool:
    """Whether ``z`` lies in the closed cone with vertex ``lam``."""
    z = complex(z)
    if z.imag < 0:
        raise InvalidInputError("cone membership is defined for Im z >= 0 only")
    d = z - lam
    if d == 0:
        return True
    if d.imag <= 0:
        return False
    # |Re d| <= Im d  <=>  arg d in [pi/4, 3pi/4]
    return abs(d.real) <= d.imag * (1 + ANGLE_TOL)


def segment_slope(a, b):
    """Angle in [0, pi] of the line through a and b, oriented upward."""
    a, b = complex(a), complex(b)
    lo, hi = (a, b) if a.imag <= b.imag else (b, a)
    return math.atan2(hi.imag - lo.imag, hi.real - lo.real)


def admissible(a, b):
    """Slope of [a, b] in [pi/4, 3pi/4], up to the rounding of the endpoints."""
    a, b = complex(a), complex(b)
    lo, hi = (a, b) if a.imag <= b.imag else (b, a)
    d = hi - lo
    slack = 8 * np.finfo(float).eps * (abs(a) + abs(b))
    return abs(d.real) <= d.imag * (1 + ANGLE_TOL) + slack


def segment_decompose(lam, z):
    """Replace [lam, z] by at most three admissible segments chained lam -> z.

    Each piece has slope in [pi/4, 3pi/4] and length at most |z - lam|.  The
    middle real vertex lam1 sits where the pi/4 (or 3pi/4) ray through z
    meets the axis; the first two pieces form a tent over [lam, lam1].
    """
    lam = float(lam)
    z = complex(z)
    if z.imag <= 0:
        raise InvalidInputError("segment_decompose needs Im z > 0")
    if admissible(lam, z):
        return [(complex(lam), z)]
    x, y = z.real - lam, z.imag
    side = 1.0 if x > 0 else -1.0
    gap = abs(x) - y
    lam1 = lam + side * gap
    z1 = complex(lam + side * gap / 2, gap / 2)
    return [(complex(lam), z1), (z1, complex(lam1)), (complex(lam1), z)]


@dataclass
class ConeRegion:
    """Finite union of disjoint sorted closed intervals plus a height cutoff."""

    intervals: list
    epsilon: float = 1.0

    def __post_init__(self):
        iv = sorted((float(a), float(b)) for a, b in self.intervals)
        merged = []
        for a, b in iv:
            if b < a:
                raise InvalidInputError(f"bad interval [{a}, {b}]")
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        self.intervals = merged

    @property
    def measure(self):
        return sum(b - a for a, b in self.intervals)

    def contains_real(self, lam):
        return any(a <= lam <= b for a, b in self.intervals)

    def contains(self, z):
        """Membership in the cone over K (truncated at height epsilon if set)."""
        z = complex(z)
        if z.imag < 0:
            return False
        if z.imag == 0:
            return self.contains_real(z.real)
        if self.epsilon is not None and z.imag > self.epsilon:
            return False
        # z sees the vertices [Re z - Im z, Re z + Im z]
        lo, hi = z.real - z.imag * (1 + ANGLE_TOL), z.real + z.imag * (1 + ANGLE_TOL)
        return any(a <= hi and b >= lo for a, b in self.intervals)

    def boundary_samples(self, h):
        """Points on the boundary of the truncated cone, spaced about ``h``."""
        eps = self.epsilon
        out = []
        for a, b in self.intervals:
            n = max(1, int(math.ceil((b - a) / h)))
            out.extend(complex(t) for t in np.linspace(a, b, n + 1))
        for a, b in self.intervals:
            for vertex, sgn in ((a, -1.0), (b, 1.0)):
                n = max(1, int(math.ceil(eps * math.sqrt(2) / h)))
                s = np.linspace(0.0, eps, n + 1)[1:]
                out.extend(vertex + sgn * s + 1j * s)
        top_lo = self.intervals[0][0] - eps if self.intervals else 0.0
        top_hi = self.intervals[-1][1] + eps if self.intervals else 0.0
        for x in np.arange(top_lo, top_hi + h / 2, h):
            z = complex(x, eps)
            if self.contains(z):
                out.append(z)
        return np.array(out)

    def grid(self, h):
        """Real sample points of K at spacing about ``h``."""
        pts = []
        for a, b in self.intervals:
            n = max(1, int(math.ceil((b - a) / h)))
            pts.extend(np.linspace(a, b, n + 1))
        return np.array(pts)

    def to_dict(self):
        return {"intervals": [list(iv) for iv in self.intervals], "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, d):
        return cls([tuple(iv) for iv in d["intervals"]], d["epsilon"])


def cone_of_set(K: ConeRegion):
    """Membership predicate and boundary sampler of the cone over ``K``."""
    if not K.intervals:
        raise InvalidInputError("K must be nonempty")
    return K.contains, K.boundary_samples


def carve_out_nullset(K: ConeRegion, bad_points, delta) -> ConeRegion:
    """Remove open intervals of total length ``delta`` around ``bad_points``."""
    bad = [float(p) for p in bad_points if K.contains_real(p)]
    if not bad:
        return ConeRegion(list(K.intervals), K.epsilon)
    half = delta / (2 * len(bad))
    pieces = list(K.intervals)
    for p in bad:
        nxt = []
        for a, b in pieces:
            if b <= p - half or a >= p + half:
                nxt.append((a, b))
                continue
            if a <= p - half:
                nxt.append((a, p - half))
            if b >= p + half:
                nxt.append((p + half, b))
        pieces = nxt
    return ConeRegion(pieces, K.epsilon)


@dataclass
class EgorovCertificate:
    """Output of the grid-scale Egorov construction.

    ``moduli`` lists ``(m, n0(m))``; ``witnesses`` holds, for every kept grid
    point and level m, the cone sample of largest deviation within radius
    1/n0(m) as ``(m, lambda, z, deviation)``.
    """

    K: ConeRegion
    delta: float
    interval: tuple
    grid_step: float
    thresholds: list
    moduli: list
    witnesses: list = field(repr=False)
    excluded_measure: float = 0.0

    def check(self):
        """Re-verify the stored bounds without evaluating anything."""
        thr = dict(zip(range(1, len(self.thresholds) + 1), self.thresholds))
        ok_w = all(dev < thr[m] for m, _, _, dev in self.witnesses)
        return ok_w and self.excluded_measure < self.delta

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "delta": self.delta,
            "grid_step": self.grid_step,
            "thresholds": self.thresholds,
            "moduli": [list(x) for x in self.moduli],
            "excluded_grid_measure": self.excluded_measure,
            "K": self.K.to_dict(),
            "witnesses": [[m, lam, [z.real, z.imag], dev] for m, lam, z, dev in self.witnesses],
        }

    @classmethod
    def from_dict(cls, d):
        """Rebuild a certificate from :meth:`to_dict` output, e.g. a run report."""
        wit = [(int(m), float(lam), complex(*z), float(dev)) for m, lam, z, dev in d["witnesses"]]
        return cls(ConeRegion.from_dict(d["K"]), float(d["delta"]), tuple(d["interval"]),
                   float(d["grid_step"]), list(d["thresholds"]),
                   [tuple(x) for x in d["moduli"]], wit, float(d["excluded_grid_measure"]))


def _cone_samples(levels, per_ray=4):
    """Offsets (relative to the vertex) tagged with the level they belong to.

    Level k covers radii in (1/n_{k+1}, 1/n_k]; each level gets ``per_ray``
    radii on the pi/4, pi/2 and 3pi/4 rays.
    """
    offs, tags = [], []
    dirs = [complex(math.cos(a), math.sin(a)) for a in (QUARTER, 2 * QUARTER, 3 * QUARTER)]
    for k, n in enumerate(levels):
        outer = 1.0 / n
        inner = 1.0 / levels[k + 1] if k + 1 < len(levels) else outer / 2
        for frac in np.linspace(1.0, 0.0, per_ray, endpoint=False):
            rad = inner + frac * (outer - inner)
            for d in dirs:
                offs.append(rad * d)
                tags.append(k)
    return np.array(offs), np.array(tags)


def egorov_compact(evaluator, interval, delta, grid_step=None, levels=None, m_max=8,
                   scale=1.0, threads=1, norm=None) -> EgorovCertificate:
    """Carve a compact K in ``interval`` where ``evaluator`` extends continuously to the cone.

    Parameters
    ----------
    evaluator : callable
        Maps a complex point to a matrix (or scalar).  Real arguments must
        return boundary values.
    interval : (float, float)
        The open interval I.
    delta : float
        Bound on the grid measure of I minus K.
    grid_step : float, optional
        lambda-grid spacing, default ``1e-3 * |I|``.
    levels : sequence of int, optional
        Increasing cone resolutions n; cone samples for level n have radius
        at most 1/n.  Default: powers of two up to 1024.
    m_max : int
        Deviation thresholds are ``scale / m`` for m = 1..m_max.

    Returns
    -------
    EgorovCertificate

    Raises
    ------
    EgorovBudgetExceeded
        If even the finest admissible choice of n0(m) leaves excluded grid
        measure >= delta.
    """
    a, b = map(float, interval)
    if not b > a:
        raise InvalidInputError("interval must have positive length")
    if delta <= 0:
        raise InvalidInputError("delta must be positive")
    h = grid_step or 1e-3 * (b - a)
    n_pts = int(round((b - a) / h))
    h = (b - a) / n_pts
    lams = a + (np.arange(n_pts) + 0.5) * h
    levels = list(levels or [2 ** k for k in range(11)])
    offs, tags = _cone_samples(levels)
    norm = norm or (lambda A: float(np.linalg.norm(np.atleast_2d(A), 2)))

    def row(lam):
        f0 = np.atleast_2d(np.asarray(evaluator(complex(lam)), dtype=complex))
        devs = np.array([norm(f0 - np.atleast_2d(np.asarray(evaluator(lam + o), dtype=complex)))
                         for o in offs])
        return devs

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(row, lams))
    else:
        rows = [row(lam) for lam in lams]
    dev = np.array(rows)  # (n_pts, n_samples)

    n_lev = len(levels)
    # sup over the cone truncated at radius 1/levels[k]: samples at level >= k
    per_level = np.full((n_pts, n_lev), -np.inf)
    arg_level = np.zeros((n_pts, n_lev), dtype=int)
    for k in range(n_lev):
        idx = np.nonzero(tags == k)[0]
        j = np.argmax(dev[:, idx], axis=1)
        per_level[:, k] = dev[np.arange(n_pts), idx[j]]
        arg_level[:, k] = idx[j]
    sup = np.empty_like(per_level)
    arg = np.empty_like(arg_level)
    sup[:, -1], arg[:, -1] = per_level[:, -1], arg_level[:, -1]
    for k in range(n_lev - 2, -1, -1):
        better = per_level[:, k] > sup[:, k + 1]
        sup[:, k] = np.where(better, per_level[:, k], sup[:, k + 1])
        arg[:, k] = np.where(better, arg_level[:, k], arg[:, k + 1])

    thresholds = [scale / m for m in range(1, m_max + 1)]
    keep = np.ones(n_pts, dtype=bool)
    moduli = []
    for m, thr in enumerate(thresholds, start=1):
        in_E = sup[:, -1] < thr  # E^m: the union over n is its finest member
        budget = delta / 2 ** (m + 1)
        k0 = n_lev - 1
        for k in range(n_lev):
            if h * np.count_nonzero(in_E & ~(sup[:, k] < thr)) < budget:
                k0 = k
                break
        moduli.append((m, levels[k0]))
        keep &= sup[:, k0] < thr

    excluded = h * np.count_nonzero(~keep)
    if excluded >= delta:
        worst = lams[np.argsort(-sup[:, -1])][:10]
        raise EgorovBudgetExceeded(excluded, delta, [float(w) for w in worst])

    intervals = []
    start = None
    for i in range(n_pts):
        if keep[i] and start is None:
            start = i
        if start is not None and (i == n_pts - 1 or not keep[i + 1]):
            lo = lams[start] if start == 0 else lams[start] - h / 2
            hi = lams[i] if i == n_pts - 1 else lams[i] + h / 2
            intervals.append((lo, hi))
            start = None
    K = ConeRegion(intervals, epsilon=1.0 / min(n0 for _, n0 in moduli))

    witnesses = []
    for m, n0 in moduli:
        k0 = levels.index(n0)
        for i in np.nonzero(keep)[0]:
            j = arg[i, k0]
            witnesses.append((m, float(lams[i]), complex(lams[i] + offs[j]), float(sup[i, k0])))
    return EgorovCertificate(K, float(delta), (a, b), h, thresholds, moduli, witnesses,
                             float(excluded))
