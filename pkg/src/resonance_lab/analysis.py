"""Continuation, branch points and classification of coupling resonances.

Resonance branches are continued by nearest matching with adaptive
bisection: a step is accepted only when the nearest candidate is at least
``margin`` times closer than the runner-up, so branches are never swapped
silently.  Collisions of eigenvalues of T_z J are located through the
discriminant prod_{i<j} (rho_i - rho_j)^2, a symmetric and hence
single-valued function of z, and classified by the permutation the branches
undergo around small loops.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la
from scipy.optimize import linear_sum_assignment

from .carving import ConeRegion
from .errors import (ClusterLeakError, InvalidInputError, ResonanceLabError,
                     SingularPointError, UnresolvedSingularityError, UnsupportedError)
from .models import ModelKind
from .resolvent import TAU_SIGMA, product_TJ, resonance_spectrum

R_ABS_FACTOR = 1e8
TAU_REAL = 1e-6
REAL_MARGIN = 1e-6
MATCH_MARGIN = 3.0
DIVERGENCE_WINDOW = 5


class BranchStatus(str, enum.Enum):
    OK = "ok"
    HIT_BRANCH_POINT = "hit_branch_point"
    DIVERGED = "diverged"
    LEFT_DOMAIN = "left_domain"


@dataclass
class BranchTrajectory:
    path: list
    values: list
    status: BranchStatus
    boundary_limit: Optional[complex] = None
    detail: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.values[-1]

    def max_jump(self):
        if len(self.values) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(np.asarray(self.values)))))


@dataclass
class SingularityReport:
    location: complex
    kind: str  # "regular" | "branch" | "absorbing_suspect"
    period: Optional[int]
    monodromy: tuple
    evidence: dict = field(default_factory=dict)

    def to_dict(self):
        ev = {k: (_jsonable(v)) for k, v in self.evidence.items()}
        return {"location": [self.location.real, self.location.imag], "kind": self.kind,
                "period": self.period, "monodromy": list(self.monodromy), "evidence": ev}


@dataclass
class ImpactingSet:
    lam: float
    branches: list  # (branch_id, boundary value)
    others: list = field(default_factory=list)  # (branch_id, terminal value, status)
    trajectories: dict = field(default_factory=dict, repr=False)
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "lambda": self.lam,
            "impacting": [[b, [v.real, v.imag]] for b, v in self.branches],
            "others": [[b, [v.real, v.imag], s] for b, v, s in self.others],
            "metadata": {k: _jsonable(v) for k, v in self.metadata.items()},
        }


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def divergence_radius(model, z, tau_sigma=TAU_SIGMA):
    """R_abs = 1e8 ||J|| / tau, tau the absolute zero threshold at z."""
    TJ = product_TJ(model, z)
    tau = tau_sigma * max(np.linalg.norm(TJ, 2), np.finfo(float).tiny)
    return R_ABS_FACTOR * np.linalg.norm(model.coupling_J, 2) / tau


def _resonances(model, z, tau_sigma):
    return resonance_spectrum(model, z, tau_sigma).resonances()


def memoized_resonances(model, tau_sigma=TAU_SIGMA):
    """z -> resonances with a per-instance cache, for many branches on one path."""
    cache = {}

    def fn(z):
        if z not in cache:
            cache[z] = _resonances(model, z, tau_sigma)
        return cache[z]
    return fn


def continue_branch(model, start_z, start_r, path, *, margin=MATCH_MARGIN, eta_jump=0.05,
                    max_bisect=30, tau_sigma=TAU_SIGMA, r_abs=None, start_tol=1e-6,
                    evaluator=None):
    """Continue the resonance branch through ``start_r`` at ``start_z`` along ``path``.

    Each step picks the current resonance nearest the previous value.  The
    step is halved while the runner-up is closer than ``margin`` times the
    nearest distance, or while the jump exceeds ``eta_jump * (1 + |r|)``.
    ``evaluator`` optionally replaces the z -> resonances map (e.g. a
    :func:`memoized_resonances` shared between branches).
    """
    res_at = evaluator or (lambda z: _resonances(model, z, tau_sigma))
    start_z = complex(start_z)
    rs = res_at(start_z)
    if len(rs) == 0:
        raise InvalidInputError(f"no resonances at {start_z}")
    d = np.abs(rs - start_r)
    i0 = int(np.argmin(d))
    if d[i0] > start_tol * (1 + abs(start_r)):
        raise InvalidInputError(f"{start_r} is not a resonance at {start_z} (off by {d[i0]:.3g})")
    if r_abs is None:
        r_abs = divergence_radius(model, start_z, tau_sigma)
    current = complex(rs[i0])
    zs, vals = [start_z], [current]
    z_prev = start_z

    def done(status, **detail):
        limit = None
        if status is BranchStatus.OK and zs[-1].imag == 0:
            limit = vals[-1]
        return BranchTrajectory(zs, vals, status, limit, detail)

    for target in path:
        target = complex(target)
        if target == z_prev:
            continue
        min_step = abs(target - z_prev) * 2.0 ** (-max_bisect)
        stack = [target]
        while stack:
            zt = stack[-1]
            try:
                rs = res_at(zt)
            except (SingularPointError, UnsupportedError) as exc:
                return done(BranchStatus.LEFT_DOMAIN, at=zt, reason=str(exc))
            if len(rs) == 0:
                return done(BranchStatus.DIVERGED, at=zt, reason="branch merged into infinity")
            d = np.abs(rs - current)
            order = np.argsort(d)
            d1 = d[order[0]]
            if len(rs) > 1:
                d2 = d[order[1]]
                same = abs(rs[order[1]] - rs[order[0]]) <= 1e-12 * (1 + abs(current))
            else:
                d2, same = math.inf, False
            ok = (same or d2 >= margin * d1) and d1 <= eta_jump * (1 + abs(current))
            if ok:
                current = complex(rs[order[0]])
                zs.append(zt)
                vals.append(current)
                z_prev = zt
                stack.pop()
                tail = np.abs(vals[-DIVERGENCE_WINDOW:])
                if (len(tail) == DIVERGENCE_WINDOW and np.all(tail > r_abs)
                        and np.all(np.diff(tail) > 0)):
                    return done(BranchStatus.DIVERGED, at=zt, r_abs=r_abs)
                continue
            if abs(zt - z_prev) <= min_step:
                return done(BranchStatus.HIT_BRANCH_POINT, interval=(z_prev, zt),
                            nearest=d1, runner_up=d2)
            stack.append(0.5 * (z_prev + zt))
    return done(BranchStatus.OK)


# ---------------------------------------------------------------- clusters

def cluster_eigenvalues(model, center=None, radius=None):
    """z -> eigenvalues of T_z J, optionally restricted to a disc in the sigma plane."""
    def fn(z):
        sig = la.eigvals(product_TJ(model, z))
        if center is None:
            return sig
        return sig[np.abs(sig - center) < radius]
    return fn


def discriminant(values):
    """prod_{i<j} (v_i - v_j)^2; 1 for fewer than two values."""
    v = np.asarray(values, dtype=complex)
    out = 1.0 + 0j
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            out *= (v[i] - v[j]) ** 2
    return out


def track_cluster(fn, zs, margin=MATCH_MARGIN, max_depth=20):
    """Follow all eigenvalues returned by ``fn`` along the polyline ``zs``.

    Returns the array of tracked values at the end, ordered as the values
    at the start (``fn(zs[0])``).
    """
    zs = [complex(z) for z in zs]
    cur = np.asarray(fn(zs[0]), dtype=complex)
    z_prev = zs[0]
    for target in zs[1:]:
        stack = [(target, 0)]
        while stack:
            zt, depth = stack[-1]
            nxt = np.asarray(fn(zt), dtype=complex)
            if len(nxt) != len(cur):
                raise ClusterLeakError(f"cluster size changed from {len(cur)} to {len(nxt)} at {zt}")
            C = np.abs(cur[:, None] - nxt[None, :])
            rows, cols = linear_sum_assignment(C)
            ok = True
            if len(cur) > 1:
                for r_, c_ in zip(rows, cols):
                    others = np.delete(C[r_], c_)
                    scale = 1e-12 * (1 + abs(cur[r_]))
                    if np.min(others) < margin * C[r_, c_] and C[r_, c_] > scale:
                        # tolerate exact degeneracies among the candidates
                        k = int(np.argmin(others))
                        k = k if k < c_ else k + 1
                        if abs(nxt[k] - nxt[c_]) > scale:
                            ok = False
                            break
            if ok or depth >= max_depth:
                if not ok:
                    raise UnresolvedSingularityError(f"cannot separate branches near {zt}")
                new = np.empty_like(cur)
                new[rows] = nxt[cols]
                cur = new
                z_prev = zt
                stack.pop()
            else:
                stack.append((0.5 * (z_prev + zt), depth + 1))
    return cur


def _permutation(start, end, tol=1e-8):
    """perm[i] = j when the value that started as start[i] ends at start[j]."""
    C = np.abs(end[:, None] - start[None, :])
    rows, cols = linear_sum_assignment(C)
    perm = np.empty(len(start), dtype=int)
    perm[rows] = cols
    scale = tol * (1 + np.max(np.abs(start), initial=0.0))
    # exact degeneracies carry no label; canonicalise to the identity
    for i in range(len(start)):
        j = perm[i]
        if j != i and abs(start[i] - start[j]) <= scale:
            perm[i] = i
    if len(set(perm.tolist())) != len(perm):
        perm = np.arange(len(start))
    return tuple(int(p) for p in perm)


def circle(center, radius, n=96, start_angle=0.0):
    t = start_angle + 2 * np.pi * np.arange(n + 1) / n
    return center + radius * np.exp(1j * t)


def loop_monodromy(fn, zs):
    """Permutation of the cluster after traversing the closed polyline ``zs``."""
    zs = list(zs)
    if zs[0] != zs[-1]:
        zs.append(zs[0])
    start = np.asarray(fn(zs[0]), dtype=complex)
    end = track_cluster(fn, zs)
    return _permutation(start, end)


def transport_labels(fn, z_from, z_to):
    """Index map i -> j taking fn(z_from)[i] to fn(z_to)[j] along the segment."""
    tracked = track_cluster(fn, np.linspace(complex(z_from), complex(z_to), 16))
    target = np.asarray(fn(complex(z_to)), dtype=complex)
    rows, cols = linear_sum_assignment(np.abs(tracked[:, None] - target[None, :]))
    out = np.empty(len(target), dtype=int)
    out[rows] = cols
    return tuple(int(j) for j in out)


def conjugate_perm(p, labels):
    """Express ``p`` (in the labels that ``labels`` maps to) in the source labels."""
    inv = np.empty(len(labels), dtype=int)
    inv[list(labels)] = np.arange(len(labels))
    return tuple(int(inv[p[labels[i]]]) for i in range(len(labels)))


def lasso_monodromy(fn, base, center, radius, n=96):
    """Monodromy of the lasso base -> circle(center, radius) -> base."""
    base = complex(base)
    ang = np.angle(base - center)
    ring = list(circle(center, radius, n, start_angle=ang))
    entry = ring[0]
    leg = list(np.linspace(base, entry, 24))
    zs = leg + ring[1:] + leg[::-1][1:]
    return loop_monodromy(fn, zs)


def cycles(perm):
    seen, out = set(), []
    for i in range(len(perm)):
        if i in seen:
            continue
        c, j = [], i
        while j not in seen:
            seen.add(j)
            c.append(j)
            j = perm[j]
        out.append(c)
    return out


def compose(p, q):
    """Apply ``p`` then ``q``."""
    return tuple(q[p[i]] for i in range(len(p)))


def _winding(fn_d, center, radius, n=128):
    vals = np.array([fn_d(z) for z in circle(center, radius, n)])
    ang = np.unwrap(np.angle(vals))
    return int(round((ang[-1] - ang[0]) / (2 * np.pi)))


def detect_branch_points(model, region, k=None, center=None, radius=None, grid=(41, 41),
                         gap_min=1e-3, refine_tol=1e-11, loop_radius=None):
    """Zeros of the cluster discriminant in ``region`` with their monodromy.

    ``region`` is ``(x0, x1, y0, y1)``.  Without ``center``/``radius`` the
    cluster is the whole spectrum of T_z J; otherwise it is the set of
    eigenvalues inside that sigma-plane disc, which must hold exactly ``k``
    values everywhere on the grid and stay ``gap_min`` away from the disc
    boundary along the region boundary.
    """
    x0, x1, y0, y1 = map(float, region)
    fn = cluster_eigenvalues(model, center, radius)
    xs = np.linspace(x0, x1, grid[0])
    ys = np.linspace(y0, y1, grid[1])
    Z = xs[None, :] + 1j * ys[:, None]
    eigs = [[fn(z) for z in row] for row in Z]
    sizes = {len(e) for row in eigs for e in row}
    if center is not None:
        if sizes != {k}:
            raise ClusterLeakError(f"cluster sizes {sorted(sizes)} on the region, expected {k}")
        edge = [eigs[0], eigs[-1], [r[0] for r in eigs], [r[-1] for r in eigs]]
        gap = min(np.min(np.abs(np.abs(e - center) - radius)) for side in edge for e in side)
        if gap < gap_min:
            raise ClusterLeakError(f"cluster gap {gap:.3g} < {gap_min:.3g} on the region boundary")
    k = k or max(sizes)
    if k <= 1:
        return []

    def fn_d(z):
        return discriminant(fn(z))

    A = np.array([[abs(discriminant(e)) for e in row] for row in eigs])
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    cands = []
    for i in range(1, A.shape[0] - 1):
        for j in range(1, A.shape[1] - 1):
            patch = A[i - 1:i + 2, j - 1:j + 2]
            if A[i, j] <= patch.min():
                cands.append(Z[i, j])
    zeros = []
    for z in cands:
        z = _zoom_minimum(fn_d, z, hx, hy, refine_tol)
        if not (x0 < z.real < x1 and y0 < z.imag < y1):
            continue
        if any(abs(z - w) < 0.5 * min(hx, hy) for w in zeros):
            continue
        wind = _winding(fn_d, z, 0.25 * min(hx, hy))
        if wind >= 1:
            zeros.append(z)
    reports = []
    for z in zeros:
        sep = [abs(z - w) for w in zeros if w is not z] + [hx, hy]
        if model.kind is not ModelKind.SYNTHETIC_FAMILY:
            sep.append(2 * z.imag)
        rho = loop_radius or 0.3 * min(sep)
        perm = loop_monodromy(fn, circle(z, rho))
        cyc = [c for c in cycles(perm) if len(c) > 1]
        period = max((len(c) for c in cyc), default=None)
        reports.append(SingularityReport(
            location=complex(z),
            kind="branch" if cyc else "regular",
            period=period,
            monodromy=perm,
            evidence={"abs_discriminant": float(abs(fn_d(z))), "winding": _winding(fn_d, z, rho),
                      "loop_radius": rho},
        ))
    return reports


def _zoom_minimum(f, z, hx, hy, tol, n=11, shrink=3.0):
    wx, wy = hx, hy
    best = complex(z)
    while max(wx, wy) > tol:
        xs = best.real + np.linspace(-wx, wx, n)
        ys = best.imag + np.linspace(-wy, wy, n)
        vals = [(abs(f(complex(x, y))), complex(x, y)) for y in ys for x in xs]
        best = min(vals, key=lambda t: t[0])[1]
        wx, wy = wx / shrink, wy / shrink
    return best


def _default_probe_radius(model, z):
    if model.kind is ModelKind.SYNTHETIC_FAMILY:
        return 0.05
    return min(0.05, 0.5 * z.imag)


def classify_singularity(model, candidate, radius=None, n_rays=8, tau_sigma=TAU_SIGMA,
                         r_abs=None):
    """Classify ``candidate`` as regular, a finite-period branch point or absorbing-suspect.

    Monodromy is measured on loops at ``radius`` and ``radius / 2``; a
    mismatch raises :class:`UnresolvedSingularityError`.  With trivial
    monodromy, every resonance is continued inward along ``n_rays`` rays
    towards the candidate; if each ray carries a branch escaping past R_abs
    the point is an absorbing suspect.
    """
    z0 = complex(candidate)
    rho = radius or _default_probe_radius(model, z0)
    if rho <= 0:
        raise InvalidInputError("probe radius must be positive")
    fn = cluster_eigenvalues(model)
    p1 = loop_monodromy(fn, circle(z0, rho))
    # the inner loop starts at z0 + rho/2, where the sorted labels may differ
    p2 = conjugate_perm(loop_monodromy(fn, circle(z0, rho / 2)),
                        transport_labels(fn, z0 + rho, z0 + rho / 2))
    if p1 != p2:
        raise UnresolvedSingularityError(
            f"monodromy {p1} at radius {rho:.3g} differs from {p2} at {rho / 2:.3g}")
    cyc = [c for c in cycles(p1) if len(c) > 1]
    evidence = {"radii": [rho, rho / 2], "abs_discriminant": float(abs(discriminant(fn(z0))))}
    if cyc:
        return SingularityReport(z0, "branch", max(len(c) for c in cyc), p1, evidence)

    diverged_rays = 0
    for a in 2 * np.pi * np.arange(n_rays) / n_rays:
        d = np.exp(1j * a)
        start = z0 + rho * d
        path = z0 + rho * np.geomspace(1.0, 1e-6, 40)[1:] * d
        hit = False
        res_at = memoized_resonances(model, tau_sigma)
        for r in res_at(start):
            traj = continue_branch(model, start, r, path, tau_sigma=tau_sigma, r_abs=r_abs,
                                   evaluator=res_at)
            if traj.status is BranchStatus.DIVERGED:
                hit = True
                break
        diverged_rays += hit
    evidence["diverged_rays"] = diverged_rays
    evidence["n_rays"] = n_rays
    kind = "absorbing_suspect" if diverged_rays == n_rays else "regular"
    return SingularityReport(z0, kind, None, p1, evidence)


# ---------------------------------------------------------------- impacting

def default_ladder(model, top=1.0, bottom=2.0 ** -14):
    ys = list(np.geomspace(top, bottom, 15))
    if model.is_finite or model.has_boundary_values:
        ys.append(0.0)
    return ys


def find_impacting(model, lam, y_ladder=None, tau_real=TAU_REAL, margin=REAL_MARGIN,
                   h_perturb=1e-3, from_below=False, tau_sigma=TAU_SIGMA):
    """Branches whose boundary value at ``lam`` is real and in [0, 1].

    Every resonance at the top of the ladder is continued down the vertical
    through ``lam``.  Branch ids are positions in the top-of-ladder list
    sorted by (Re, Im).  If a branch point sits on the vertical, the ladder
    is retried at ``lam +- h_perturb`` and the shift is recorded.
    """
    lam = float(lam)
    ys = list(y_ladder) if y_ladder is not None else default_ladder(model)
    if from_below:
        if not model.is_finite:
            raise UnsupportedError("lower half-plane approach is available for finite models only")
        ys = [-y for y in ys]
    meta = {}
    for shift in (0.0, h_perturb, -h_perturb):
        x = lam + shift
        path = [complex(x, y) for y in ys]
        top = path[0]
        res_at = memoized_resonances(model, tau_sigma)
        rs = res_at(top)
        rs = rs[np.lexsort((rs.imag, rs.real))]
        trajs = {b: continue_branch(model, top, r, path[1:], tau_sigma=tau_sigma,
                                    evaluator=res_at)
                 for b, r in enumerate(rs)}
        if not any(t.status is BranchStatus.HIT_BRANCH_POINT for t in trajs.values()):
            break
        meta.setdefault("retries", []).append(x)
    if shift:
        meta["perturbed_to"] = lam + shift
    meta["ladder"] = ys
    hits, others = [], []
    for b, t in trajs.items():
        v = t.final
        if (t.status is BranchStatus.OK and abs(v.imag) < tau_real
                and -margin <= v.real <= 1 + margin):
            hits.append((b, complex(v)))
        else:
            others.append((b, complex(v), t.status.value))
    return ImpactingSet(lam, hits, others, trajs, meta)


def _anchor_value(model, lam, value, height, tau_sigma):
    """Continue a boundary value at ``lam`` straight up to ``lam + i height``."""
    ys = list(np.geomspace(2.0 ** -14, height, 15))
    traj = continue_branch(model, complex(lam), value, [complex(lam, y) for y in ys],
                           tau_sigma=tau_sigma)
    return traj


@dataclass
class SingleValuednessReport:
    count: int
    branches: list  # dicts per global branch
    branch_points: list
    height: float
    passed: bool

    def to_dict(self):
        return {"count": self.count, "branches": _jsonable(self.branches),
                "branch_points": [r.to_dict() for r in self.branch_points],
                "height": self.height, "passed": self.passed}


def verify_single_valuedness(model, K: ConeRegion, impacting, height=None, mesh=(8, 3),
                             tau_sigma=TAU_SIGMA, detect_grid=(21, 11)):
    """Check impacting branches for trivial monodromy over a neighbourhood of K.

    ``impacting`` is an iterable of :class:`ImpactingSet` on the lambda-grid
    of K.  Each impacting boundary value is lifted to height ``height``,
    labelled by continuation to a common reference point, and continued
    around every cell of a mesh over each component of K.
    """
    sets = [s for s in impacting if s.branches]
    h = float(height or min(K.epsilon or 0.5, 0.5))
    branch_points = []
    for a, b in K.intervals:
        if b - a <= 0:
            continue
        try:
            branch_points.extend(detect_branch_points(model, (a, b, h / 20, h), grid=detect_grid))
        except ResonanceLabError:
            pass
    if not sets:
        return SingleValuednessReport(0, [], branch_points, h, True)

    lo, hi = K.intervals[0][0], K.intervals[-1][1]
    z_ref = complex(0.5 * (lo + hi), h)
    labelled = {}
    for s in sets:
        for _, v in s.branches:
            up = _anchor_value(model, s.lam, v, h, tau_sigma)
            if up.status is not BranchStatus.OK:
                continue
            across = continue_branch(model, up.path[-1], up.final, [z_ref], tau_sigma=tau_sigma)
            if across.status is not BranchStatus.OK:
                continue
            key = None
            for k_, rec in labelled.items():
                if abs(rec["ref_value"] - across.final) <= 1e-6 * (1 + abs(across.final)):
                    key = k_
            if key is None:
                key = len(labelled)
                labelled[key] = {"ref_value": across.final, "anchors": []}
            labelled[key]["anchors"].append((s.lam, up.path[-1], up.final))

    out = []
    all_ok = True
    for key, rec in labelled.items():
        lam, z_anchor, r_anchor = rec["anchors"][0]
        failures, n_loops = [], 0
        for a, b in K.intervals:
            xs = np.linspace(a, b, mesh[0] + 1)
            ys = np.linspace(h / 20, h, mesh[1] + 1)
            for i in range(mesh[0]):
                for j in range(mesh[1]):
                    corner = complex(xs[i], ys[j])
                    to_corner = continue_branch(model, z_anchor, r_anchor, [corner],
                                                tau_sigma=tau_sigma)
                    if to_corner.status is not BranchStatus.OK:
                        failures.append({"cell": [i, j], "reason": to_corner.status.value})
                        continue
                    loop = [complex(xs[i + 1], ys[j]), complex(xs[i + 1], ys[j + 1]),
                            complex(xs[i], ys[j + 1]), corner]
                    around = continue_branch(model, corner, to_corner.final, loop,
                                             tau_sigma=tau_sigma)
                    n_loops += 1
                    back = around.final
                    if (around.status is not BranchStatus.OK
                            or abs(back - to_corner.final) > 1e-8 * (1 + abs(back))):
                        failures.append({"cell": [i, j], "reason": around.status.value,
                                         "returned": back})
        passed = not failures
        all_ok &= passed
        out.append({"id": key, "reference_value": rec["ref_value"],
                    "lambdas": [x for x, _, _ in rec["anchors"]], "loops": n_loops,
                    "failures": failures, "passed": passed})
    return SingleValuednessReport(len(labelled), out, branch_points, h, all_ok)


def ray_survival_stats(model, z0, region, n_rays=360, step=0.01, r0=None,
                       tau_sigma=TAU_SIGMA, max_bisect=30):
    """Fraction of rays from ``z0`` to the boundary of ``region`` where continuation fails."""
    z0 = complex(z0)
    x0, x1, y0, y1 = map(float, region)
    if not (x0 < z0.real < x1 and y0 < z0.imag < y1):
        raise InvalidInputError("z0 must lie inside the region")
    rs = _resonances(model, z0, tau_sigma)
    if r0 is None:
        r0 = rs[np.lexsort((rs.imag, rs.real))][0]
    failed = []
    for a in 2 * np.pi * np.arange(n_rays) / n_rays:
        d = complex(math.cos(a), math.sin(a))
        ts = []
        if d.real > 1e-15:
            ts.append((x1 - z0.real) / d.real)
        if d.real < -1e-15:
            ts.append((x0 - z0.real) / d.real)
        if d.imag > 1e-15:
            ts.append((y1 - z0.imag) / d.imag)
        if d.imag < -1e-15:
            ts.append((y0 - z0.imag) / d.imag)
        t_max = min(ts)
        t = list(np.arange(step, t_max, step)) + [t_max]
        traj = continue_branch(model, z0, r0, [z0 + s * d for s in t], tau_sigma=tau_sigma,
                               max_bisect=max_bisect)
        if traj.status is not BranchStatus.OK:
            failed.append((float(a), traj.status.value))
    return {"n_rays": n_rays, "step": step, "n_failed": len(failed),
            "fraction": len(failed) / n_rays, "failed": failed}


def monodromy_closure(model, center, radius, zeros, lasso_radius, n=192):
    """Compare the outer-loop monodromy with the ordered product of lassos.

    The base point is the bottom of the outer circle; going around
    counter-clockwise from there meets the enclosed zeros in increasing
    order of arg(zero - base).
    """
    fn = cluster_eigenvalues(model)
    center = complex(center)
    base = center - 1j * radius
    order = sorted(zeros, key=lambda w: np.angle(complex(w) - base))
    total = tuple(range(len(fn(base))))
    for w in order:
        total = compose(total, lasso_monodromy(fn, base, complex(w), lasso_radius))
    outer = loop_monodromy(fn, circle(center, radius, n, start_angle=-np.pi / 2))
    return {"outer": outer, "product": total, "holds": outer == total}
