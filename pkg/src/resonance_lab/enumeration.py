"""Continuous enumeration of eigenvalues along a sampled path.

Consecutive spectra are matched by the same augmented assignment that
defines the multiset metric.  A branch matched to the base point ends there;
a value emerging from the base point starts a fresh branch.  Since the base
point has infinite multiplicity, identity through it is not defined.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import RefinementFailure, RefinementNeeded
from .multiset import BasedMultiset, NormSpec, multiset_distance, optimal_matching

COLLISION_TOL = 1e-9


@dataclass
class SpectralPath:
    params: list
    spectra: list

    def __post_init__(self):
        self.params = [float(t) for t in self.params]
        if len(self.params) != len(self.spectra):
            raise ValueError("params and spectra differ in length")
        if not self.params:
            raise ValueError("empty path")
        if np.any(np.diff(self.params) <= 0):
            raise ValueError("params must be strictly increasing")
        self.spectra = [s if isinstance(s, BasedMultiset) else BasedMultiset.from_values(s)
                        for s in self.spectra]

    @classmethod
    def sample(cls, evaluator, params):
        return cls(list(params), [evaluator(t) for t in params])

    def step_distances(self, phi=NormSpec()):
        return np.array([multiset_distance(a, b, phi)
                         for a, b in zip(self.spectra[:-1], self.spectra[1:])])


@dataclass
class Branch:
    """Values of one selected function on the parameter indices start..start+len-1.

    A branch born from (or absorbed into) the base point carries an explicit
    0 at that end.
    """

    start: int
    values: list = field(default_factory=list)

    @property
    def stop(self):
        return self.start + len(self.values)

    def max_jump(self):
        if len(self.values) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(np.asarray(self.values)))))


@dataclass
class SelectedFunctions:
    params: list
    branches: list

    def values_at(self, m):
        """Nonzero branch values at parameter index ``m``."""
        out = [b.values[m - b.start] for b in self.branches if b.start <= m < b.stop]
        return BasedMultiset.from_values(out)

    def max_jump(self):
        return max((b.max_jump() for b in self.branches), default=0.0)

    def escape_count(self, radius):
        """Number of branches leaving the open disc of ``radius`` around 0."""
        return sum(1 for b in self.branches if np.max(np.abs(b.values)) > radius)


def _pair_values(a, b, pairs):
    return [(a[i] if i is not None else 0j, b[j] if j is not None else 0j) for i, j in pairs]


def _same_pairing(p, q, tol):
    if len(p) != len(q):
        return False
    P = np.array(p, dtype=complex)
    Q = np.array(q, dtype=complex)
    C = np.maximum(np.abs(P[:, None, 0] - Q[None, :, 0]), np.abs(P[:, None, 1] - Q[None, :, 1]))
    rows, cols = linear_sum_assignment(C)
    return bool(np.max(C[rows, cols]) <= tol)


def _is_ambiguous(a, b, cost, pairs, phi, tol):
    """True when a different value pairing attains the optimal cost within tol."""
    na, nb = len(a), len(b)
    n = na + nb
    best = _pair_values(a, b, pairs)
    scale = max(1.0, float(np.max(np.abs(np.concatenate([a, b])), initial=0.0)))
    for i, j in pairs:
        if i is not None and j is not None and a[i] == b[j]:
            continue
        mask = np.zeros((n, n), dtype=bool)
        if i is not None and j is not None:
            mask[i, j] = True
        elif i is not None:
            mask[i, nb:] = True
        else:
            mask[na:, j] = True
        alt_cost, alt_pairs = optimal_matching(a, b, phi, forbidden=mask)
        if alt_cost <= cost + tol * scale:
            if not _same_pairing(best, _pair_values(a, b, alt_pairs), tol * scale):
                return True
    return False


def enumerate_path(path: SpectralPath, phi=NormSpec(), collision_tol=COLLISION_TOL,
                   check_ambiguity=True) -> SelectedFunctions:
    """Selected continuous functions through the spectra of ``path``.

    Raises :class:`RefinementNeeded` carrying ``(t_m, t_{m+1})`` when the
    optimal matching of a step is not unique up to ``collision_tol``.
    """
    if not isinstance(phi, NormSpec):
        phi = NormSpec(phi)
    branches = [Branch(0, [complex(v)]) for v in path.spectra[0].values]
    active = list(range(len(branches)))
    for m in range(len(path.params) - 1):
        a = np.array([branches[k].values[-1] for k in active], dtype=complex)
        b = path.spectra[m + 1].values
        cost, pairs = optimal_matching(a, b, phi)
        if check_ambiguity and _is_ambiguous(a, b, cost, pairs, phi, collision_tol):
            raise RefinementNeeded((path.params[m], path.params[m + 1]))
        new_active = []
        for i, j in pairs:
            if i is not None and j is not None:
                branches[active[i]].values.append(complex(b[j]))
                new_active.append(active[i])
            elif i is not None:
                branches[active[i]].values.append(0j)
            else:
                branches.append(Branch(m, [0j, complex(b[j])]))
                new_active.append(len(branches) - 1)
        active = sorted(new_active)
    return SelectedFunctions(list(path.params), branches)


def refine_until_resolved(evaluator: Callable[[float], BasedMultiset], interval=(0.0, 1.0),
                          max_depth=12, eta_step=1e-2, phi=NormSpec(), params=None,
                          n_initial=11) -> SpectralPath:
    """Bisect the sampling until every consecutive rho_Phi step is below ``eta_step``.

    ``params`` seeds the grid (default: ``n_initial`` equispaced points).
    Raises :class:`RefinementFailure` when a cell still violates the bound
    after ``max_depth`` bisections.
    """
    if params is None:
        params = np.linspace(interval[0], interval[1], n_initial)
    cache = {}

    def spec(t):
        if t not in cache:
            s = evaluator(t)
            cache[t] = s if isinstance(s, BasedMultiset) else BasedMultiset.from_values(s)
        return cache[t]

    pts = [(float(t), 0) for t in params]
    out = [pts[0]]
    stack = list(reversed(list(zip(pts[:-1], pts[1:]))))
    while stack:
        (t0, d0), (t1, d1) = stack.pop()
        dist = multiset_distance(spec(t0), spec(t1), phi)
        if dist < eta_step:
            out.append((t1, d1))
            continue
        depth = max(d0, d1)
        if depth >= max_depth:
            raise RefinementFailure((t0, t1), dist)
        tm = 0.5 * (t0 + t1)
        stack.append(((tm, depth + 1), (t1, d1)))
        stack.append(((t0, d0), (tm, depth + 1)))
    ts = [t for t, _ in out]
    return SpectralPath(ts, [spec(t) for t in ts])
