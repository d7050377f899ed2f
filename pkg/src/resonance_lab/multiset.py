"""Based multisets in (C, 0) and the optimal-matching metric rho_Phi.

A based multiset contains the base point 0 with infinite multiplicity, so a
point of one multiset may be matched either to a point of the other or to
the base point.  With finite supports this is an assignment problem on the
supports augmented by enough base copies: |S| + |T| slots per side always
suffice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching


@dataclass(frozen=True)
class NormSpec:
    """Symmetric p-norm with p in {1, 2, inf}."""

    p: float = 2.0

    def __post_init__(self):
        p = self.p
        if isinstance(p, str):
            p = math.inf if p.lower() in ("inf", "infinity", "max") else float(p)
        p = float(p)
        if p not in (1.0, 2.0, math.inf):
            raise ValueError(f"p must be one of 1, 2, inf; got {self.p!r}")
        object.__setattr__(self, "p", p)

    def __call__(self, values):
        return phi_norm(values, self)


def phi_norm(values, phi=NormSpec()):
    """p-norm of a list of nonnegative reals, evaluated in sorted order."""
    if not isinstance(phi, NormSpec):
        phi = NormSpec(phi)
    v = np.sort(np.abs(np.asarray(values, dtype=float).ravel()))
    if v.size == 0:
        return 0.0
    if phi.p == math.inf:
        return float(v[-1])
    if phi.p == 1.0:
        return float(np.sum(v))
    return float(np.sqrt(np.sum(v * v)))


class BasedMultiset:
    """Finite multiset of nonzero complex numbers; 0 is the implicit base point.

    Values are stored expanded (one entry per unit of multiplicity) in a
    canonical order, so two equal multisets hold identical arrays.
    """

    __slots__ = ("values",)

    def __init__(self, values=()):
        v = np.asarray(values, dtype=complex).ravel()
        if np.any(v == 0):
            raise ValueError("the base point 0 cannot be listed explicitly")
        order = np.lexsort((v.imag, v.real))
        v = v[order]
        v.setflags(write=False)
        self.values = v

    @classmethod
    def from_values(cls, values, zero_tol=0.0):
        """Build from raw values, merging |x| <= zero_tol into the base point."""
        v = np.asarray(values, dtype=complex).ravel()
        return cls(v[np.abs(v) > zero_tol])

    @classmethod
    def from_support(cls, support):
        """Build from ``(value, multiplicity)`` pairs."""
        vals = []
        for value, mult in support:
            if int(mult) < 1:
                raise ValueError("multiplicities must be >= 1")
            vals.extend([complex(value)] * int(mult))
        return cls(vals)

    @property
    def support(self):
        out = []
        for x in self.values:
            if out and out[-1][0] == x:
                out[-1][1] += 1
            else:
                out.append([complex(x), 1])
        return [(x, m) for x, m in out]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __eq__(self, other):
        if not isinstance(other, BasedMultiset):
            return NotImplemented
        return len(self) == len(other) and bool(np.all(self.values == other.values))

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"BasedMultiset({self.support})"

    def base_distances(self):
        return np.abs(self.values)


def _augmented_costs(a, b):
    na, nb = len(a), len(b)
    n = na + nb
    C = np.zeros((n, n))
    if na and nb:
        C[:na, :nb] = np.abs(a[:, None] - b[None, :])
    C[:na, nb:] = np.abs(a)[:, None]
    C[na:, :nb] = np.abs(b)[None, :]
    return C


def _bottleneck(C):
    levels = np.unique(C)
    n = C.shape[0]
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((C <= levels[mid]).astype(np.int8))
        if np.all(maximum_bipartite_matching(graph, perm_type="column") >= 0):
            hi = mid
        else:
            lo = mid + 1
    t = levels[lo]
    # min-sum among assignments that respect the bottleneck level
    masked = np.where(C <= t, C, C.max() * (n + 1) + 1.0)
    rows, cols = linear_sum_assignment(masked)
    return float(t), rows, cols


def optimal_matching(a, b, phi=NormSpec(), forbidden=None):
    """Optimal augmented matching between value arrays ``a`` and ``b``.

    Returns ``(cost, pairs)`` where ``pairs`` lists ``(i, j)`` with ``i`` an
    index into ``a`` or ``None`` (base point) and likewise ``j``; base-to-base
    pairs are omitted.  ``forbidden`` is an optional boolean mask over the
    augmented cost matrix whose entries are excluded.
    """
    if not isinstance(phi, NormSpec):
        phi = NormSpec(phi)
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    na, nb = len(a), len(b)
    if na + nb == 0:
        return 0.0, []
    C = _augmented_costs(a, b)
    if forbidden is not None:
        big = (C.max() + 1.0) * (na + nb + 1) * 1e3
        C = np.where(forbidden, big, C)
    if phi.p == math.inf:
        _, rows, cols = _bottleneck(C)
    else:
        rows, cols = linear_sum_assignment(C if phi.p == 1.0 else C * C)
    pairs = []
    costs = []
    for i, j in zip(rows, cols):
        ii = int(i) if i < na else None
        jj = int(j) if j < nb else None
        if ii is None and jj is None:
            continue
        pairs.append((ii, jj))
        costs.append(C[i, j])
    pairs.sort(key=lambda pr: (pr[0] is None, pr[0] if pr[0] is not None else 0,
                               pr[1] is None, pr[1] if pr[1] is not None else 0))
    return phi_norm(costs, phi), pairs


def multiset_distance(S, T, phi=NormSpec()):
    """rho_Phi(S, T): infimum over enumerations of Phi(|s_i - t_i|)."""
    S = S if isinstance(S, BasedMultiset) else BasedMultiset.from_values(S)
    T = T if isinstance(T, BasedMultiset) else BasedMultiset.from_values(T)
    return optimal_matching(S.values, T.values, phi)[0]
