"""Independent brute-force references used by the tests."""
import itertools
import math

import numpy as np

from resonance_lab.multiset import phi_norm


def brute_distance(a, b, p):
    """Exhaustive minimum over partial injections a -> b; the rest goes to the base point."""
    a = [complex(x) for x in a]
    b = [complex(x) for x in b]
    best = math.inf
    for k in range(min(len(a), len(b)) + 1):
        for ia in itertools.combinations(range(len(a)), k):
            for jb in itertools.permutations(range(len(b)), k):
                costs = [np.abs(a[i] - b[j]) for i, j in zip(ia, jb)]
                costs += [np.abs(a[i]) for i in range(len(a)) if i not in ia]
                costs += [np.abs(b[j]) for j in range(len(b)) if j not in jb]
                best = min(best, phi_norm(costs, p))
    return best


def random_multiset(rng, max_support=6, scale=2.0):
    n = int(rng.integers(0, max_support + 1))
    vals = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    # occasional repeated values exercise multiplicities
    if n >= 2 and rng.random() < 0.3:
        vals[1] = vals[0]
    return vals


def real_crossings_from_det(h0, V, lam, n=20001):
    """Roots of s -> det(H0 + sV - lam) on [0, 1] by dense sampling of the smallest |eig|."""
    ss = np.linspace(0, 1, n)
    f = np.array([np.linalg.det(h0 + s * V - lam * np.eye(len(h0))).real for s in ss])
    idx = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    return ss[idx]
