"""Quick built-in invariant checks, printed one per line."""
from __future__ import annotations

import numpy as np

from . import analysis, flow, models, resolvent
from .multiset import BasedMultiset, multiset_distance


def _one_by_one():
    m = models.make_finite([[0.0]], [[1.0]])
    z = 0.3 + 0.7j
    r = resolvent.resonances(m, z)
    return len(r) == 1 and abs(r[0] - z) < 1e-12


def _pole_characterization():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10):
        m = models.random_finite_model(rng, 5)
        worst = max(worst, float(np.max(resolvent.scaled_det_residuals(m, 0.2 + 0.5j))))
    return worst < 1e-8


def _metric_axioms():
    a = BasedMultiset.from_values([1 + 1j, 2])
    b = BasedMultiset.from_values([1 + 1.1j])
    c = BasedMultiset.from_values([])
    ok = True
    for p in (1, 2, np.inf):
        ab, bc, ac = (multiset_distance(a, b, p), multiset_distance(b, c, p),
                      multiset_distance(a, c, p))
        ok &= multiset_distance(a, a, p) == 0 and ac <= ab + bc + 1e-12
        ok &= abs(ab - multiset_distance(b, a, p)) < 1e-12
    return ok


def _embedded_impacting():
    m = models.make_embedded_block(0.0, 1.0, 2000)
    s = analysis.find_impacting(m, 0.3)
    return len(s.branches) == 1 and abs(s.branches[0][1] - 0.3) < 1e-8


def _flow_oracle():
    m = models.make_finite(np.diag([1.0, 2.0]), np.diag([1.2, 0.0]))
    rec = flow.crossings(m, 1.44)
    res = np.sort(resolvent.resonances(m, 1.44).real)
    return len(rec) == 1 and abs(rec[0].s_star - (1.44 - 1) / 1.2) < 1e-9 \
        and abs(res[0] - rec[0].s_star) < 1e-9


def _sqrt_branch_point():
    m = models.make_sqrt_family(0.5 + 0.5j)
    found = analysis.detect_branch_points(m, (0.2, 0.8, 0.2, 0.8), grid=(21, 21))
    return len(found) == 1 and found[0].period == 2 and abs(found[0].location - (0.5 + 0.5j)) < 1e-8


CHECKS = [
    ("one_by_one_resonance_is_z", _one_by_one),
    ("pole_characterization", _pole_characterization),
    ("multiset_metric_axioms", _metric_axioms),
    ("embedded_block_impacting", _embedded_impacting),
    ("flow_oracle_two_level", _flow_oracle),
    ("sqrt_family_branch_point", _sqrt_branch_point),
]


def run_selftest(out=print):
    ok = True
    for name, fn in CHECKS:
        try:
            passed = bool(fn())
        except Exception as exc:  # noqa: BLE001 - report and carry on
            passed = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'} {name}")
    return ok
