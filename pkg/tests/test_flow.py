import numpy as np
import pytest

from oracles import real_crossings_from_det
from resonance_lab import flow, models
from resonance_lab.errors import InvalidInputError, UnsupportedError
from resonance_lab.flow import CrossingRecord

PHI = np.array([1.0, 1.0]) / np.sqrt(2)


def test_two_level_crossing():
    m = models.make_rank_one([-1, 1], PHI, 1.0)
    rec = flow.crossings(m, 1.2)
    assert len(rec) == 1
    assert abs(rec[0].s_star - (1.2 ** 2 - 1) / 1.2) < 1e-9
    assert abs(rec[0].s_star - 0.36667) < 1e-5
    assert rec[0].direction == 1
    assert flow.crossing_direction_hf(m, rec[0]) == 1


def test_two_level_no_crossing_below():
    m = models.make_rank_one([-1, 1], PHI, 1.0)
    assert flow.crossings(m, 0.5) == []


def test_zero_perturbation():
    m = models.make_rank_one([-1, 1], PHI, 0.0)
    assert flow.crossings(m, 0.3) == []


def test_endpoint_degeneracy_rejected():
    m = models.make_rank_one([-1, 1], PHI, 1.0)
    with pytest.raises(InvalidInputError):
        flow.crossings(m, 1.0)


def test_infinite_model_rejected():
    with pytest.raises(UnsupportedError):
        flow.crossings(models.make_embedded_block(0.0, 1.0), 0.3)


def test_net_flow():
    assert flow.net_flow([]) == 0
    assert flow.net_flow([CrossingRecord(0.1, 1, 0)]) == 1
    assert flow.net_flow([CrossingRecord(0.1, 1, 0), CrossingRecord(0.2, -1, 1)]) == 0


def test_dip_through_level_is_found():
    # an eigenvalue that touches lambda and turns back between two grid points
    # level repulsion from -10 bends the upper curve back up; its minimum
    # (about -0.07444 at s = 0.1489) lies strictly between grid points 0.1 and 0.2
    b = np.sqrt(5 / 0.15)
    h0 = np.diag([0.0, -10.0])
    m = models.make_finite(h0, np.array([[-1.0, b], [b, 0.0]]))
    lam = -0.0743
    ref = real_crossings_from_det(h0, m.perturbation(), lam, 400001)
    rec = flow.crossings(m, lam, grid_n=11)
    assert len(ref) == 2 and len(rec) == 2
    assert np.allclose([r.s_star for r in rec], ref, atol=1e-5)
    assert [r.direction for r in rec] == [-1, 1]
    assert flow.net_flow(rec) == 0


def test_random_models_match_determinant_roots():
    rng = np.random.default_rng(12)
    for _ in range(20):
        m = models.random_finite_model(rng, 4)
        lam = float(rng.uniform(-2, 2))
        rec = flow.crossings(m, lam)
        ref = real_crossings_from_det(np.asarray(m.h0), m.perturbation(), lam)
        assert len(rec) == len(ref)
        assert np.allclose([r.s_star for r in rec], ref, atol=1e-4)
        for r in rec:
            assert flow.crossing_direction_hf(m, r) == r.direction
