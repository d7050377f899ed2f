import itertools

import numpy as np
import pytest

from resonance_lab import analysis, flow, models
from resonance_lab.analysis import BranchStatus
from resonance_lab.carving import ConeRegion
from resonance_lab.errors import InvalidInputError

PHI = np.array([1.0, 1.0]) / np.sqrt(2)
Z0 = 0.5 + 0.5j


@pytest.fixture
def two_level():
    return models.make_rank_one([-1, 1], PHI, 1.0)


def test_continue_identity_branch():
    one = models.make_finite([[0.0]], [[1.0]])
    path = list(np.linspace(1j, 2j, 11))
    traj = analysis.continue_branch(one, path[0], 1j, path[1:])
    assert traj.status is BranchStatus.OK
    assert np.allclose(traj.values, traj.path, atol=1e-14)
    assert traj.final == pytest.approx(2j, abs=1e-14)


def test_continue_to_the_axis():
    m = models.make_embedded_block(0.0, 1.0)
    ys = np.geomspace(1, 1e-4, 12)
    path = [complex(0.3, y) for y in ys[1:]] + [0.3]
    traj = analysis.continue_branch(m, 0.3 + 1j, 0.3 + 1j, path)
    assert traj.status is BranchStatus.OK
    assert abs(traj.boundary_limit - 0.3) < 1e-12


def test_continue_rejects_non_resonance(two_level):
    with pytest.raises(InvalidInputError):
        analysis.continue_branch(two_level, 1j, 5.0, [2j])


def test_loop_around_square_root_swaps_values():
    m = models.make_sqrt_family(Z0)
    start = Z0 + 0.1
    r0 = -1 / np.sqrt(0.1 + 0j)
    loop = list(analysis.circle(Z0, 0.1, 64))[1:]
    traj = analysis.continue_branch(m, start, r0, loop)
    assert traj.status is BranchStatus.HIT_BRANCH_POINT or abs(traj.final + r0) < 1e-8


def test_discriminant_is_symmetric():
    rng = np.random.default_rng(1)
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    d0 = analysis.discriminant(v)
    for perm in itertools.islice(itertools.permutations(range(5)), 40):
        assert abs(analysis.discriminant(v[list(perm)]) - d0) <= 1e-12 * abs(d0)
    assert analysis.discriminant([3.0]) == 1


def test_detect_square_root_branch_point():
    m = models.make_sqrt_family(Z0)
    found = analysis.detect_branch_points(m, (0.2, 0.8, 0.2, 0.8))
    assert len(found) == 1
    rep = found[0]
    assert abs(rep.location - Z0) < 1e-6
    assert rep.period == 2 and rep.monodromy == (1, 0)


def test_rank_one_has_no_branch_points(two_level):
    assert analysis.detect_branch_points(two_level, (-2, 2, 0.05, 2)) == []


def test_decoupled_blocks_do_not_collide():
    m = models.make_finite(np.diag([-1.0, 0.5, 1.0]), np.diag([1.0, -0.7]), F=np.eye(3)[:2])
    assert analysis.detect_branch_points(m, (-1.5, 1.5, 0.05, 1)) == []


def test_classify_examples(two_level):
    sq = analysis.classify_singularity(models.make_sqrt_family(Z0), Z0)
    assert sq.kind == "branch" and sq.period == 2
    reg = analysis.classify_singularity(two_level, 0.3 + 0.4j)
    assert reg.kind == "regular" and reg.evidence["diverged_rays"] == 0


def test_classify_relabels_between_radii():
    # here the sorted labels at the two loop starts differ; the period must still agree
    rng = np.random.default_rng(9)
    for _ in range(2):
        m = models.random_finite_model(rng, 6)
    rep = analysis.classify_singularity(m, -2.1228566978896493 + 0.372027559177511j)
    assert rep.kind == "branch" and rep.period == 2


def test_permutation_helpers():
    assert analysis.compose((1, 2, 0), (1, 2, 0)) == (2, 0, 1)
    assert analysis.cycles((1, 0, 2)) == [[0, 1], [2]]
    p = (1, 0, 2)
    assert analysis.conjugate_perm(p, (0, 1, 2)) == p
    # relabelling by a swap of 1 and 2 turns (0 1) into (0 2)
    assert analysis.conjugate_perm(p, (0, 2, 1)) == (2, 1, 0)


def test_monodromy_closure_two_point_family():
    m = models.make_two_point_family(0.3 + 0.5j, 0.7 + 0.5j)
    out = analysis.monodromy_closure(m, Z0, 0.4, [0.3 + 0.5j, 0.7 + 0.5j], 0.05)
    assert out["holds"] and out["outer"] == (0, 1)


def test_monodromy_closure_square_root_and_cubic():
    sq = analysis.monodromy_closure(models.make_sqrt_family(Z0), Z0, 0.3, [Z0], 0.05)
    assert sq["holds"] and sq["outer"] == (1, 0)
    cub = models.make_cubic_family(Z0, 0.2)
    zeros = [Z0 - 0.2, Z0 + 0.2]
    out = analysis.monodromy_closure(cub, Z0, 0.35, zeros, 0.05)
    assert out["holds"]
    assert sorted(len(c) for c in analysis.cycles(out["outer"])) == [3]


def test_impacting_examples():
    emb = models.make_embedded_block(0.0, 1.0)
    s = analysis.find_impacting(emb, 0.3)
    assert len(s.branches) == 1 and abs(s.branches[0][1] - 0.3) < 1e-8
    neg = analysis.find_impacting(models.make_embedded_block(0.0, -1.0), 0.3)
    assert neg.branches == [] and abs(neg.others[0][1] + 0.3) < 1e-8
    jac = analysis.find_impacting(models.make_half_line_jacobi([1], [[1.0]]), 0.0)
    assert jac.branches == [] and abs(jac.others[0][1] - 1j) < 1e-8
    v0 = models.make_finite(np.diag([1.0, 2.0]), np.zeros((2, 2)))
    assert analysis.find_impacting(v0, 1.5).branches == []


def test_impacting_matches_flow_oracle_and_reflection():
    rng = np.random.default_rng(21)
    total = 0
    for _ in range(15):
        # a narrow H0 spectrum relative to J makes crossings common
        m = models.random_finite_model(rng, 4, spread=0.3)
        e0 = np.sort(m.unperturbed_spectrum())
        lam = float(0.5 * (e0[1] + e0[2]))
        s_up = analysis.find_impacting(m, lam)
        s_down = analysis.find_impacting(m, lam, from_below=True)
        up = sorted(v.real for _, v in s_up.branches)
        down = sorted(v.real for _, v in s_down.branches)
        try:
            crossings = [r.s_star for r in flow.crossings(m, lam)]
        except InvalidInputError:
            continue
        assert np.allclose(up, down, atol=1e-8)
        assert len(up) == len(crossings) and np.allclose(up, crossings, atol=1e-8)
        total += len(up)
    assert total >= 5


def test_single_valuedness_examples():
    emb = models.make_embedded_block(0.0, 1.0)
    K = ConeRegion([(-0.9, -0.1), (0.1, 0.9)], epsilon=0.125)
    sets = [analysis.find_impacting(emb, lam) for lam in K.grid(0.2)]
    rep = analysis.verify_single_valuedness(emb, K, sets)
    assert rep.passed and rep.count == 1
    jac = models.make_half_line_jacobi([1], [[1.0]])
    Kj = ConeRegion([(-1.4, 1.4)], epsilon=0.125)
    sets = [analysis.find_impacting(jac, lam) for lam in Kj.grid(0.35)]
    rep = analysis.verify_single_valuedness(jac, Kj, sets)
    assert rep.passed and rep.count == 0


def test_ray_stats_rank_one_never_fails(two_level):
    out = analysis.ray_survival_stats(two_level, 0.2 + 0.5j, (-1, 1, 0.1, 1), n_rays=90)
    assert out["fraction"] == 0.0


def test_ray_stats_square_root_only_the_ray_through_the_branch_point():
    m = models.make_sqrt_family(Z0)
    out = analysis.ray_survival_stats(m, Z0 + 0.02, (0, 1, 0.1, 1), n_rays=360)
    assert out["n_failed"] <= 3
    assert all(abs(np.angle(np.exp(1j * a)) - np.pi) < 0.05 for a, _ in out["failed"])


def test_ray_stats_refinement_trend():
    rng = np.random.default_rng(4)
    m = models.random_finite_model(rng, 4)
    coarse = analysis.ray_survival_stats(m, 0.1 + 0.6j, (-1, 1, 0.2, 1), n_rays=36, step=0.05)
    fine = analysis.ray_survival_stats(m, 0.1 + 0.6j, (-1, 1, 0.2, 1), n_rays=36, step=0.0125)
    assert fine["fraction"] <= coarse["fraction"]
