import numpy as np
import pytest

from resonance_lab.enumeration import (SpectralPath, enumerate_path, refine_until_resolved)
from resonance_lab.errors import RefinementFailure, RefinementNeeded
from resonance_lab.multiset import BasedMultiset, multiset_distance


def diag_family(t):
    return BasedMultiset.from_values(np.linalg.eigvalsh(np.diag([t, 1 - t])))


def swap_family(t):
    return BasedMultiset.from_values(np.linalg.eigvalsh(np.array([[0, t], [t, 0]])), 1e-14)


def test_constant_path():
    path = SpectralPath.sample(lambda t: BasedMultiset([1j, 2, 2]), np.linspace(0, 1, 5))
    sel = enumerate_path(path)
    assert len(sel.branches) == 3
    for b in sel.branches:
        assert len(set(b.values)) == 1 and b.start == 0


def test_diagonal_family_recovers_entries():
    ts = np.linspace(0, 1, 101)
    sel = enumerate_path(SpectralPath.sample(diag_family, ts))
    # the entry t vanishes at t = 0, so it is born from the base point
    assert any(b.values[0] == 0 for b in sel.branches)
    for m, t in enumerate(ts):
        assert multiset_distance(sel.values_at(m), diag_family(t)) < 1e-10
    assert sel.max_jump() <= 0.01 + 1e-12


def test_swap_family_dies_into_base_and_reemerges():
    ts = np.linspace(-1, 1, 21)
    sel = enumerate_path(SpectralPath.sample(swap_family, ts))
    m0 = int(np.argmin(np.abs(ts)))
    assert len(sel.values_at(m0)) == 0
    dying = [b for b in sel.branches if b.start == 0]
    born = [b for b in sel.branches if b.start > 0]
    assert len(dying) == 2 and all(b.values[-1] == 0 for b in dying)
    assert len(born) == 2 and all(b.values[0] == 0 for b in born)
    for b in born:
        vals = np.array(b.values[1:])
        ref = ts[b.start + 1:b.stop]
        assert np.allclose(np.abs(vals), ref, atol=1e-12)


def test_re_enumeration_consistency_random_paths():
    rng = np.random.default_rng(3)
    A, B = rng.standard_normal((2, 4, 4)) + 1j * rng.standard_normal((2, 4, 4))
    path = SpectralPath.sample(lambda t: BasedMultiset.from_values(np.linalg.eigvals(A + t * B)),
                               np.linspace(0, 1, 200))
    sel = enumerate_path(path)
    for m in range(len(path.params)):
        assert multiset_distance(sel.values_at(m), path.spectra[m]) < 1e-10


@pytest.mark.parametrize("family,interval", [(diag_family, (0, 1)), (swap_family, (-1, 1))])
def test_jump_shrinks_under_refinement(family, interval):
    jumps = []
    for n in (11, 21, 41, 81, 161):
        ts = np.linspace(*interval, n)
        jumps.append(enumerate_path(SpectralPath.sample(family, ts)).max_jump())
    assert all(a / b >= 1.5 for a, b in zip(jumps, jumps[1:]))


def test_escape_count_bound():
    ts = np.linspace(-1, 1, 41)
    path = SpectralPath.sample(swap_family, ts)
    sel = enumerate_path(path)
    for rho in (0.25, 0.5, 0.9):
        at_start = sum(abs(v) > rho for v in path.spectra[0].values)
        crossings = sum(1 for a, b in zip(path.spectra[:-1], path.spectra[1:])
                        if any(abs(v) > rho for v in b.values) != any(abs(v) > rho for v in a.values))
        assert sel.escape_count(rho) <= at_start + 2 * crossings


def test_ambiguous_step_requests_refinement():
    # two values swap exactly in the middle of one step: both pairings cost the same
    path = SpectralPath([0.0, 1.0], [BasedMultiset([1, -1]), BasedMultiset([1j, -1j])])
    with pytest.raises(RefinementNeeded) as err:
        enumerate_path(path)
    assert err.value.interval == (0.0, 1.0)
    enumerate_path(path, check_ambiguity=False)


def test_refine_leaves_resolved_path_unchanged():
    ts = np.linspace(0, 1, 201)
    path = refine_until_resolved(diag_family, (0, 1), params=ts, eta_step=1e-2)
    assert np.array_equal(path.params, ts)


def test_refine_crossing_family_has_small_steps():
    path = refine_until_resolved(diag_family, (0, 1), eta_step=1e-2)
    d = path.step_distances()
    assert np.all(d < 1e-2)
    assert 0.5 in path.params


def test_refine_fails_on_a_jump():
    def step(t):
        return BasedMultiset([1.0 if t < 0.37 else 2.0])

    with pytest.raises(RefinementFailure) as err:
        refine_until_resolved(step, (0, 1), max_depth=10)
    lo, hi = err.value.interval
    assert lo < 0.37 <= hi and hi - lo < 1e-3


def test_path_validation():
    with pytest.raises(ValueError):
        SpectralPath([0, 0], [[1], [1]])
    with pytest.raises(ValueError):
        SpectralPath([0, 1], [[1]])
