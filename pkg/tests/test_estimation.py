import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from mmfnet.errors import EmptyDataError, IncompleteDataError
from mmfnet.estimation import (bootstrap_fidelity, certified_schmidt_number,
                               correlations_from_counts, direct_fidelity, fidelity_from_mubs,
                               mle_tomography, phase_fit, schmidt_bound, trace_distance,
                               witness_bootstrap)
from mmfnet.quantum import CountTable, sample_counts, state_prob_table, swap_target


def random_state(d, rng, rank=None):
    D = d * d
    rank = rank or D
    A = rng.normal(size=(D, rank)) + 1j * rng.normal(size=(D, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def phi_plus(d):
    v = np.eye(d).ravel() / np.sqrt(d)
    return np.outer(v, v)


def witness(rho, d):
    tab = state_prob_table(rho, d, "diagonal")
    return fidelity_from_mubs([tab.data[(m, m)] for m in range(d + 1)], d)


@pytest.mark.parametrize("d", [2, 3])
def test_witness_equals_direct_fidelity(d):
    rng = np.random.default_rng(d)
    dev = max(abs(witness(rho, d).fidelity - direct_fidelity(rho, d))
              for rho in (random_state(d, rng, rank=int(r)) for r in rng.integers(1, d * d + 1, 200)))
    assert dev < 1e-10


def test_witness_examples():
    tab = state_prob_table(phi_plus(2), 2, "diagonal")
    S = sum(np.trace(tab.data[(m, m)]) for m in range(3))
    assert S == pytest.approx(3)
    assert witness(phi_plus(2), 2).fidelity == pytest.approx(1)
    assert witness(np.eye(4) / 4, 2).fidelity == pytest.approx(1 / 4)
    w = witness(phi_plus(3), 3)
    assert w.fidelity == pytest.approx(1) and w.certified_k == 3


def test_witness_needs_every_basis():
    tab = state_prob_table(phi_plus(2), 2, "diagonal")
    with pytest.raises(IncompleteDataError):
        fidelity_from_mubs([tab.data[(0, 0)], tab.data[(1, 1)]], 2)
    del tab.data[(2, 2)]
    with pytest.raises(IncompleteDataError):
        fidelity_from_mubs(tab, 2)


def test_correlations():
    uniform = CountTable(2, {(0, 0): np.full((2, 2), 7)})
    np.testing.assert_allclose(correlations_from_counts(uniform, 0).probs, 0.25)
    with pytest.raises(EmptyDataError):
        correlations_from_counts(CountTable(2, {(0, 0): np.zeros((2, 2))}), 0)
    with pytest.raises(IncompleteDataError):
        correlations_from_counts(uniform, 1)


def _rank_k_fidelity(x, k, d):
    A = (x[:k * d] + 1j * x[k * d:2 * k * d]).reshape(k, d)
    B = (x[2 * k * d:3 * k * d] + 1j * x[3 * k * d:]).reshape(k, d)
    psi = np.einsum("ri,rj->ij", A, B).ravel()
    psi = psi / np.linalg.norm(psi)
    return direct_fidelity(np.outer(psi, psi.conj()), d)


@pytest.mark.parametrize("k", [1, 2])
def test_schmidt_bound_is_tight_for_qutrits(k):
    d = 3
    rng = np.random.default_rng(k)
    best = 0.0
    for _ in range(5):
        res = minimize(lambda x: -_rank_k_fidelity(x, k, d), rng.normal(size=4 * k * d), method="BFGS")
        best = max(best, -res.fun)
    assert best == pytest.approx(schmidt_bound(k, d), abs=1e-6)
    assert best <= schmidt_bound(k, d) + 1e-12


def test_certified_schmidt_number():
    assert certified_schmidt_number(0.45, 2) == 1
    assert certified_schmidt_number(0.51, 2) == 2
    assert certified_schmidt_number(0.6, 3) == 2
    assert certified_schmidt_number(0.7, 3) == 3


def test_witness_stderr_and_bootstrap():
    probs = state_prob_table(0.8 * phi_plus(2) + 0.05 * np.eye(4), 2, "diagonal")
    counts = sample_counts(probs, 400, 1.0, seed=0)
    w = fidelity_from_mubs(counts, 2)
    mean, std = witness_bootstrap(counts, 2000, seed=1)
    assert std == pytest.approx(w.stderr, rel=0.2)
    assert mean == pytest.approx(w.fidelity, abs=3 * std)


def test_witness_relabeling_covariance():
    rng = np.random.default_rng(5)
    rho = random_state(3, rng)
    counts = sample_counts(state_prob_table(rho, 3, "diagonal"), 500, 1.0, seed=2)
    perm = rng.permutation(3)
    shuffled = CountTable(3, {k: v[np.ix_(perm, perm)] for k, v in counts.data.items()})
    assert fidelity_from_mubs(shuffled, 3).fidelity == pytest.approx(fidelity_from_mubs(counts, 3).fidelity)


# ------------------------------------------------------------- MLE

def test_mle_recovers_pure_state():
    psi = swap_target(0.7)
    rho = np.outer(psi, psi.conj())
    res = mle_tomography(state_prob_table(rho, 2))
    assert trace_distance(res.rho, rho) < 1e-3
    assert np.all(np.diff(res.loglik) >= -1e-12)


def test_mle_fixed_point_of_maximally_mixed():
    res = mle_tomography(state_prob_table(np.eye(4) / 4, 2))
    np.testing.assert_allclose(res.rho, np.eye(4) / 4, atol=1e-12)
    assert res.converged


def test_mle_needs_complete_settings():
    tab = state_prob_table(np.eye(4) / 4, 2, "diagonal")
    with pytest.raises(IncompleteDataError):
        mle_tomography(tab)


def test_mle_all_zero_counts():
    tab = state_prob_table(np.eye(4) / 4, 2).map(lambda v: np.zeros_like(v))
    with pytest.raises(EmptyDataError):
        mle_tomography(tab)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_mle_output_is_always_a_state(seed):
    rng = np.random.default_rng(seed)
    data = {(m, n): rng.integers(0, 30, (2, 2)) * (rng.random((2, 2)) < 0.6)
            for m in range(3) for n in range(3)}
    data[(0, 0)][0, 0] += 1
    res = mle_tomography(CountTable(2, data), max_iters=300)
    rho = res.rho
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(rho).min() > -1e-10
    assert np.trace(rho).real == pytest.approx(1, abs=1e-10)
    assert np.all(np.diff(res.loglik) >= -1e-12)


def test_bootstrap_concentrates_for_giant_counts():
    rho = 0.9 * np.outer(swap_target(0), swap_target(0).conj()) + 0.025 * np.eye(4)
    counts = state_prob_table(rho, 2).map(lambda v: np.round(v * 1e8))
    with pytest.warns(UserWarning):
        mean, std, samples = bootstrap_fidelity(counts, swap_target(0), n_rep=20, seed=0)
    assert std < 1e-3 and len(samples) == 20
    assert mean == pytest.approx(0.925, abs=1e-3)


def test_bootstrap_low_replica_warning():
    counts = sample_counts(state_prob_table(np.eye(4) / 4, 2), 100, 1.0, seed=0)
    with pytest.warns(UserWarning, match="bootstrap replicas"):
        bootstrap_fidelity(counts, swap_target(0), n_rep=2)


def test_bootstrap_std_scales_with_counts():
    rho = 0.7 * np.outer(swap_target(0), swap_target(0).conj()) + 0.075 * np.eye(4)
    probs = state_prob_table(rho, 2)
    stds = []
    for scale in (100, 10_000):
        counts = sample_counts(probs, scale, 1.0, seed=3)
        stds.append(bootstrap_fidelity(counts, swap_target(0), n_rep=200, seed=4)[1])
    ratio = stds[0] / stds[1]
    assert 10 / 1.5 < ratio < 10 * 1.5


# ------------------------------------------------------------- phase fit

@pytest.mark.parametrize("theta", [0.0, 1.0, 1.535 * np.pi, 5.9])
def test_phase_fit_pure(theta):
    psi = swap_target(theta)
    est = phase_fit(np.outer(psi, psi.conj()))
    assert est.defined
    assert np.angle(np.exp(1j * (est.theta - theta))) == pytest.approx(0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_phase_fit_matches_grid_search(seed):
    rho = random_state(2, np.random.default_rng(seed))
    grid = np.linspace(0, 2 * np.pi, 20001)
    fids = [np.vdot(swap_target(t), rho @ swap_target(t)).real for t in grid[::10]]
    coarse = grid[::10][int(np.argmax(fids))]
    est = phase_fit(rho).theta
    assert abs(np.angle(np.exp(1j * (est - coarse)))) < 2e-2
    f_est = np.vdot(swap_target(est), rho @ swap_target(est)).real
    assert f_est >= max(fids) - 1e-12


def test_phase_fit_undefined():
    est = phase_fit(np.eye(4) / 4)
    assert not est.defined
