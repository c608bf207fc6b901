import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmfnet.circuit import apply_inter_pol_phase, gate_library
from mmfnet.errors import (ConfigError, DegenerateProjectorError, InvalidPatternError,
                           UnheraldablePatternError)
from mmfnet.medium import haar_unitary
from mmfnet.quantum import (BiphotonSource, CountTable, HeraldedState, default_swap_pattern,
                            gamma_from_delay, herald, hom_scan, routing_coincidence_prob,
                            routing_prob_table, sample_counts, state_prob_table, swap_patterns,
                            swap_target, swapped_state, two_photon_event)

SPLITTER = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def _labels(gamma):
    """Internal states of the two signal photons with |<a|b>|^2 = gamma."""
    return np.array([1.0, 0.0]), np.array([np.sqrt(gamma), np.sqrt(1 - gamma)])


def _symmetrized(T, v1, v2, gamma):
    a, b = _labels(gamma)
    p1, p2 = np.kron(T @ v1, a), np.kron(T @ v2, b)
    return (np.kron(p1, p2) + np.kron(p2, p1)) / np.sqrt(2)


def _slot(m, det, x):
    e = np.zeros(2 * m)
    e[2 * det + x] = 1
    return e


def oracle_two_photon(T, v1, v2, det1, det2, gamma):
    """Brute-force coincidence probability in first quantisation."""
    m = T.shape[0]
    S = _symmetrized(T, v1, v2, gamma)
    p = 0.0
    for x in range(2):
        for y in range(2):
            for d_a, d_b in ((det1, det2), (det2, det1)):
                p += abs(np.kron(_slot(m, d_a, x), _slot(m, d_b, y)) @ S) ** 2
    return p


def oracle_swapped(T, s1, s2, det1, det2, gamma):
    """Idler state heralded by the pattern, from the full four-photon state."""
    m = T.shape[0]
    rho = np.zeros((s1.d * s2.d,) * 2, dtype=complex)
    for x in range(2):
        for y in range(2):
            proj = np.kron(_slot(m, det1, x), _slot(m, det2, y))
            amp = np.zeros(s1.d * s2.d, dtype=complex)
            for i in range(s1.d):
                for j in range(s2.d):
                    v1 = np.eye(m)[s1.modes[i]]
                    v2 = np.eye(m)[s2.modes[j]]
                    amp[i * s2.d + j] = s1.lambdas[i] * s2.lambdas[j] * (proj @ _symmetrized(T, v1, v2, gamma))
            rho += 2 * np.outer(amp, amp.conj())
    p = np.trace(rho).real
    return rho / p, p


def _sources(d=4):
    return (BiphotonSource.maximally_entangled(d, range(d)),
            BiphotonSource.maximally_entangled(d, range(d, 2 * d)))


# ------------------------------------------------------------- sources and heralding

def test_source_validation():
    with pytest.raises(ConfigError):
        BiphotonSource([0.5, 0.5], (0, 1))
    with pytest.raises(ConfigError):
        BiphotonSource([-1.0, 0.0], (0, 1))
    s = BiphotonSource([0.6, 0.8], (2, 3))
    assert s.d == 2 and s.modes == (2, 3)


def test_herald_examples():
    s = BiphotonSource.maximally_entangled(4)
    h = herald(s, [1, 0, 0, 0])
    assert h.weight == pytest.approx(1 / 4)
    np.testing.assert_allclose(h.amplitude / np.linalg.norm(h.amplitude), [1, 0, 0, 0])
    assert herald(s, np.full(4, 0.5)).weight == pytest.approx(1 / 4)
    assert herald(BiphotonSource([1, 0], (0, 1)), [0, 1]).weight == 0
    with pytest.raises(DegenerateProjectorError):
        herald(s, np.zeros(4))


def test_routing_examples():
    s1, s2 = _sources()
    lam0 = s1.lambdas[0]
    TI, TX, TM = (gate_library(n).matrix for n in ("T_I", "T_X", "T_M"))
    h1 = HeraldedState(np.array([lam0, 0, 0, 0]), lam0**2, s1.modes)
    assert routing_coincidence_prob(TI, h1, 0) == pytest.approx(lam0**2)
    assert routing_coincidence_prob(TX, h1, 0) == 0
    assert routing_coincidence_prob(TX, h1, 4) == pytest.approx(lam0**2)
    h2 = HeraldedState(np.array([lam0, 0, 0, 0]), lam0**2, s2.modes)
    assert routing_coincidence_prob(TM, h2, 2) == pytest.approx(lam0**2)


def test_ideal_routing_correlations_are_diagonal():
    s1, _ = _sources()
    for name in ("T_I", "T_X"):
        T = gate_library(name).matrix
        out = (0, 1) if name == "T_I" else (4, 5)
        tab = routing_prob_table(T, s1, (0, 1), out)
        for m in range(3):
            P = tab.data[(m, m)] / tab.data[(m, m)].sum()
            np.testing.assert_allclose(P, np.eye(2) / 2, atol=1e-12)


# ------------------------------------------------------------- two-photon events

def test_two_photon_examples():
    one = HeraldedState(np.ones(1), 1.0, (0,))
    two = HeraldedState(np.ones(1), 1.0, (1,))
    assert two_photon_event(np.eye(2), one, two, 0, 1, 1.0) == pytest.approx(1)
    assert two_photon_event(SPLITTER, one, two, 0, 1, 1.0) == pytest.approx(0, abs=1e-15)
    assert two_photon_event(SPLITTER, one, two, 0, 1, 0.0) == pytest.approx(0.5)
    with pytest.raises(InvalidPatternError):
        two_photon_event(SPLITTER, one, two, 1, 1, 1.0)
    with pytest.raises(ConfigError):
        two_photon_event(SPLITTER, one, two, 0, 1, 1.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1))
def test_two_photon_matches_label_oracle(seed, gamma):
    rng = np.random.default_rng(seed)
    m = 4
    T = haar_unitary(m, rng) * rng.uniform(0.3, 1)
    a1 = rng.normal(size=2) + 1j * rng.normal(size=2)
    a2 = rng.normal(size=2) + 1j * rng.normal(size=2)
    h1 = HeraldedState(a1, float(np.vdot(a1, a1).real), (0, 1))
    h2 = HeraldedState(a2, float(np.vdot(a2, a2).real), (2, 3))
    det1, det2 = rng.choice(m, 2, replace=False)
    p = two_photon_event(T, h1, h2, int(det1), int(det2), gamma)
    ref = oracle_two_photon(T, h1.embedded(m), h2.embedded(m), det1, det2, gamma)
    assert p == pytest.approx(ref, abs=1e-10)


def test_permanent_limit():
    rng = np.random.default_rng(3)
    T = haar_unitary(4, rng)
    h1 = HeraldedState(np.ones(1), 1.0, (0,))
    h2 = HeraldedState(np.ones(1), 1.0, (1,))
    sub = T[np.ix_([2, 3], [0, 1])]
    perm = sub[0, 0] * sub[1, 1] + sub[0, 1] * sub[1, 0]
    assert two_photon_event(T, h1, h2, 2, 3, 1.0) == pytest.approx(abs(perm) ** 2)


# ------------------------------------------------------------- HOM

def test_hom_scan():
    scan = hom_scan(SPLITTER, [-50, 0, 50], sigma=1.0)
    assert scan.coincidence[1] == pytest.approx(0, abs=1e-15)
    assert scan.coincidence[0] == pytest.approx(0.5)
    assert scan.visibility == pytest.approx(1)
    for g0 in (0.3, 0.762, 0.9):
        assert hom_scan(SPLITTER, [0], 1.0, gamma0=g0).visibility == pytest.approx(g0)
    with pytest.raises(ConfigError):
        hom_scan(SPLITTER, [0], 0.0)


def test_gamma_from_delay():
    assert gamma_from_delay(0, 2.0) == 1
    assert gamma_from_delay(2.0, 2.0, 0.5) == pytest.approx(0.5 * np.exp(-0.5))


# ------------------------------------------------------------- swapping

@pytest.mark.parametrize("phi", [0.0, 0.4, 1.535 * np.pi])
def test_ideal_swap_heralds_target(phi):
    cs = swapped_state(gate_library("T_S").matrix, _sources(), (0, 5), 1.0, phi)
    sub = cs.restrict([0, 1], [0, 1])
    assert sub.fidelity(swap_target(phi)) == pytest.approx(1, abs=1e-9)


def test_swap_fidelity_law():
    G = gate_library("T_S").matrix
    grid = np.linspace(0, 1, 21)
    fids = [swapped_state(G, _sources(), (0, 5), g).restrict([0, 1], [0, 1]).fidelity(swap_target(0))
            for g in grid]
    np.testing.assert_allclose(fids, (1 + grid) / 2, atol=1e-9)
    assert np.all(np.diff(fids) >= -1e-12)


def test_swap_law_matches_oracle():
    G = gate_library("Swap4").matrix
    s1 = BiphotonSource.maximally_entangled(2, (0, 1))
    s2 = BiphotonSource.maximally_entangled(2, (2, 3))
    for g in np.linspace(0, 1, 21):
        rho, _ = oracle_swapped(G, s1, s2, 0, 3, g)
        f = np.vdot(swap_target(0), rho @ swap_target(0)).real
        assert f == pytest.approx((1 + g) / 2, abs=1e-9)


def test_second_channel_swap():
    cm = gate_library("T_S").channel_map
    pattern = default_swap_pattern(cm, 1)
    assert pattern == (2, 7)
    cs = swapped_state(gate_library("T_S").matrix, _sources(), pattern, 1.0, 0.3)
    assert cs.restrict([2, 3], [2, 3]).fidelity(swap_target(0.3)) == pytest.approx(1, abs=1e-9)
    assert len(swap_patterns(cm, 0)) == 4


def test_bunching_patterns():
    G = gate_library("T_S").matrix
    with pytest.raises(UnheraldablePatternError):
        swapped_state(G, _sources(), (0, 4), 1.0, 0.0)
    with pytest.raises(InvalidPatternError):
        swapped_state(G, _sources(), (3, 3), 1.0, 0.0)
    # the mirror pattern heralds the conjugate phase
    cs = swapped_state(G, _sources(), (1, 4), 1.0, 0.8).restrict([0, 1], [0, 1])
    assert cs.fidelity(swap_target(-0.8)) == pytest.approx(1, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 2 * np.pi))
def test_swapped_state_matches_oracle_and_is_valid(seed, gamma, phi):
    rng = np.random.default_rng(seed)
    T = haar_unitary(4, rng)
    lam1 = np.abs(rng.normal(size=2)) + 0.05
    lam2 = np.abs(rng.normal(size=2)) + 0.05
    s1 = BiphotonSource(lam1 / np.linalg.norm(lam1), (0, 1))
    s2 = BiphotonSource(lam2 / np.linalg.norm(lam2), (2, 3))
    cs = swapped_state(T, (s1, s2), (0, 2), gamma, phi)
    np.testing.assert_allclose(cs.rho, cs.rho.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(cs.rho).min() > -1e-10
    assert np.trace(cs.rho).real == pytest.approx(1)
    ref, p = oracle_swapped(apply_inter_pol_phase(T, phi), s1, s2, 0, 2, gamma)
    np.testing.assert_allclose(cs.rho, ref, atol=1e-10)
    assert cs.probability == pytest.approx(p, abs=1e-10)


# ------------------------------------------------------------- counts

def test_sample_counts():
    tab = CountTable(2, {(0, 0): np.array([[0.5, 0.0], [0.0, 0.5]])})
    c = sample_counts(tab, 1e6, 1.0, seed=1)
    n = c.data[(0, 0)]
    assert n[0, 1] == 0 and n[1, 0] == 0
    assert abs(n[0, 0] - 5e5) < 5 * np.sqrt(5e5)
    np.testing.assert_array_equal(sample_counts(tab, 1e6, 1.0, seed=1).data[(0, 0)], n)
    with pytest.raises(ConfigError):
        sample_counts(tab, -1, 1.0)
    with pytest.raises(ConfigError):
        sample_counts(CountTable(2, {(0, 0): np.full((2, 2), 1.5)}), 1, 1)
    bg = sample_counts(tab, 1e4, 1.0, seed=0, background=0.01).data[(0, 0)]
    assert bg[0, 1] > 0


def test_count_table_csv_roundtrip(tmp_path):
    probs = state_prob_table(np.eye(4) / 4, 2)
    counts = sample_counts(probs, 100, 2.0, seed=0)
    counts.to_csv(tmp_path / "c.csv")
    header = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert header == "basis_m,basis_n,outcome_a,outcome_b,counts"
    back = CountTable.from_csv(tmp_path / "c.csv")
    assert back.settings == counts.settings
    for k in counts.settings:
        np.testing.assert_array_equal(back.data[k], counts.data[k])


def test_state_prob_table_normalised():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    rho = A @ A.conj().T
    rho /= np.trace(rho)
    tab = state_prob_table(rho, 3)
    assert len(tab.settings) == 16
    for v in tab.data.values():
        assert v.sum() == pytest.approx(1)
