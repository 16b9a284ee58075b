import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosegrid.distribution import Distribution
from bosegrid.finiterep import build, commutator_cutoff, diagonalize, energy_range
from bosegrid.measure import (AncillaDistribution, PauliDecomposition, QPEConfig, ank_matrix, ank_value,
                              boson_distribution, field_histograms, high_energy_probability, pauli_decomposition,
                              pauli_string, qpe_distribution, qst_roundtrip, sample_shots)


@pytest.fixture(scope="module")
def sys64():
    rep = build(64)
    eig = diagonalize(rep)
    return rep, eig, QPEConfig.from_eigensystem(rep, eig), commutator_cutoff(64, 1e-4)


def random_density(dim, rank, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


# --- ancilla amplitudes ---------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(e=st.floats(-50, 300), k=st.integers(0, 127))
def test_ank_matches_direct_sum(e, k):
    M = 128
    direct = np.exp(-2j * math.pi * (e - k) * np.arange(M) / M).mean()
    assert ank_value(e, k, 7) == pytest.approx(direct, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(e=st.floats(0, 200), k=st.integers(0, 255))
def test_ank_magnitude_bounded(e, k):
    assert abs(ank_value(e, k, 8)) <= 1 + 1e-12


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 127), mu=st.floats(-0.5, 0.5))
def test_ank_near_resonance(k, mu):
    assert abs(ank_value(k + mu, k, 7)) >= 2 / math.pi - 1e-12


def test_ank_exact_resonance():
    assert ank_value(5.0, 5, 4) == 1.0
    assert abs(ank_value(21.0, 5, 4)) == pytest.approx(1.0)  # aliased by 2^n_r
    with pytest.raises(ValueError):
        ank_value(1.0, 16, 4)


def test_amplitude_rows_are_unit(sys64):
    _, _, cfg, _ = sys64
    a = ank_matrix(cfg)
    np.testing.assert_allclose(np.sum(np.abs(a) ** 2, axis=1), 1.0, atol=1e-12)


def test_high_readout_weight_of_high_states(sys64):
    _, _, cfg, nb = sys64
    a2 = np.abs(ank_matrix(cfg)) ** 2
    assert np.all(a2[nb:, nb:].sum(axis=1) >= 4 / math.pi ** 2)


# --- configuration ------------------------------------------------------------

@pytest.mark.parametrize("n", [32, 64, 128, 256])
def test_spectral_range_fits_register(n):
    rep = build(n)
    eig = diagonalize(rep)
    assert energy_range(eig) < 2 * n
    cfg = QPEConfig.from_eigensystem(rep, eig)
    assert cfg.n_r == int(math.log2(n)) + 1
    assert cfg.theta == pytest.approx(1 / 2 ** cfg.n_r)


def test_register_too_small(sys64):
    rep, eig, _, _ = sys64
    with pytest.raises(ValueError):
        QPEConfig.from_eigensystem(rep, eig, n_r=5)


# --- distributions ------------------------------------------------------------

def test_low_eigenstates_read_out_exactly(sys64):
    _, _, cfg, nb = sys64
    for n in range(nb):
        c = np.zeros(64)
        c[n] = 1.0
        d = qpe_distribution(c, cfg, nb)
        assert d.probs[n] == pytest.approx(1.0, abs=1e-8)
        assert d.p_all < 1e-8


def test_low_state_mixture_reproduces_boson_distribution(sys64):
    _, _, cfg, nb = sys64
    rng = np.random.default_rng(3)
    c = np.zeros((3, 64), complex)
    c[:, :20] = rng.normal(size=(3, 20)) + 1j * rng.normal(size=(3, 20))
    c /= np.linalg.norm(c)
    d = qpe_distribution(c, cfg, nb)
    occ = np.sum(np.abs(c) ** 2, axis=0)
    np.testing.assert_allclose(d.probs[:64], occ, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), decay=st.floats(0.0, 0.3))
def test_high_energy_bounds(sys64, seed, decay):
    _, _, cfg, nb = sys64
    rng = np.random.default_rng(seed)
    c = (rng.normal(size=(2, 64)) + 1j * rng.normal(size=(2, 64))) * np.exp(-decay * np.arange(64))
    c /= np.linalg.norm(c)
    d = qpe_distribution(c, cfg, nb)
    eps_h = high_energy_probability(c, nb)
    assert d.p1max <= eps_h + 1e-12
    assert eps_h <= math.pi ** 2 / 4 * d.p_all + 1e-12
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-12) and np.all(d.probs >= 0)


def test_unnormalized_state_rejected(sys64):
    _, _, cfg, nb = sys64
    with pytest.raises(ValueError):
        qpe_distribution(np.ones(64), cfg, nb)
    with pytest.raises(ValueError):
        qpe_distribution(np.ones(8) / math.sqrt(8), cfg, nb)
    with pytest.raises(ValueError):
        AncillaDistribution(np.array([0.5, 0.4]), 1, 0.4, 0.4)


def test_shots():
    d = Distribution(np.arange(3), np.array([0.2, 0.3, 0.5]))
    a = sample_shots(d, 1000, seed=7)
    assert a.sum() == 1000
    np.testing.assert_array_equal(a, sample_shots(d, 1000, seed=7))
    with pytest.raises(ValueError):
        sample_shots(d, 10, seed=None)


# --- histograms ---------------------------------------------------------------

def test_ground_state_histograms():
    rep = build(32, 2.0)
    eig = diagonalize(rep)
    g = eig.states[:, 0]
    p_phi, p_kappa = field_histograms(g, rep.grid)
    np.testing.assert_allclose(p_phi.probs, p_phi.probs[::-1], atol=1e-15)
    # the discrete ground state is an eigenvector of the transform
    np.testing.assert_allclose(p_kappa.probs, p_phi.probs, atol=1e-12)
    np.testing.assert_allclose(p_kappa.support, 2.0 * p_phi.support)
    gauss = np.exp(-2.0 * rep.phi ** 2)
    np.testing.assert_allclose(p_phi.probs, gauss / gauss.sum(), atol=1e-10)


def test_histograms_of_density_matrix():
    rep = build(16)
    rho = random_density(16, 3, 1)
    p_phi, p_kappa = field_histograms(rho, rep.grid)
    assert p_phi.total() == pytest.approx(1.0, abs=1e-12)
    assert p_kappa.total() == pytest.approx(1.0, abs=1e-12)
    u = rep.fft_op.conj().T
    np.testing.assert_allclose(p_kappa.probs, np.real(np.diag(u @ rho @ u.conj().T)), atol=1e-13)
    with pytest.raises(ValueError):
        field_histograms(np.ones(8), rep.grid)


# --- tomography ---------------------------------------------------------------

def test_pauli_string_matches_kron():
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])
    np.testing.assert_allclose(pauli_string([1, 3]), np.kron(x, z))


def test_decomposition_matches_explicit_traces():
    rho = random_density(8, 2, 5)
    dec = pauli_decomposition(rho)
    for v in itertools.product(range(4), repeat=3):
        assert dec.coeffs[v] == pytest.approx(np.trace(pauli_string(v) @ rho).real, abs=1e-12)
    assert dec.coeffs[0, 0, 0] == pytest.approx(1.0)


def test_maximally_mixed():
    dec = pauli_decomposition(np.eye(16) / 16)
    expect = np.zeros((4,) * 4)
    expect[0, 0, 0, 0] = 1.0
    np.testing.assert_allclose(dec.coeffs, expect, atol=1e-15)


def test_roundtrip_ground_state():
    rep = build(16)
    eig = diagonalize(rep)
    g = eig.states[:, 0]
    dec, rec, p = qst_roundtrip(np.outer(g, g), 4, eig)
    assert p.probs[0] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(rec - np.outer(g, g))) <= 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_roundtrip_random_mixed(seed):
    rep = build(16)
    eig = diagonalize(rep)
    rho = random_density(16, 4, seed)
    dec, rec, p = qst_roundtrip(rho, 4, eig)
    assert np.max(np.abs(rec - rho)) <= 1e-12
    direct = np.array([np.real(v.conj() @ rho @ v) for v in eig.states.T])
    np.testing.assert_allclose(p.probs, direct, atol=1e-12)
    np.testing.assert_allclose(rec, rec.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(rec).min() >= -1e-10


def test_tomography_validation():
    rep = build(16)
    eig = diagonalize(rep)
    with pytest.raises(ValueError):
        qst_roundtrip(np.eye(8) / 8, 4, eig)
    with pytest.raises(ValueError):
        qst_roundtrip(np.eye(8) / 8, 3, eig)
    with pytest.raises(ValueError):
        pauli_decomposition(np.eye(6) / 6)
    with pytest.raises(ValueError):
        PauliDecomposition(np.zeros((4, 4)), 3)
    assert boson_distribution(np.eye(16) / 16, eig).total() == pytest.approx(1.0)
