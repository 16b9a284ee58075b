import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bosegrid.hgfunc import TailWeights, eval_hg, hg_tail_weights
from bosegrid.sampling import (FunctionDescriptor, SampledFunction, SamplingGrid, alias, alias_ft,
                               fft_matrix, fft_vs_continuous_error, hg_descriptor, lattice_error_bound,
                               reconstruct, sample, sampling_error_bound, to_conjugate, to_field)

even = st.integers(1, 40).map(lambda k: 2 * k)
vec = lambda n: arrays(np.complex128, n, elements=st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                                      allow_infinity=False))


def test_grid_geometry():
    g = SamplingGrid.from_mass(64, 1.0)
    assert g.delta_phi == pytest.approx(math.sqrt(2 * math.pi / 64))
    assert g.F == pytest.approx(math.sqrt(math.pi * 64 / 2))
    assert g.K == pytest.approx(g.F)
    assert g.phi[0] == pytest.approx(-g.phi[-1])
    assert g.phi[32] == pytest.approx(0.5 * g.delta_phi)
    g2 = SamplingGrid.from_mass(32, 4.0)
    assert g2.mass == pytest.approx(4.0) and g2.K / g2.F == pytest.approx(4.0)


def test_grid_validation():
    for bad in (0, 3, 7):
        with pytest.raises(ValueError):
            SamplingGrid.from_mass(bad)
    with pytest.raises(ValueError):
        SamplingGrid(8, 1.0, 1.0)
    with pytest.raises(ValueError):
        SampledFunction(SamplingGrid.from_mass(8), np.zeros(7))


def test_fft_matrix_unitary_and_symmetric():
    for n in (2, 8, 64):
        u = fft_matrix(n)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(n), atol=1e-13)
        np.testing.assert_allclose(u, u.T, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), n=even)
def test_fast_transform_matches_matrix(data, n):
    x = data.draw(vec(n))
    u = fft_matrix(n)
    np.testing.assert_allclose(to_field(x), u @ x, atol=1e-10)
    np.testing.assert_allclose(to_conjugate(x), u.conj().T @ x, atol=1e-10)
    np.testing.assert_allclose(to_conjugate(to_field(x)), x, atol=1e-10)
    assert np.linalg.norm(to_field(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12, abs=1e-12)


def test_transform_acts_columnwise():
    x = np.random.default_rng(0).normal(size=(16, 3))
    np.testing.assert_allclose(to_field(x)[:, 1], to_field(x[:, 1]), atol=1e-13)


def test_reconstruction_interpolates_nodes():
    g = SamplingGrid.from_mass(32)
    s = sample(lambda x: eval_hg(3, 1.0, x), g)
    np.testing.assert_allclose(reconstruct(s, g.phi), s.values, atol=1e-14)


def test_reconstruction_of_band_limited_state():
    g = SamplingGrid.from_mass(64)
    x = np.linspace(-3, 3, 51)
    s = sample(lambda y: eval_hg(4, 1.0, y), g)
    np.testing.assert_allclose(reconstruct(s, x).real, eval_hg(4, 1.0, x), atol=1e-9)


def test_sampled_norm_matches_continuum():
    g = SamplingGrid.from_mass(64)
    assert sample(lambda y: eval_hg(10, 1.0, y), g).norm() == pytest.approx(1.0, abs=1e-12)


def test_sampled_hg_maps_to_its_transform():
    # sqrt(dphi) phi_n(phi_j) -> sqrt(dk) (-i)^n phi_n(kappa_p) up to tail error
    g = SamplingGrid.from_mass(64)
    for n in (0, 5, 11):
        x = math.sqrt(g.delta_phi) * eval_hg(n, 1.0, g.phi)
        expect = math.sqrt(g.delta_kappa) * (-1j) ** n * eval_hg(n, 1.0, g.kappa)
        np.testing.assert_allclose(to_conjugate(x), expect, atol=1e-12)


def test_alias_identity_exact():
    # anti-periodized samples map exactly onto anti-periodized transform samples
    g = SamplingGrid.from_mass(16, 1.0)
    d = hg_descriptor(9, 1.0)
    np.testing.assert_allclose(to_conjugate(alias(d, g).values), alias_ft(d, g).values, atol=1e-13)


def test_fft_vs_continuous_within_tail_bound():
    for N, n in ((16, 6), (32, 14), (64, 30)):
        g = SamplingGrid.from_mass(N)
        d = hg_descriptor(n, 1.0, g.F, g.K)
        (lk, rhs), (lp, rhs2) = fft_vs_continuous_error(d, g)
        assert lk <= 1.5 * rhs + 1e-28 and lp <= 1.5 * rhs2 + 1e-28


def test_fft_vs_continuous_needs_tails():
    with pytest.raises(ValueError):
        fft_vs_continuous_error(hg_descriptor(2, 1.0), SamplingGrid.from_mass(8))


def test_roundoff_floor():
    g = SamplingGrid.from_mass(64)
    d = hg_descriptor(0, 1.0, g.F, g.K)
    (lk, _), _ = fft_vs_continuous_error(d, g)
    # squared error summed over N points sits at N (few eps)^2
    assert lk < 64 * (10 * np.finfo(float).eps) ** 2


def test_sampling_error_bound_zero_tails():
    assert sampling_error_bound(TailWeights.zero(), 3.0, 3.0) == (0.0, 0.0)


def test_sampling_error_bound_decreases_with_grid():
    vals = []
    for N in (16, 32, 64):
        g = SamplingGrid.from_mass(N)
        vals.append(sampling_error_bound(hg_tail_weights(4, 1.0, g.F, g.K), g.F, g.K)[0])
    assert vals[0] > vals[1] > vals[2]


def test_sampling_error_bound_dominates_reconstruction():
    g = SamplingGrid.from_mass(16)
    n = 6
    s = sample(lambda y: eval_hg(n, 1.0, y), g)
    x = np.linspace(-12, 12, 4001)
    err = math.sqrt(np.sum(np.abs(reconstruct(s, x) - eval_hg(n, 1.0, x)) ** 2) * (x[1] - x[0]))
    assert err <= sampling_error_bound(hg_tail_weights(n, 1.0, g.F, g.K), g.F, g.K)[0]


def test_lattice_bound_reduces_to_sum():
    t = hg_tail_weights(3, 1.0, 3.0, 3.0)
    one = lattice_error_bound([t], 3.0, 3.0, 1, 0.0, 0.0)
    two = lattice_error_bound([t, t], 3.0, 3.0, 2, 0.0, 0.0)
    assert two[0] == pytest.approx(2 * one[0]) and two[1] == pytest.approx(2 * one[1])
    bigger = lattice_error_bound([t, t], 3.0, 3.0, 2, 1e-3, 1e-3)
    assert bigger[0] > two[0]
    with pytest.raises(ValueError):
        lattice_error_bound([t], 3.0, 3.0, 2, 0.0, 0.0)


def test_descriptor_defaults():
    d = FunctionDescriptor(np.cos, np.sin)
    assert d.tails is None and d.name == "function"
