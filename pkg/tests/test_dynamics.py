import math

import numpy as np
import pytest

from purispec import (
    DimensionError,
    FockState,
    ModelSpec,
    TimeGrid,
    ValidationError,
    build_hamiltonian,
    build_observable_zz,
    eigen_expectations,
    evolve_state,
    fock_vector,
    half_chain_entropy,
    loschmidt_G,
    loschmidt_G_A,
    loschmidt_G_sigma,
    probe_interferometer,
    purified_G,
    purified_overlap_check,
    stochastic_trace_G,
)
from purispec.dynamics import (
    AliasingError,
    loschmidt_G_sigma_all,
    random_state,
    read_series_csv,
    write_series_csv,
)

from conftest import random_spec, spectrum_of

TWO_LEVEL = ModelSpec("ising", 1, h_x=0.3)
GRID = TimeGrid(0.05, 400)


def test_time_grid():
    g = TimeGrid.up_to(10.0, 0.3)
    assert g.T == pytest.approx(10.0) and g.dt <= 0.3
    assert len(g) == g.n_steps + 1 == g.times.size
    with pytest.raises(ValidationError):
        TimeGrid(0.0, 3)
    s = spectrum_of(ModelSpec("ising", 3, h_x=0.5))
    assert TimeGrid.for_spectrum(s, 5.0).dt <= math.pi / s.bandwidth
    with pytest.raises(AliasingError):
        TimeGrid(1.0, 5).check_aliasing(2 * math.pi)


def test_G_two_level():
    G = loschmidt_G(spectrum_of(TWO_LEVEL), GRID)
    assert G.values[0] == 1
    np.testing.assert_allclose(G.values, np.cos(0.15 * GRID.times), atol=1e-14)


def test_G_classical_bond():
    G = loschmidt_G(spectrum_of(ModelSpec("ising", 2)), GRID)
    np.testing.assert_allclose(G.values, np.cos(GRID.times / 4), atol=1e-14)


def test_G_sigma_examples():
    G = loschmidt_G_sigma(spectrum_of(TWO_LEVEL), FockState.from_string("u"), GRID)
    np.testing.assert_allclose(G.values, np.cos(0.15 * GRID.times), atol=1e-14)
    s = spectrum_of(ModelSpec("ising", 3, h_z=0.2, r_z=2.0, seed=5))
    for sigma in range(8):
        G = loschmidt_G_sigma(s, sigma, GRID)
        assert G.values[0] == pytest.approx(1, abs=1e-15)
        np.testing.assert_allclose(np.abs(G.values), 1, atol=1e-13)
    with pytest.raises(ValidationError):
        loschmidt_G_sigma(s, 8, GRID)


def test_G_sigma_average_is_G(rng):
    for _ in range(10):
        s = spectrum_of(random_spec(rng, 1, 6))
        all_sigma = loschmidt_G_sigma_all(s, GRID)
        np.testing.assert_allclose(all_sigma.mean(axis=0), loschmidt_G(s, GRID).values, atol=1e-10)
        assert np.all(np.abs(all_sigma) <= 1 + 1e-12)


def test_G_A():
    s = spectrum_of(ModelSpec("ising", 3, h_x=0.4, h_z=0.1))
    np.testing.assert_allclose(loschmidt_G_A(s, np.ones(8), GRID).values,
                               loschmidt_G(s, GRID).values, atol=1e-14)
    np.testing.assert_array_equal(loschmidt_G_A(s, np.zeros(8), GRID).values, 0)
    s2 = spectrum_of(ModelSpec("ising", 2))
    A_n = eigen_expectations(s2, build_observable_zz(2))
    assert loschmidt_G_A(s2, A_n, GRID).values[0] == pytest.approx(0, abs=1e-16)
    A = build_observable_zz(3)
    assert loschmidt_G_A(s, eigen_expectations(s, A), GRID).values[0] == pytest.approx(np.trace(A) / 8)
    with pytest.raises(DimensionError):
        loschmidt_G_A(s, np.ones(4), GRID)


def test_conjugation_symmetry(rng):
    s = spectrum_of(random_spec(rng, 3, 5))
    forward = loschmidt_G(s, GRID).values
    backward = np.exp(1j * np.outer(GRID.times, s.energies)).mean(axis=1)
    np.testing.assert_allclose(backward, forward.conj(), atol=1e-14)
    np.testing.assert_allclose(forward.real, backward.real, atol=1e-14)
    np.testing.assert_allclose(forward.imag, -backward.imag, atol=1e-14)


def test_evolve_state_examples(rng):
    s = spectrum_of(TWO_LEVEL)
    up = fock_vector(0, 2)
    np.testing.assert_allclose(evolve_state(s, up, 0.0), up, atol=1e-15)
    psi = evolve_state(s, up, math.pi / 0.3)
    assert abs(psi[0]) < 1e-14 and abs(psi[1]) == pytest.approx(1)

    s4 = spectrum_of(ModelSpec("ising", 4, h_x=0.5, h_z=0.1))
    n = 5
    eig = s4.vectors[:, n].astype(complex)
    np.testing.assert_allclose(evolve_state(s4, eig, 2.3), np.exp(-2.3j * s4.energies[n]) * eig, atol=1e-13)
    psi0 = random_state(16, rng)
    for t in (0.5, 7.0, 123.0):
        assert np.linalg.norm(evolve_state(s4, psi0, t)) == pytest.approx(1, abs=1e-10)
    G = loschmidt_G_sigma(s4, 3, TimeGrid(0.7, 10))
    for k, t in enumerate(G.times):
        overlap = np.vdot(fock_vector(3, 16), evolve_state(s4, fock_vector(3, 16), t))
        assert overlap == pytest.approx(G.values[k], abs=1e-13)
    with pytest.raises(ValidationError):
        evolve_state(s4, 2 * psi0, 1.0)


def test_purified_overlap():
    assert purified_overlap_check(ModelSpec("ising", 2, h_x=0.5), GRID) < 1e-10
    assert purified_overlap_check(ModelSpec("ising", 3, h_z=0.3, r_z=1.0, seed=2), GRID) < 1e-12
    G = purified_G(build_hamiltonian(ModelSpec("ising", 2, h_x=0.5)), TimeGrid(0.1, 3))
    assert G.values[0] == pytest.approx(1, abs=1e-15)
    with pytest.raises(DimensionError):
        purified_overlap_check(ModelSpec("ising", 7), GRID)


def test_consistency_triangle(rng):
    for _ in range(8):
        spec = random_spec(rng, 1, 5)
        s = spectrum_of(spec)
        G = loschmidt_G(s, GRID).values
        purified = purified_G(build_hamiltonian(spec), GRID).values
        sigma_avg = loschmidt_G_sigma_all(s, GRID).mean(axis=0)
        assert np.max(np.abs(G - purified)) < 1e-10
        assert np.max(np.abs(G - sigma_avg)) < 1e-10


def test_probe_interferometer_examples():
    s = spectrum_of(TWO_LEVEL)
    up = fock_vector(0, 2)
    assert probe_interferometer(s, up, 0.0) == pytest.approx((1.0, 0.0), abs=1e-15)
    x, y = probe_interferometer(s, up, 1.0)
    assert x == pytest.approx(math.cos(0.15), abs=1e-14) and abs(y) < 1e-14
    s4 = spectrum_of(ModelSpec("ising", 4, h_x=0.5, h_z=0.1))
    n, t = 3, 2.7
    x, y = probe_interferometer(s4, s4.vectors[:, n].astype(complex), t)
    E = s4.energies[n]
    assert (x, y) == pytest.approx((math.cos(t * E), -math.sin(t * E)), abs=1e-13)


def test_probe_interferometer_matches_direct_overlap(rng):
    for _ in range(30):
        s = spectrum_of(random_spec(rng, 1, 5))
        psi0 = random_state(s.dim, rng)
        t = rng.uniform(0, 50)
        g = np.vdot(psi0, evolve_state(s, psi0, t))
        x, y = probe_interferometer(s, psi0, t)
        assert abs(x - g.real) < 1e-12 and abs(y - g.imag) < 1e-12


def test_stochastic_trace():
    s = spectrum_of(ModelSpec("ising", 6, h_x=0.5))
    grid = TimeGrid(0.25, 80)
    est = stochastic_trace_G(s, grid, 200, seed=11)
    exact = loschmidt_G(s, grid).values
    assert est.values[0] == pytest.approx(1, abs=1e-12)
    assert np.max(np.abs(est.values - exact)) < 5 * np.max(est.stderr)
    again = stochastic_trace_G(s, grid, 200, seed=11)
    np.testing.assert_array_equal(again.values, est.values)
    # error shrinks as samples^-1/2
    small = stochastic_trace_G(s, grid, 50, seed=3)
    ratio = np.mean(small.stderr[1:]) / np.mean(est.stderr[1:])
    assert 1.5 < ratio < 2.7
    with pytest.raises(ValidationError):
        stochastic_trace_G(s, grid, 0, seed=1)


def test_half_chain_entropy():
    assert half_chain_entropy(fock_vector(5, 16), 4) == 0.0
    bell = np.zeros(4, complex)
    bell[[1, 2]] = 1 / math.sqrt(2)
    assert half_chain_entropy(bell, 2) == pytest.approx(math.log(2))
    # maximally entangled across the middle of 4 sites: identity Schmidt matrix
    psi = (np.eye(4) / 2).reshape(16).astype(complex)
    assert half_chain_entropy(psi, 4) == pytest.approx(2 * math.log(2))


def test_entropy_bound_and_classical_evolution(rng):
    for L in (4, 5, 6):
        s = spectrum_of(random_spec(rng, L, L))
        for t in (0.0, 1.0, 10.0):
            S = half_chain_entropy(evolve_state(s, random_state(s.dim, rng), t), L)
            assert 0 <= S <= (L // 2) * math.log(2) + 1e-12
    s = spectrum_of(ModelSpec("ising", 6, h_z=0.2, r_z=2.0, seed=9))
    for t in (0.0, 3.0, 30.0):
        assert half_chain_entropy(evolve_state(s, fock_vector(37, 64), t), 6) < 1e-12


def test_series_csv_round_trip(tmp_path):
    G = loschmidt_G(spectrum_of(ModelSpec("ising", 3, h_x=0.5)), TimeGrid(0.1, 20))
    write_series_csv(tmp_path / "g.csv", G)
    text = (tmp_path / "g.csv").read_text().splitlines()
    assert text[0] == "t,re,im"
    back = read_series_csv(tmp_path / "g.csv", dim=8)
    np.testing.assert_array_equal(back.values, G.values)
