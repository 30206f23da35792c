import math

import numpy as np
import pytest
import scipy.integrate
import scipy.optimize
import scipy.special

from purispec import (
    ComplexTimeSeries,
    EnergyGrid,
    ModelSpec,
    Spectrum,
    TimeGrid,
    ValidationError,
    build_observable_zz,
    critical_time,
    dos_closed_form,
    dos_from_series,
    eigen_expectations,
    fock_distribution,
    fock_distribution_from_series,
    loschmidt_G,
    loschmidt_G_A,
    loschmidt_G_sigma,
    observable_Ac,
    observable_Ar,
    observable_Ar_from_series,
    sinc_kernel,
    weights_matrix,
)
from purispec.dynamics import AliasingError
from purispec.reconstruct import find_peaks, integrate, integrated

from conftest import spectrum_of

FIG2A = ModelSpec("ising", 8, h_x=0.5, h_z=0.01)


def levels(*energies):
    E = np.array(sorted(energies), float)
    return Spectrum(E, np.eye(E.size))


def test_sinc_kernel_values():
    assert sinc_kernel(0.0, math.pi) == pytest.approx(1.0)
    assert sinc_kernel(0.0, 7.0) == pytest.approx(7 / math.pi)
    assert sinc_kernel(math.pi / 3.0, 3.0) == pytest.approx(0.0, abs=1e-15)
    eps = np.array([1e-9, 0.3, -2.0])
    np.testing.assert_allclose(sinc_kernel(eps, 4.0), np.sin(4 * eps) / (np.pi * eps), rtol=1e-12)
    with pytest.raises(ValidationError):
        sinc_kernel(0.1, 0.0)


@pytest.mark.xfail(strict=True, reason="truncated at +-50/T the integral is 2 Si(50)/pi = 0.9878")
@pytest.mark.parametrize("T", [1.0, 5.0, 40.0])
def test_sinc_kernel_normalization(T):
    total, _ = scipy.integrate.quad(lambda e: sinc_kernel(e, T), -50 / T, 50 / T, limit=500)
    assert total == pytest.approx(1.0, abs=1e-2)


@pytest.mark.parametrize("T", [1.0, 5.0, 40.0])
def test_sinc_kernel_truncated_weight(T):
    si50 = scipy.special.sici(50.0)[0]
    total, _ = scipy.integrate.quad(lambda e: sinc_kernel(e, T), -50 / T, 50 / T, limit=500)
    assert total == pytest.approx(2 * si50 / math.pi, abs=1e-10)
    # the tail beyond +-X/T falls off like 2/(pi X)
    for X in (50.0, 500.0, 5000.0):
        assert abs(2 * scipy.special.sici(X)[0] / math.pi - 1) < 2 / (math.pi * X)


def test_energy_grid():
    g = EnergyGrid.around(-1.0, 1.0, 10.0)
    assert g.spacing <= 1 / 80 + 1e-15
    assert g.e_min == pytest.approx(-2.0) and g.e_max == pytest.approx(2.0)
    g.check_resolution(10.0)
    with pytest.raises(ValidationError):
        g.check_resolution(100.0)
    with pytest.raises(ValidationError):
        EnergyGrid(1.0, 0.0, 10)


def test_dos_single_level_and_short_time():
    s = levels(0.3)
    g = EnergyGrid.around(0.3, 0.3, 2.0)
    np.testing.assert_allclose(dos_closed_form(s, g, 2.0).values, sinc_kernel(g.energies - 0.3, 2.0))
    s8 = spectrum_of(FIG2A)
    T = 0.05
    g = EnergyGrid(s8.energies[0], s8.energies[-1], 50)
    rho = dos_closed_form(s8, g, T).values
    np.testing.assert_allclose(rho, T / math.pi * s8.dim, rtol=0.02)


def test_dos_peak_at_isolated_levels():
    s = levels(-1.0, 0.0, 0.0, 2.0)
    T = 200.0
    rho = dos_closed_form(s, EnergyGrid(-1.5, 2.5, 8001), T)
    assert rho(-1.0) == pytest.approx(T / math.pi, rel=1e-2)
    assert rho(0.0) == pytest.approx(2 * T / math.pi, rel=1e-2)


def test_signal_path_unit_signal():
    grid = TimeGrid.up_to(3.0, 1e-3)
    G = ComplexTimeSeries(grid, np.ones(len(grid)), dim=1, bandwidth=0.0)
    eg = EnergyGrid.around(0.0, 0.0, 3.0)
    rho = dos_from_series(G, eg)
    np.testing.assert_allclose(rho.values, sinc_kernel(eg.energies, 3.0), atol=1e-6)


def test_signal_path_matches_closed_form():
    s = spectrum_of(FIG2A)
    T = 20.0
    G = loschmidt_G(s, TimeGrid.for_spectrum(s, T, dt=1e-3))
    eg = EnergyGrid.default(s, T)
    deviation = np.max(np.abs(dos_from_series(G, eg).values - dos_closed_form(s, eg, T).values))
    assert deviation < 1e-6 * (T / math.pi) * s.dim


def test_trapezoid_error_is_second_order():
    s = spectrum_of(ModelSpec("ising", 5, h_x=0.5, h_z=0.1))
    T = 10.0
    eg = EnergyGrid.default(s, T)
    exact = dos_closed_form(s, eg, T).values
    errors = []
    for dt in (0.02, 0.01):
        rho = dos_from_series(loschmidt_G(s, TimeGrid.up_to(T, dt)), eg).values
        errors.append(np.max(np.abs(rho - exact)))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.05)


def test_aliasing_guard():
    s = spectrum_of(FIG2A)
    G = loschmidt_G(s, TimeGrid.up_to(20.0, 2 * math.pi / s.bandwidth))
    with pytest.raises(AliasingError):
        dos_from_series(G, EnergyGrid.default(s, 20.0))


def test_reconstruction_linearity(rng):
    s1 = spectrum_of(ModelSpec("ising", 4, h_x=0.5))
    s2 = spectrum_of(ModelSpec("xxz", 4, j=0.5, h_z=0.2))
    grid = TimeGrid.up_to(8.0, 0.05)
    G1, G2 = loschmidt_G(s1, grid), loschmidt_G(s2, grid)
    eg = EnergyGrid.around(-2.0, 2.0, 8.0)
    a, b = 0.7, -1.3
    combined = dos_from_series(a * G1 + b * G2, eg).values
    separate = a * dos_from_series(G1, eg).values + b * dos_from_series(G2, eg).values
    np.testing.assert_allclose(combined, separate, atol=1e-12 * 8 / math.pi * 16)


def test_dos_counting_and_negativity():
    s = spectrum_of(FIG2A)
    T = 100.0 / s.bandwidth * 1.2
    eg = EnergyGrid.around(s.energies[0], s.energies[-1], T, margin=20)
    rho = dos_closed_form(s, eg, T)
    assert integrate(rho) == pytest.approx(s.dim, rel=0.02)
    phi = integrated(rho)
    assert phi[-1] == pytest.approx(s.dim, rel=0.02)
    assert np.all(np.diff(phi)[eg.energies[1:] > s.energies[-1] + 5 / T] > -1)
    # negativity bounded by the first side lobe of the local peak
    for T in (5.0, 50.0, 500.0):
        eg = EnergyGrid.default(s, T)
        values = dos_closed_form(s, eg, T).values
        peak = max(values.max(), T / math.pi)
        assert values.min() >= -0.3 * peak


def test_observable_functions():
    s = spectrum_of(FIG2A)
    T = 10.0
    eg = EnergyGrid.default(s, T)
    rho = dos_closed_form(s, eg, T)
    ident = observable_Ar(s, np.ones(s.dim), eg, T)
    np.testing.assert_allclose(ident.values, rho.values, atol=1e-12)
    ac = observable_Ac(ident, rho)
    np.testing.assert_allclose(ac.values[ac.valid], 1.0, atol=1e-12)
    assert ac.valid.mean() > 0.5
    const = observable_Ar(s, np.full(s.dim, -0.2), eg, T)
    np.testing.assert_allclose(const.values, -0.2 * rho.values, atol=1e-12)
    ac = observable_Ac(const, rho)
    np.testing.assert_allclose(ac.values[ac.valid], -0.2, atol=1e-12)
    assert np.all(ac.values[~ac.valid] == 0)
    assert np.all(np.abs(rho.values[~ac.valid]) < 0.05 * T / math.pi)


def test_observable_Ac_interpolates_eigenstate_cloud():
    s = spectrum_of(FIG2A)
    A_n = eigen_expectations(s, build_observable_zz(8))
    T = 10.0
    eg = EnergyGrid.default(s, T)
    ac = observable_Ac(observable_Ar(s, A_n, eg, T), dos_closed_form(s, eg, T))
    bulk = (eg.energies > -1.0) & (eg.energies < 1.0)
    assert np.all(ac.valid[bulk])
    assert np.all(ac.values[bulk] >= A_n.min()) and np.all(ac.values[bulk] <= A_n.max())
    # smooth: no grid-scale wiggles
    assert np.max(np.abs(np.diff(ac.values[bulk], 2))) < 1e-3


def test_peak_values_resolve_A_n():
    s = levels(-1.0, 0.5, 2.0)
    A_n = np.array([0.3, -0.1, 0.7])
    T = 400.0
    eg = EnergyGrid.around(-1.0, 2.0, T)
    ar = observable_Ar(s, A_n, eg, T)
    np.testing.assert_allclose(math.pi / T * ar(s.energies), A_n, atol=2e-3)


def test_observable_signal_path():
    s = spectrum_of(FIG2A)
    A_n = eigen_expectations(s, build_observable_zz(8))
    T = 20.0
    eg = EnergyGrid.default(s, T)
    series = observable_Ar_from_series(loschmidt_G_A(s, A_n, TimeGrid.for_spectrum(s, T, 1e-3)), eg)
    np.testing.assert_allclose(series.values, observable_Ar(s, A_n, eg, T).values, atol=1e-6 * T / math.pi)


def test_fock_distribution():
    diag = spectrum_of(ModelSpec("ising", 3, h_z=0.3, r_z=2.0, seed=4))
    T = 300.0
    M = weights_matrix(diag)
    eg = EnergyGrid.default(diag, T)
    rho = fock_distribution(diag, M, 2, eg, T)
    heights = find_peaks(rho, min_height=0.5)[1]
    assert heights.size == 1 and heights[0] == pytest.approx(1.0, abs=1e-3)

    two = spectrum_of(ModelSpec("ising", 1, h_x=0.3))
    eg = EnergyGrid.default(two, T)
    rho = fock_distribution(two, weights_matrix(two), 0, eg, T)
    pos, heights = find_peaks(rho, min_height=0.2)
    np.testing.assert_allclose(pos, [-0.15, 0.15], atol=1e-4)
    # each peak carries the other's kernel tail
    np.testing.assert_allclose(heights, 0.5 * (1 + np.sinc(0.3 * T / math.pi)), atol=1e-3)

    s = spectrum_of(FIG2A)
    T = 30.0
    eg = EnergyGrid.around(s.energies[0], s.energies[-1], T, margin=60)
    rho = fock_distribution(s, weights_matrix(s), 77, eg, T)
    assert integrate(rho) * T / math.pi == pytest.approx(1.0, abs=1e-2)

    series = fock_distribution_from_series(loschmidt_G_sigma(s, 77, TimeGrid.for_spectrum(s, T, 1e-3)), eg)
    np.testing.assert_allclose(series.values, rho.values, atol=1e-6)


def test_critical_time_uniform_spacing():
    s = levels(*np.arange(20) * 0.25)
    for E in (0.0, 1.3, 4.75):
        assert critical_time(s, E) == pytest.approx(4.0)
    with pytest.raises(ValidationError):
        critical_time(s, 5.0)


def test_critical_time_degenerate_levels():
    s = levels(0, 0, 0, 0, 0, 0, 0, 1, 2)
    assert math.isfinite(critical_time(s, 0.0)) and critical_time(s, 0.0) > 0


def test_gap_resolution_threshold():
    def resolved(Tg):
        s = levels(-0.5, 0.5)
        eg = EnergyGrid.around(-0.5, 0.5, Tg, margin=3, points_per_width=400)
        main_lobes = 0.5 + 2 / Tg
        return find_peaks(dos_closed_form(s, eg, Tg), -main_lobes, main_lobes)[0].size >= 2

    threshold = scipy.optimize.bisect(lambda x: resolved(x) - 0.5, 1.0, 10.0, xtol=1e-3)
    # independent: first sign change of sinc'' at x = Tg/2
    d2 = lambda x: (-x * x * math.sin(x) - 2 * x * math.cos(x) + 2 * math.sin(x)) / x**3
    analytic = 2 * scipy.optimize.brentq(d2, 1.0, 3.0)
    assert threshold == pytest.approx(analytic, abs=5e-3)
    assert math.pi <= threshold <= 1.5 * math.pi


@pytest.mark.slow
def test_critical_time_bulk_vs_edge():
    s = spectrum_of(ModelSpec("ising", 12, h_x=0.2, h_z=0.01))
    bulk = critical_time(s, 0.0)
    edge = critical_time(s, s.energies[0])
    assert bulk / edge > 10


def test_csv_export(tmp_path):
    s = levels(0.0, 1.0)
    rho = dos_closed_form(s, EnergyGrid.around(0, 1, 4.0), 4.0)
    ac = observable_Ac(rho, rho)
    ac.to_csv(tmp_path / "ac.csv")
    lines = (tmp_path / "ac.csv").read_text().splitlines()
    assert lines[0] == "E,value,valid_flag"
    flags = [int(line.split(",")[2]) for line in lines[1:]]
    assert flags == ac.valid.astype(int).tolist()
