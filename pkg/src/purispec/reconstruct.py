"""Finite-time Fourier reconstruction of spectral functions.

Every coarse-grained function comes in two flavours: a closed-form sum of
``delta_T`` kernels over the exact spectrum (the oracle), and a trapezoid
quadrature of a sampled time series (the signal path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .dynamics import ComplexTimeSeries
from .eigen import Spectrum
from .errors import ValidationError
from .model import FockState

DOS = "dos"
A_R = "a_r"
A_C = "a_c"
FOCK = "fock_sigma"
KINDS = (DOS, A_R, A_C, FOCK)

_CHUNK = 2**22


@dataclass(frozen=True)
class EnergyGrid:
    """Uniform energy grid ``e_min, ..., e_max`` with ``n_points`` points."""

    e_min: float
    e_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.e_min) and math.isfinite(self.e_max)):
            raise ValidationError("energy grid bounds must be finite")
        if self.n_points < 2 or self.e_max <= self.e_min:
            raise ValidationError(
                f"bad energy grid [{self.e_min}, {self.e_max}] with {self.n_points} points")

    @property
    def energies(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.e_max - self.e_min) / (self.n_points - 1)

    def check_resolution(self, T: float) -> None:
        if self.spacing > 1 / (4 * T) * (1 + 1e-9):
            raise ValidationError(
                f"energy spacing {self.spacing:.4g} too coarse for T={T} (need <= 1/(4T))")

    @classmethod
    def around(cls, e_lo: float, e_hi: float, T: float, margin: float = 10.0,
               points_per_width: float = 8.0) -> "EnergyGrid":
        """``[e_lo - margin/T, e_hi + margin/T]`` with spacing ``1/(points_per_width*T)``."""
        lo, hi = e_lo - margin / T, e_hi + margin / T
        n = math.ceil((hi - lo) * points_per_width * T) + 1
        return cls(lo, hi, max(n, 2))

    @classmethod
    def default(cls, spectrum: Spectrum, T: float) -> "EnergyGrid":
        return cls.around(spectrum.energies[0], spectrum.energies[-1], T)


@dataclass(frozen=True, eq=False)
class CoarseGrained:
    """A function on an energy grid obtained at observation time ``T``."""

    grid: EnergyGrid
    values: np.ndarray
    T: float
    kind: str
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValidationError(f"{values.size} values for {self.grid.n_points} grid points")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}")
        valid = np.ones(values.size, bool) if self.valid is None else np.asarray(self.valid, bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def energies(self) -> np.ndarray:
        return self.grid.energies

    def __call__(self, E):
        """Linear interpolation of the values at energies ``E``."""
        return np.interp(E, self.energies, self.values)

    def valid_at(self, E) -> np.ndarray:
        """True where both bracketing grid points are valid."""
        E = np.atleast_1d(np.asarray(E, float))
        pos = (E - self.grid.e_min) / self.grid.spacing
        inside = (pos >= -1e-9) & (pos <= self.grid.n_points - 1 + 1e-9)
        lo = np.clip(np.floor(pos).astype(int), 0, self.grid.n_points - 1)
        hi = np.clip(lo + 1, 0, self.grid.n_points - 1)
        exact = np.isclose(pos, lo)
        return inside & self.valid[lo] & (exact | self.valid[hi])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("E,value,valid_flag\n")
            for e, v, ok in zip(self.energies, self.values, self.valid):
                fh.write(f"{e:.17g},{v:.17g},{int(ok)}\n")


def sinc_kernel(eps, T: float):
    """``delta_T(eps) = sin(T eps) / (pi eps)``, equal to ``T/pi`` at zero."""
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}")
    return (T / math.pi) * np.sinc(np.asarray(eps) * (T / math.pi))


def kernel_sum(energies: np.ndarray, levels: np.ndarray, weights: np.ndarray, T: float) -> np.ndarray:
    """``sum_n w_n delta_T(E - E_n)`` evaluated at every ``E`` in ``energies``."""
    energies = np.asarray(energies, float)
    levels = np.asarray(levels, float)
    weights = np.asarray(weights, float)
    out = np.empty(energies.size)
    chunk = max(1, _CHUNK // max(1, levels.size))
    for start in range(0, energies.size, chunk):
        e = energies[start:start + chunk]
        out[start:start + chunk] = sinc_kernel(e[:, None] - levels[None, :], T) @ weights
    return out


def fourier_quadrature(series: ComplexTimeSeries, energies: np.ndarray, scale: float) -> np.ndarray:
    """Trapezoid rule for ``int_0^T dt/pi Re{scale * f(t) exp(itE)}``."""
    t = series.times
    w = np.full(t.size, series.grid.dt)
    w[0] = w[-1] = series.grid.dt / 2
    weighted = w * series.values * (scale / math.pi)
    out = np.empty(len(energies))
    chunk = max(1, _CHUNK // t.size)
    for start in range(0, len(energies), chunk):
        e = energies[start:start + chunk]
        out[start:start + chunk] = (np.exp(1j * np.outer(e, t)) @ weighted).real
    return out


def _check_signal(series, grid):
    if series.grid.n_steps < 1:
        raise ValidationError("series must contain at least two samples")
    T = series.grid.T
    bandwidth = series.bandwidth if series.bandwidth is not None else grid.e_max - grid.e_min
    series.grid.check_aliasing(bandwidth)
    grid.check_resolution(T)
    return T


def dos_closed_form(spectrum: Spectrum, grid: EnergyGrid, T: float) -> CoarseGrained:
    """``rho_c(E, T) = sum_n delta_T(E - E_n)``."""
    grid.check_resolution(T)
    values = kernel_sum(grid.energies, spectrum.energies, np.ones(spectrum.dim), T)
    return CoarseGrained(grid, values, T, DOS)


def dos_from_series(G: ComplexTimeSeries, grid: EnergyGrid, dim: int | None = None) -> CoarseGrained:
    """``rho_c(E, T)`` from sampled ``G(t)`` on ``[0, T]``; ``Z(it) = dim * G(t)``."""
    T = _check_signal(G, grid)
    dim = G.dim if dim is None else dim
    return CoarseGrained(grid, fourier_quadrature(G, grid.energies, dim), T, DOS)


def observable_Ar(spectrum: Spectrum, A_n: np.ndarray, grid: EnergyGrid, T: float) -> CoarseGrained:
    """``A_r(E, T) = sum_n A_n delta_T(E - E_n)``."""
    A_n = np.asarray(A_n, float)
    if A_n.shape != (spectrum.dim,):
        raise ValidationError(f"{A_n.size} expectation values for dimension {spectrum.dim}")
    grid.check_resolution(T)
    return CoarseGrained(grid, kernel_sum(grid.energies, spectrum.energies, A_n, T), T, A_R)


def observable_Ar_from_series(G_A: ComplexTimeSeries, grid: EnergyGrid, dim: int | None = None) -> CoarseGrained:
    """``A_r(E, T)`` from sampled ``G_A(t) = A(t) / D``."""
    T = _check_signal(G_A, grid)
    dim = G_A.dim if dim is None else dim
    return CoarseGrained(grid, fourier_quadrature(G_A, grid.energies, dim), T, A_R)


def default_mask_threshold(T: float) -> float:
    return 0.05 * T / math.pi


def observable_Ac(A_r: CoarseGrained, rho_c: CoarseGrained, mask_threshold: float | None = None) -> CoarseGrained:
    """``A_c = A_r / rho_c``.

    Points where ``|rho_c|`` is below ``mask_threshold`` (default
    ``0.05 T/pi``) are marked invalid and hold 0.
    """
    if A_r.grid != rho_c.grid or A_r.T != rho_c.T:
        raise ValidationError("A_r and rho_c must share the energy grid and T")
    if mask_threshold is None:
        mask_threshold = default_mask_threshold(rho_c.T)
    valid = (np.abs(rho_c.values) >= mask_threshold) & A_r.valid & rho_c.valid
    values = np.zeros_like(A_r.values)
    values[valid] = A_r.values[valid] / rho_c.values[valid]
    return CoarseGrained(A_r.grid, values, A_r.T, A_C, valid)


def fock_distribution(spectrum: Spectrum, M: np.ndarray, sigma: FockState | int,
                      grid: EnergyGrid, T: float) -> CoarseGrained:
    """``rho_sigma(E, T) = (pi/T) sum_n M[sigma, n] delta_T(E - E_n)``."""
    index = sigma.index if isinstance(sigma, FockState) else int(sigma)
    if not 0 <= index < spectrum.dim:
        raise ValidationError(f"Fock index {index} out of range")
    grid.check_resolution(T)
    values = kernel_sum(grid.energies, spectrum.energies, M[index], T) * (math.pi / T)
    return CoarseGrained(grid, values, T, FOCK)


def fock_distribution_from_series(G_sigma: ComplexTimeSeries, grid: EnergyGrid) -> CoarseGrained:
    """``rho_sigma(E, T)`` from sampled ``G_sigma(t)``."""
    T = _check_signal(G_sigma, grid)
    values = fourier_quadrature(G_sigma, grid.energies, 1.0) * (math.pi / T)
    return CoarseGrained(grid, values, T, FOCK)


def integrated(cg: CoarseGrained) -> np.ndarray:
    """Running integral ``int_{e_min}^E f(E') dE'`` (trapezoid), same length as the grid."""
    steps = 0.5 * (cg.values[1:] + cg.values[:-1]) * cg.grid.spacing
    return np.concatenate([[0.0], np.cumsum(steps)])


def integrate(cg: CoarseGrained, e_lo: float | None = None, e_hi: float | None = None) -> float:
    """Trapezoid integral of ``cg`` over ``[e_lo, e_hi]`` (default: whole grid)."""
    E = cg.energies
    lo = E[0] if e_lo is None else e_lo
    hi = E[-1] if e_hi is None else e_hi
    x, y = _clip_to(E, cg.values, lo, hi)
    return float(np.trapezoid(y, x))


def _clip_to(E, values, lo, hi):
    if lo < E[0] - 1e-12 or hi > E[-1] + 1e-12 or hi < lo:
        raise ValidationError(f"interval [{lo}, {hi}] outside grid [{E[0]}, {E[-1]}]")
    inner = (E > lo) & (E < hi)
    x = np.concatenate([[lo], E[inner], [hi]])
    y = np.concatenate([[np.interp(lo, E, values)], values[inner], [np.interp(hi, E, values)]])
    return x, y


def find_peaks(cg: CoarseGrained, e_lo: float | None = None, e_hi: float | None = None,
               min_height: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Local maxima of ``cg``, refined by parabolic interpolation.

    Returns ``(positions, heights)`` sorted by position.
    """
    E, y = cg.energies, cg.values
    idx, _ = scipy.signal.find_peaks(y, height=min_height)
    idx = idx[(idx > 0) & (idx < y.size - 1)]
    if e_lo is not None:
        idx = idx[E[idx] >= e_lo]
    if e_hi is not None:
        idx = idx[E[idx] <= e_hi]
    y0, y1, y2 = y[idx - 1], y[idx], y[idx + 1]
    curvature = y0 - 2 * y1 + y2
    shift = np.where(curvature != 0, 0.5 * (y0 - y2) / np.where(curvature != 0, curvature, 1), 0.0)
    positions = E[idx] + shift * cg.grid.spacing
    heights = y1 - 0.25 * (y0 - y2) * shift
    return positions, heights


def critical_time(spectrum: Spectrum, E: float, k: int = 5) -> float:
    """Local density of states at ``E``, ``k / (E_{i+k} - E_i)``, as crossover time.

    The ``k``-gap window is centred on the level nearest ``E`` and widened
    when it spans zero energy (fully degenerate levels).
    """
    levels = spectrum.energies
    if not levels[0] <= E <= levels[-1]:
        raise ValidationError(f"E={E} outside spectrum [{levels[0]}, {levels[-1]}]")
    D = levels.size
    if D < 2:
        return math.inf
    k = min(k, D - 1)
    centre = int(np.argmin(np.abs(levels - E)))
    while True:
        lo = min(max(centre - k // 2, 0), D - 1 - k)
        span = levels[lo + k] - levels[lo]
        if span > 0 or k == D - 1:
            break
        k = min(k + 2, D - 1)
    return k / span if span > 0 else math.inf
