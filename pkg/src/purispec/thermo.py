"""Statistical averages and specific heat from coarse-grained densities.

A reconstructed average is::

    A(beta; T) = int dE rho_c(E,T) f(E) exp(-beta E) / Z_T(beta)

over ``[E_0, E_max]``.  Every function here also accepts a
:class:`~purispec.eigen.Spectrum` instead of a coarse-grained density, in
which case the integrals become exact sums over levels (the ``T -> inf``
oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .eigen import Spectrum
from .errors import DegenerateTemperatureError, ValidationError
from .reconstruct import CoarseGrained

# int_{-x}^{inf} delta_T(e) de = 1 for x = EDGE_PAD / T (Si(EDGE_PAD) = pi/2)
EDGE_PAD = 1.9264476603173704

MAX_SIGNAL_BETA = 10.0
Z_FLOOR = 1e-12

Density = Union[CoarseGrained, Spectrum]
EnergyFunction = Union[Callable[[np.ndarray], np.ndarray], CoarseGrained, np.ndarray]


@dataclass(frozen=True, eq=False)
class ThermoCurve:
    betas: np.ndarray
    values: np.ndarray
    T: float
    valid: np.ndarray = field(default=None)
    exact: np.ndarray | None = None

    def __post_init__(self):
        valid = np.ones(len(self.values), bool) if self.valid is None else np.asarray(self.valid, bool)
        object.__setattr__(self, "valid", valid)

    def to_csv(self, path) -> None:
        header = "beta,value,valid_flag" + (",exact" if self.exact is not None else "")
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for k, (b, v, ok) in enumerate(zip(self.betas, self.values, self.valid)):
                row = f"{b:.17g},{v:.17g},{int(ok)}"
                if self.exact is not None:
                    row += f",{self.exact[k]:.17g}"
                fh.write(row + "\n")


def oracle_bounds(spectrum: Spectrum, T: float) -> tuple[float, float]:
    """Extreme eigenvalues, widened by ``EDGE_PAD / T`` so edge levels get unit weight."""
    pad = EDGE_PAD / T
    return float(spectrum.energies[0] - pad), float(spectrum.energies[-1] + pad)


def signal_bounds(rho_c: CoarseGrained) -> tuple[float, float]:
    """Outermost grid energies where ``rho_c`` exceeds half a single-level peak."""
    above = np.flatnonzero(rho_c.values > 0.5 * rho_c.T / math.pi)
    if above.size == 0:
        raise ValidationError("rho_c never exceeds half a level peak; cannot estimate bounds")
    E = rho_c.energies
    return float(E[above[0]]), float(E[above[-1]])


def _window(rho: CoarseGrained, bounds):
    lo, hi = bounds
    E = rho.energies
    if lo < E[0] - 1e-12 or hi > E[-1] + 1e-12 or hi <= lo:
        raise ValidationError(f"bounds [{lo}, {hi}] outside grid [{E[0]}, {E[-1]}]")
    inner = np.flatnonzero((E > lo) & (E < hi))
    x = np.concatenate([[lo], E[inner], [hi]])
    y = np.concatenate([[np.interp(lo, E, rho.values)], rho.values[inner], [np.interp(hi, E, rho.values)]])
    valid = np.concatenate([[bool(rho.valid_at(lo)[0])], rho.valid[inner], [bool(rho.valid_at(hi)[0])]])
    return x, y, valid


def _weights(rho: Density, beta: float, bounds, f: EnergyFunction | None = None):
    """Energies, Boltzmann-weighted density (shifted by ``exp(beta*E_ref)``), f values, E_ref."""
    if isinstance(rho, Spectrum):
        E = rho.energies
        w = np.ones_like(E)
        if f is None:
            fv = np.ones_like(E)
        elif callable(f) and not isinstance(f, CoarseGrained):
            fv = np.asarray(f(E), float)
        else:
            fv = np.asarray(f, float)
            if fv.shape != E.shape:
                raise ValidationError("per-level values must align with the spectrum")
        e_ref = E[0]
        return E, w * np.exp(-beta * (E - e_ref)), fv, e_ref, None
    if bounds is None:
        bounds = signal_bounds(rho)
    x, y, mask = _window(rho, bounds)
    if f is None:
        fv = np.ones_like(x)
    elif isinstance(f, CoarseGrained):
        if f.grid != rho.grid:
            raise ValidationError("A_c must share the energy grid of rho_c")
        fv = np.interp(x, f.energies, f.values)
        mask = mask & f.valid_at(x)
    elif callable(f):
        fv = np.asarray(f(x), float)
    else:
        raise ValidationError("f must be a callable of E or a CoarseGrained function")
    e_ref = x[0]
    return x, np.where(mask, y, 0.0) * np.exp(-beta * (x - e_ref)), np.where(mask, fv, 0.0), e_ref, mask


def _integral(x, y, is_sum):
    return float(np.sum(y)) if is_sum else float(np.trapezoid(y, x))


def partition_Z(rho: Density, beta: float, bounds: tuple[float, float] | None = None) -> float:
    """``Z_T(beta) = int_{E_0}^{E_max} dE rho_c(E,T) exp(-beta E)``."""
    x, w, _, e_ref, _ = _weights(rho, beta, bounds)
    return _integral(x, w, isinstance(rho, Spectrum)) * math.exp(-beta * e_ref)


def _count(rho, bounds):
    if isinstance(rho, Spectrum):
        return rho.dim
    x, w, _, _, _ = _weights(rho, 0.0, bounds)
    return abs(_integral(x, w, False))


def reconstructed_average(rho: Density, f: EnergyFunction | None, beta: float,
                          bounds: tuple[float, float] | None = None) -> float:
    """Reconstructed statistical average of ``f`` at inverse temperature ``beta``.

    ``f`` is a function of energy, an ``A_c`` coarse-grained function (its
    invalid points are dropped from both integrals), or, for a Spectrum,
    an array of per-level values.
    """
    is_sum = isinstance(rho, Spectrum)
    x, w, fv, e_ref, _ = _weights(rho, beta, bounds, f)
    z_shifted = _integral(x, w, is_sum)
    z = z_shifted * math.exp(-beta * e_ref)
    if not z > Z_FLOOR * _count(rho, bounds):
        raise DegenerateTemperatureError(f"Z_T({beta}) = {z:.3e} is not positive")
    return _integral(x, w * fv, is_sum) / z_shifted


def _moments(rho, beta, bounds):
    is_sum = isinstance(rho, Spectrum)
    x, w, _, _, _ = _weights(rho, beta, bounds)
    z = _integral(x, w, is_sum)
    if not z > 0:
        raise DegenerateTemperatureError(f"Z_T({beta}) is not positive")
    # centre energies for a cancellation-free variance
    mean = _integral(x, w * x, is_sum) / z
    var = _integral(x, w * (x - mean) ** 2, is_sum) / z
    return mean, var


def specific_heat(rho: Density, betas, bounds: tuple[float, float] | None = None,
                  mode: str | None = None) -> ThermoCurve:
    """``C(beta) = beta^2 (<E^2> - <E>^2)`` from reconstructed averages.

    ``mode="signal"`` (default for coarse-grained input) refuses
    ``beta > 10`` and estimates the bounds from ``rho_c`` when none are
    given.  Values below ``-1e-6 beta^2 span^2`` are flagged invalid.
    """
    betas = np.atleast_1d(np.asarray(betas, float))
    is_sum = isinstance(rho, Spectrum)
    if mode is None:
        mode = "oracle" if is_sum else "signal"
    if mode not in ("signal", "oracle"):
        raise ValidationError(f"unknown mode {mode!r}")
    if mode == "signal" and np.any(np.abs(betas) > MAX_SIGNAL_BETA):
        raise ValidationError(f"|beta| > {MAX_SIGNAL_BETA} refused in signal mode")
    if not is_sum and bounds is None:
        bounds = signal_bounds(rho)
    if is_sum:
        span = rho.bandwidth
    else:
        span = bounds[1] - bounds[0]
    count = _count(rho, bounds)
    values = np.empty(betas.size)
    valid = np.ones(betas.size, bool)
    for k, beta in enumerate(betas):
        if partition_Z(rho, beta, bounds) <= Z_FLOOR * count:
            raise DegenerateTemperatureError(f"Z_T({beta}) is not positive")
        _, var = _moments(rho, beta, bounds)
        values[k] = beta**2 * var
        valid[k] = values[k] >= -1e-6 * beta**2 * span**2
    T = math.inf if is_sum else rho.T
    return ThermoCurve(betas, values, T, valid)


def canonical_specific_heat(spectrum: Spectrum, betas) -> np.ndarray:
    """Exact canonical ``C(beta)`` from the eigenvalues."""
    return specific_heat(spectrum, betas, mode="oracle").values


def canonical_energy(spectrum: Spectrum, beta: float) -> float:
    return reconstructed_average(spectrum, lambda E: E, beta)
