"""Fluctuations of eigenstate expectation values around their coarse-grained trend."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigen import Spectrum
from .errors import ValidationError
from .reconstruct import CoarseGrained, critical_time

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class EthWindow:
    """Energy range ``[e_minus, e_plus]`` with reference time ``t_sc`` and observation time ``T``."""

    e_minus: float
    e_plus: float
    t_sc: float = 10.0
    T: float = math.inf

    def __post_init__(self):
        if not self.e_minus < self.e_plus:
            raise ValidationError(f"empty window [{self.e_minus}, {self.e_plus}]")
        if not 0 < self.t_sc < self.T:
            raise ValidationError(f"need 0 < t_sc < T, got t_sc={self.t_sc}, T={self.T}")

    def check_inside(self, spectrum: Spectrum) -> None:
        if self.e_minus < spectrum.energies[0] or self.e_plus > spectrum.energies[-1]:
            raise ValidationError("window extends beyond the spectrum")

    def members(self, energies: np.ndarray) -> np.ndarray:
        return (energies >= self.e_minus) & (energies <= self.e_plus)


def sigma_exact(spectrum: Spectrum, A_n: np.ndarray, A_c_ref: CoarseGrained, window: EthWindow) -> float:
    """RMS deviation of ``A_n`` from ``A_c(E_n, T_sc)`` over levels inside the window.

    ``A_c_ref`` is linearly interpolated at each ``E_n`` and must be valid there.
    """
    A_n = np.asarray(A_n, float)
    inside = window.members(spectrum.energies)
    if not inside.any():
        raise ValidationError(f"no eigenvalue inside [{window.e_minus}, {window.e_plus}]")
    E = spectrum.energies[inside]
    if not np.all(A_c_ref.valid_at(E)):
        raise ValidationError("reference A_c is invalid at some eigenvalue in the window")
    deviation = A_n[inside] - A_c_ref(E)
    return float(np.sqrt(np.mean(deviation**2)))


def sigma_signal(A_r: CoarseGrained, A_c_ref: CoarseGrained, rho_T: CoarseGrained,
                 rho_sc: CoarseGrained, window: EthWindow, squared: bool = False,
                 same_weights: bool = False) -> float:
    """Finite-time fluctuation estimate::

        sigma^2(T) = int ((pi/T) A_r(E,T) - A_c(E,T_sc))^2 rho_c(E,T) dE
                     / int rho_c(E,T_sc) dE

    over the window.  Masked ``A_c`` points are excluded from both integrals.
    ``same_weights=True`` uses ``rho_c(E,T_sc)`` in the numerator too (not
    the default form).  Sign changes of ``rho_c`` can make the estimate
    negative, in which case ``sigma`` is NaN; ``squared=True`` returns the
    signed ``sigma^2``.
    """
    grid = A_r.grid
    for other in (A_c_ref, rho_T, rho_sc):
        if other.grid != grid:
            raise ValidationError("all inputs must share the energy grid")
    E = grid.energies
    inside = window.members(E) & A_c_ref.valid & A_r.valid & rho_T.valid & rho_sc.valid
    if inside.sum() < 2:
        raise ValidationError("fewer than two valid grid points in the window")
    w = _trapezoid_weights(E, window.members(E)) * inside
    residual = (math.pi / A_r.T) * A_r.values - A_c_ref.values
    weight = rho_sc.values if same_weights else rho_T.values
    numerator = np.sum(w * residual**2 * weight)
    denominator = np.sum(w * rho_sc.values)
    if not denominator > DENOMINATOR_FLOOR:
        raise ValidationError(f"denominator {denominator:.3e} below positivity floor")
    s2 = numerator / denominator
    if squared:
        return float(s2)
    return float(np.sqrt(s2)) if s2 >= 0 else math.nan


def _trapezoid_weights(E, members):
    idx = np.flatnonzero(members)
    w = np.zeros(E.size)
    if idx.size < 2:
        return w
    h = E[1] - E[0]
    w[idx] = h
    w[idx[0]] = w[idx[-1]] = h / 2
    return w


def choose_Tsc(spectrum: Spectrum, window: EthWindow | tuple[float, float], cap: float = 10.0) -> float:
    """Default coarse-graining time, ``min(cap, 0.1 * min T_c(E))`` over the window."""
    lo, hi = (window.e_minus, window.e_plus) if isinstance(window, EthWindow) else window
    E = spectrum.energies
    probes = np.concatenate([[lo, hi], E[(E >= lo) & (E <= hi)]])
    probes = probes[(probes >= E[0]) & (probes <= E[-1])]
    if probes.size == 0:
        raise ValidationError("window does not overlap the spectrum")
    t_c = min(critical_time(spectrum, e) for e in probes)
    return float(min(cap, 0.1 * t_c))
