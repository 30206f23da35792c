"""Fock-state localization diagnostics built on the weight matrix ``M``.

Notation: ``M[sigma, n] = |<sigma|n>|^2``, ``C_{nn'}(t) = exp(-it(E_n - E_n'))``
and ``S_{nn'}(T) = (pi/T) delta_T(E_n - E_n') = sinc(T (E_n - E_n'))``, the
time average of ``Re C`` over ``[0, T]``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .dynamics import TimeGrid
from .eigen import Spectrum, weights_matrix
from .errors import DimensionError, PositivityError, ValidationError
from .model import FockState

PSD_FLOOR = 1e-10

NORMALIZED = "normalized"
RAW = "raw"


def participation_ratio_M(M: np.ndarray) -> np.ndarray:
    """``PR_M(sigma) = sum_n M[sigma, n]^2`` for every Fock state."""
    M = np.asarray(M, float)
    return np.sum(M**2, axis=1)


def overlap_kernel(spectrum: Spectrum, T: float | None = None) -> np.ndarray:
    """``S(T)``; ``T=None`` gives the long-time limit, the degeneracy-cluster projector."""
    if T is None or math.isinf(T):
        return spectrum.cluster_projector()
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}")
    E = spectrum.energies
    return np.sinc(np.subtract.outer(E, E) * (T / math.pi))


def gamma_t(M: np.ndarray, spectrum: Spectrum, t: float) -> np.ndarray:
    """``Gamma(t) = (1/D) M C(t) M^T``.

    ``C(t)`` is the outer product of ``u = exp(-itE)`` with its conjugate, so
    ``Gamma(t) = g g^+ / D`` with ``g = M u`` (the ``G_sigma(t)`` vector).
    """
    M = np.asarray(M, float)
    D = spectrum.dim
    if M.shape != (D, D):
        raise DimensionError(f"M of shape {M.shape} for dimension {D}")
    g = M @ np.exp(-1j * t * spectrum.energies)
    return np.outer(g, g.conj()) / D


def gamma_avg(M: np.ndarray, spectrum: Spectrum, T: float | None = None) -> np.ndarray:
    """Time-averaged ``Re Gamma`` over ``[0, T]``: ``(1/D) M S(T) M^T``.

    ``T=None`` gives ``Gamma(inf)``; with non-degenerate levels that is ``M M^T / D``.
    """
    M = np.asarray(M, float)
    D = spectrum.dim
    if M.shape != (D, D):
        raise DimensionError(f"M of shape {M.shape} for dimension {D}")
    if (T is None or math.isinf(T)) and not spectrum.has_degeneracies:
        out = M @ M.T / D
    else:
        out = M @ overlap_kernel(spectrum, T) @ M.T / D
    return 0.5 * (out + out.T)


def gamma_avg_quadrature(M: np.ndarray, spectrum: Spectrum, grid: TimeGrid) -> np.ndarray:
    """Trapezoid time average of ``Re Gamma(t)`` over the grid (test oracle)."""
    M = np.asarray(M, float)
    D = spectrum.dim
    t = grid.times
    w = np.full(t.size, grid.dt / grid.T)
    w[0] = w[-1] = grid.dt / (2 * grid.T)
    out = np.zeros((D, D))
    chunk = max(1, 2**21 // D)
    for start in range(0, t.size, chunk):
        g = M @ np.exp(-1j * np.outer(spectrum.energies, t[start:start + chunk]))
        gw = g * w[start:start + chunk]
        out += (gw @ g.conj().T).real
    return out / D


def _psd_sqrt(A: np.ndarray) -> np.ndarray:
    A = 0.5 * (A + A.T)
    lam, U = np.linalg.eigh(A)
    floor = -PSD_FLOOR * max(np.trace(A), np.finfo(float).tiny)
    if lam[0] < floor:
        raise PositivityError(
            f"matrix is indefinite: most negative eigenvalue {lam[0]:.3e} "
            f"(floor {floor:.3e})", most_negative=float(lam[0]))
    lam = np.clip(lam, 0.0, None)
    R = (U * np.sqrt(lam)) @ U.T
    return 0.5 * (R + R.T)


def uhlmann_R(M: np.ndarray, spectrum: Spectrum | None = None, T: float | None = None) -> np.ndarray:
    """``R = sqrt(D Gamma(T))``, principal square root via eigendecomposition.

    ``T=None`` is the long-time limit.  Without a spectrum the levels are
    taken as non-degenerate, ``D Gamma(inf) = M M^T``; a finite ``T`` needs
    the spectrum.  Eigenvalues in ``[-1e-10 Tr, 0)`` are clamped to zero,
    anything more negative raises :class:`PositivityError`.
    """
    M = np.asarray(M, float)
    D = M.shape[0]
    if spectrum is None:
        if T is not None:
            raise ValidationError("finite-T Uhlmann matrix needs the spectrum")
        target = M @ M.T
    else:
        target = D * gamma_avg(M, spectrum, T)
    return _psd_sqrt(target)


def polar_factor(M: np.ndarray) -> np.ndarray:
    """Symmetric factor ``P`` of the left polar decomposition ``M = P U`` (SVD based)."""
    _, P = scipy.linalg.polar(np.asarray(M, float), side="left")
    return 0.5 * (P + P.T)


def participation_ratio_R(R: np.ndarray, convention: str = NORMALIZED) -> np.ndarray:
    """Participation ratio of each column of ``R``.

    ``"normalized"``: ``sum_s' p_s'^2`` with ``p_s' = R[s',s]^2 / sum R[:,s]^2``,
    which lies in ``[1/D, 1]``.  ``"raw"``: the plain second moment
    ``sum_s' R[s',s]^2``.
    """
    R = np.asarray(R, float)
    sq = R**2
    norms = sq.sum(axis=0)
    if convention == RAW:
        return norms
    if convention != NORMALIZED:
        raise ValidationError(f"unknown PR_R convention {convention!r}")
    if np.any(norms == 0):
        raise ValidationError(f"zero column(s) in R: {np.flatnonzero(norms == 0).tolist()}")
    p = sq / norms
    return np.sum(p**2, axis=0)


def _index(sigma, D):
    index = sigma.index if isinstance(sigma, FockState) else int(sigma)
    if not 0 <= index < D:
        raise ValidationError(f"Fock index {index} out of range for dimension {D}")
    return index


def pair_amplitudes(spectrum: Spectrum, sigma, sigma_p) -> np.ndarray:
    """``W_n = <sigma|n><n|sigma'>``."""
    D = spectrum.dim
    V = spectrum.vectors
    return V[_index(sigma, D)] * V[_index(sigma_p, D)].conj()


def pair_probabilities(spectrum: Spectrum, sigma, sigma_p, grid: TimeGrid) -> np.ndarray:
    """``p_{sigma,sigma'}(t) = |<sigma,sigma'|psi(t)>|^2`` in the purification scheme.

    Equals ``(1/D) |sum_n <sigma|n><n|sigma'> exp(-itE_n)|^2``.
    """
    W = pair_amplitudes(spectrum, sigma, sigma_p)
    amp = np.exp(-1j * np.outer(grid.times, spectrum.energies)) @ W
    return np.abs(amp) ** 2 / spectrum.dim


def pair_probability_average(spectrum: Spectrum, sigma, sigma_p, T: float | None = None) -> float:
    """Closed-form time average of :func:`pair_probabilities` over ``[0, T]``.

    ``(1/D) W^+ S(T) W``.  Diagonal entries equal ``Gamma(T)``; the
    off-diagonal ones agree with ``Gamma`` only in the long-time limit.
    """
    W = pair_amplitudes(spectrum, sigma, sigma_p)
    S = overlap_kernel(spectrum, T)
    return float((W.conj() @ S @ W).real / spectrum.dim)


def footnote_probabilities(spectrum: Spectrum, T: float | None = None) -> np.ndarray:
    """Time average of ``|<sigma'|exp(-iHt)|sigma>|^2`` for all pairs (no purification).

    ``T=None``: long-time limit ``sum_c |P_c[sigma, sigma']|^2`` over
    degeneracy-cluster projectors, i.e. ``M M^T`` for a non-degenerate
    spectrum.  Finite ``T`` costs ``O(D^4)``.
    """
    V = spectrum.vectors
    D = spectrum.dim
    if T is None or math.isinf(T):
        if not spectrum.has_degeneracies:
            M = weights_matrix(spectrum)
            return M @ M.T
        out = np.zeros((D, D))
        for members in spectrum.clusters():
            P = V[:, members] @ V[:, members].conj().T
            out += np.abs(P) ** 2
        return out
    S = overlap_kernel(spectrum, T)
    out = np.empty((D, D))
    for s in range(D):
        W = V[s][None, :] * V.conj()  # W[s', n] = <s|n><n|s'>
        out[s] = np.einsum("an,nm,am->a", W.conj(), S, W).real
    return out
