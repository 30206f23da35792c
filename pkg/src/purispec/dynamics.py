"""Time-domain signals: Loschmidt amplitudes and the routes that produce them.

Three independent ways of obtaining ``G(t) = Tr(exp(-itH)) / D`` are
provided: the spectral sum over eigenvalues, the average of single Fock
state amplitudes ``G_sigma(t)``, and explicit propagation of the purified
(system + ancilla) state.  The probe-qubit interferometer and the random
state trace estimator emulate the measurement side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .eigen import Spectrum, check_hermitian, diagonalize
from .errors import AliasingError, DimensionError, ValidationError
from .model import FockState, ModelSpec, build_hamiltonian

NORM_TOL = 1e-10
MAX_PURIFIED_SITES = 6


@dataclass(frozen=True)
class TimeGrid:
    """Uniform samples ``t_k = k * dt`` for ``k = 0..n_steps``."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive and finite, got {self.dt}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValidationError(f"n_steps must be a non-negative integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def T(self) -> float:
        return self.dt * self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def __len__(self):
        return self.n_steps + 1

    @classmethod
    def up_to(cls, T: float, dt: float) -> "TimeGrid":
        """Grid ending exactly at ``T`` with step no larger than ``dt``."""
        if not T > 0:
            raise ValidationError(f"T must be positive, got {T}")
        n = max(1, math.ceil(T / dt - 1e-9))
        return cls(T / n, n)

    @classmethod
    def for_spectrum(cls, spectrum: Spectrum, T: float, dt: float | None = None) -> "TimeGrid":
        """Grid up to ``T`` that also respects the aliasing guard of ``spectrum``."""
        limit = max_time_step(spectrum.bandwidth)
        return cls.up_to(T, limit if dt is None else min(dt, limit))

    def check_aliasing(self, bandwidth: float) -> None:
        if self.dt * bandwidth > math.pi * (1 + 1e-12):
            raise AliasingError(
                f"dt={self.dt:.6g} exceeds pi/bandwidth={max_time_step(bandwidth):.6g}")


def max_time_step(bandwidth: float) -> float:
    return math.pi / bandwidth if bandwidth > 0 else math.inf


@dataclass(frozen=True, eq=False)
class ComplexTimeSeries:
    """Complex signal sampled on a :class:`TimeGrid`.

    ``dim`` is the factor turning a normalized amplitude back into a trace
    (``Z(it) = dim * G(t)``); ``bandwidth`` records the spectral width of
    the source when it is known, for the aliasing check.  ``stderr`` is
    filled by stochastic estimators.
    """

    grid: TimeGrid
    values: np.ndarray
    dim: int = 1
    bandwidth: float | None = None
    stderr: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (len(self.grid),):
            raise DimensionError(f"{values.size} values for a grid of {len(self.grid)} samples")
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        return ComplexTimeSeries(self.grid, self.values * scalar, self.dim, self.bandwidth)

    __rmul__ = __mul__

    def _combine(self, other, op):
        if other.grid != self.grid or other.dim != self.dim:
            raise ValidationError("series live on different grids or dimensions")
        widths = [w for w in (self.bandwidth, other.bandwidth) if w is not None]
        return ComplexTimeSeries(self.grid, op(self.values, other.values), self.dim,
                                 max(widths) if widths else None)

    def to_csv(self, path) -> None:
        write_series_csv(path, self)


def write_series_csv(path, series: ComplexTimeSeries) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,re,im\n")
        for t, v in zip(series.times, series.values):
            fh.write(f"{t:.17g},{v.real:.17g},{v.imag:.17g}\n")


def read_series_csv(path, dim: int = 1) -> ComplexTimeSeries:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    n = t.size - 1
    grid = TimeGrid(t[-1] / n if n else 1.0, n)
    return ComplexTimeSeries(grid, data[:, 1] + 1j * data[:, 2], dim)


def _phases(energies, times):
    return np.exp(-1j * np.outer(times, energies))


def _spectral_series(spectrum, weights, grid, dim):
    """``sum_n w_n exp(-i t E_n)`` on the grid, in time chunks."""
    times = grid.times
    out = np.empty(times.size, dtype=complex)
    chunk = max(1, 2**22 // max(1, spectrum.dim))
    for start in range(0, times.size, chunk):
        stop = start + chunk
        out[start:stop] = _phases(spectrum.energies, times[start:stop]) @ weights
    return ComplexTimeSeries(grid, out, dim, spectrum.bandwidth)


def loschmidt_G(spectrum: Spectrum, grid: TimeGrid) -> ComplexTimeSeries:
    """``G(t) = (1/D) sum_n exp(-i t E_n)``."""
    D = spectrum.dim
    series = _spectral_series(spectrum, np.full(D, 1.0 / D), grid, D)
    series.values[0] = 1.0
    return series


def loschmidt_G_sigma(spectrum: Spectrum, sigma: FockState | int, grid: TimeGrid) -> ComplexTimeSeries:
    """``G_sigma(t) = <sigma|exp(-itH)|sigma>`` from the spectral weights."""
    index = _fock_index(sigma, spectrum.dim)
    row = spectrum.vectors[index]
    weights = row.real**2 + row.imag**2
    return _spectral_series(spectrum, weights, grid, 1)


def loschmidt_G_sigma_all(spectrum: Spectrum, grid: TimeGrid) -> np.ndarray:
    """``(D, n_times)`` array of ``G_sigma(t)`` for every Fock state."""
    V = spectrum.vectors
    M = V.real**2 + V.imag**2 if np.iscomplexobj(V) else V**2
    return M @ _phases(spectrum.energies, grid.times).T


def loschmidt_G_A(spectrum: Spectrum, A_n: np.ndarray, grid: TimeGrid) -> ComplexTimeSeries:
    """``G_A(t) = Tr(A exp(-itH)) / D = (1/D) sum_n A_n exp(-i t E_n)``."""
    A_n = np.asarray(A_n, dtype=float)
    if A_n.shape != (spectrum.dim,):
        raise DimensionError(f"{A_n.size} expectation values for dimension {spectrum.dim}")
    D = spectrum.dim
    return _spectral_series(spectrum, A_n / D, grid, D)


def _fock_index(sigma, dim):
    index = sigma.index if isinstance(sigma, FockState) else int(sigma)
    if not 0 <= index < dim:
        raise ValidationError(f"Fock index {index} out of range for dimension {dim}")
    return index


def fock_vector(sigma: FockState | int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[_fock_index(sigma, dim)] = 1.0
    return psi


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized vector with i.i.d. complex Gaussian components."""
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def _check_state(psi, dim):
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (dim,):
        raise DimensionError(f"state of shape {psi.shape}, expected ({dim},)")
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > NORM_TOL:
        raise ValidationError(f"state is not normalized (norm={norm:.15g})")
    return psi


def evolve_state(spectrum: Spectrum, psi0: np.ndarray, t: float) -> np.ndarray:
    """``exp(-itH) psi0`` through the eigenbasis."""
    psi0 = _check_state(psi0, spectrum.dim)
    V = spectrum.vectors
    return V @ (np.exp(-1j * t * spectrum.energies) * (V.conj().T @ psi0))


def purified_G(H: np.ndarray, grid: TimeGrid) -> ComplexTimeSeries:
    """Overlap ``<psi_inf|psi(t)>`` by propagating the doubled system.

    The 2L-site state ``D^{-1/2} sum_sigma |sigma>_S |sigma>_A`` is stored as
    a ``(D, D)`` array indexed ``[system, ancilla]``; the one-step propagator
    ``exp(-i dt H)`` (matrix exponential, no eigendecomposition) acts on the
    system index only.
    """
    H = check_hermitian(H)
    D = H.shape[0]
    if D > 2**MAX_PURIFIED_SITES:
        raise DimensionError(
            f"doubled system needs D <= {2**MAX_PURIFIED_SITES}, got D={D}")
    step = scipy.linalg.expm(-1j * grid.dt * H)
    psi_inf = np.eye(D, dtype=complex) / math.sqrt(D)
    psi = psi_inf.copy()
    out = np.empty(len(grid), dtype=complex)
    out[0] = np.vdot(psi_inf, psi)
    for k in range(1, len(grid)):
        psi = step @ psi
        out[k] = np.vdot(psi_inf, psi)
    return ComplexTimeSeries(grid, out, D)


def purified_overlap_check(spec: ModelSpec, grid: TimeGrid) -> float:
    """Max deviation between the purified overlap and ``Z(it)/D``."""
    if spec.L > MAX_PURIFIED_SITES:
        raise DimensionError(f"L={spec.L} too large for the doubled system (max {MAX_PURIFIED_SITES})")
    H = build_hamiltonian(spec)
    exact = loschmidt_G(diagonalize(H), grid)
    return float(np.max(np.abs(purified_G(H, grid).values - exact.values)))


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]])
_HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def probe_interferometer(spectrum: Spectrum, psi0: np.ndarray, t: float) -> tuple[float, float]:
    """Probe-qubit readout ``(<sigma_x>, <sigma_y>)`` of the overlap ``<psi0|psi(t)>``.

    The joint state is stored as a ``(D, 2)`` array ``[system, probe]``.
    The probe is rotated by a Hadamard, ``exp(-itH)`` is applied on the
    ``|1>_p`` branch only, and the Pauli expectations are traced against the
    reduced probe density matrix.
    """
    psi0 = _check_state(psi0, spectrum.dim)
    joint = np.zeros((spectrum.dim, 2), dtype=complex)
    joint[:, 0] = psi0
    joint = joint @ _HADAMARD.T
    joint[:, 1] = evolve_state(spectrum, joint[:, 1] * math.sqrt(2), t) / math.sqrt(2)
    rho_probe = joint.T @ joint.conj()
    x = np.trace(rho_probe @ _PAULI_X).real
    y = np.trace(rho_probe @ _PAULI_Y).real
    return float(x), float(y)


def stochastic_trace_G(spectrum: Spectrum, grid: TimeGrid, samples: int, seed: int) -> ComplexTimeSeries:
    """Random-state estimate of ``G(t)``, averaging ``<r|exp(-itH)|r>``.

    The returned series carries the per-sample standard error in ``stderr``.
    """
    if samples < 1:
        raise ValidationError(f"samples must be >= 1, got {samples}")
    rng = np.random.Generator(np.random.PCG64(seed))
    D = spectrum.dim
    phases = _phases(spectrum.energies, grid.times)
    total = np.zeros(len(grid), dtype=complex)
    total_sq = np.zeros(len(grid))
    for _ in range(samples):
        r = random_state(D, rng)
        c = spectrum.vectors.conj().T @ r
        estimate = phases @ (c.real**2 + c.imag**2)
        total += estimate
        total_sq += np.abs(estimate) ** 2
    mean = total / samples
    if samples > 1:
        var = np.maximum(total_sq / samples - np.abs(mean) ** 2, 0.0) * samples / (samples - 1)
        stderr = np.sqrt(var / samples)
    else:
        stderr = np.full(len(grid), np.inf)
    return ComplexTimeSeries(grid, mean, D, spectrum.bandwidth, stderr)


def half_chain_entropy(psi: np.ndarray, L: int) -> float:
    """Von Neumann entropy (nats) across the cut after site ``L // 2``."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2**L,):
        raise DimensionError(f"state of shape {psi.shape} for L={L}")
    cut = L // 2
    # index = high * 2**cut + low, low holding sites 0..cut-1
    schmidt = np.linalg.svd(psi.reshape(2 ** (L - cut), 2**cut), compute_uv=False)
    p = schmidt**2
    p = p[p > 1e-300]
    return float(max(0.0, -np.sum(p * np.log(p))))
