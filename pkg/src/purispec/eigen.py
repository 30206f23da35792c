"""Full dense diagonalization and the spectral data derived from it."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ComputationError, DimensionError, ValidationError

HERMITIAN_TOL = 1e-12
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues (ascending) and eigenvectors (columns) in the Fock basis."""

    energies: np.ndarray
    vectors: np.ndarray
    degeneracy_rtol: float = field(default=DEGENERACY_RTOL)

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        vectors = np.asarray(self.vectors)
        if vectors.ndim != 2 or vectors.shape != (energies.size, energies.size):
            raise DimensionError(
                f"vectors shape {vectors.shape} does not match {energies.size} energies")
        if np.any(np.diff(energies) < 0):
            raise ValidationError("energies must be sorted in ascending order")
        energies.setflags(write=False)
        vectors.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def bandwidth(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.vectors)

    @cached_property
    def cluster_labels(self) -> np.ndarray:
        """Integer label per level; levels in one degenerate cluster share it.

        Consecutive levels closer than ``degeneracy_rtol * bandwidth`` are
        merged.
        """
        gaps = np.diff(self.energies)
        threshold = self.degeneracy_rtol * max(self.bandwidth, np.finfo(float).tiny)
        labels = np.concatenate([[0], np.cumsum(gaps >= threshold)])
        labels.setflags(write=False)
        return labels

    @property
    def has_degeneracies(self) -> bool:
        return self.cluster_labels[-1] + 1 < self.dim

    def clusters(self) -> list[np.ndarray]:
        """Index arrays of the degenerate clusters (singletons included)."""
        labels = self.cluster_labels
        bounds = np.flatnonzero(np.diff(labels)) + 1
        return np.split(np.arange(self.dim), bounds)

    def cluster_projector(self) -> np.ndarray:
        """``P[n, m] = 1`` when levels ``n`` and ``m`` are in the same cluster."""
        labels = self.cluster_labels
        return (labels[:, None] == labels[None, :]).astype(float)


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValidationError("matrix contains non-finite entries")
    asym = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if asym > tol:
        raise ValidationError(f"matrix is not Hermitian: max|H - H^+| = {asym:.3e}")
    return H


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    vectors = np.array(vectors)
    pivot = np.argmax(np.abs(vectors), axis=0)
    ref = vectors[pivot, np.arange(vectors.shape[1])]
    if np.iscomplexobj(vectors):
        vectors *= (np.abs(ref) / ref)[None, :]
    else:
        vectors *= np.sign(ref)[None, :]
    return vectors


def diagonalize(H: np.ndarray) -> Spectrum:
    """Diagonalize a Hermitian matrix with LAPACK's dense solver."""
    H = check_hermitian(H)
    try:
        energies, vectors = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise ComputationError(
            f"eigensolver failed for {H.shape[0]}x{H.shape[0]} matrix "
            f"(dtype={H.dtype}, norm={np.linalg.norm(H):.6g}, "
            f"max|H_ij|={np.max(np.abs(H)):.6g}): {exc}") from exc
    return Spectrum(energies, fix_phases(vectors))


def weights_matrix(spectrum: Spectrum) -> np.ndarray:
    """``M[sigma, n] = |<sigma|n>|^2``; bistochastic."""
    V = spectrum.vectors
    return (V.real**2 + V.imag**2) if np.iscomplexobj(V) else V**2


def eigen_expectations(spectrum: Spectrum, A: np.ndarray) -> np.ndarray:
    """Diagonal matrix elements ``A_n = <n|A|n>``.

    ``A`` may be a full matrix or a 1-d array holding the diagonal of an
    operator that is diagonal in the Fock basis.
    """
    A = np.asarray(A)
    D = spectrum.dim
    if A.ndim == 1:
        if A.size != D:
            raise DimensionError(f"observable diagonal has {A.size} entries, expected {D}")
        return weights_matrix(spectrum).T @ A.real
    if A.shape != (D, D):
        raise DimensionError(f"observable shape {A.shape}, expected {(D, D)}")
    if np.count_nonzero(A - np.diag(np.diagonal(A))) == 0:
        return weights_matrix(spectrum).T @ np.diagonal(A).real
    V = spectrum.vectors
    return np.einsum("in,ij,jn->n", V.conj(), A, V).real


def write_energies_csv(path, spectrum: Spectrum) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("n,E_n\n")
        for n, e in enumerate(spectrum.energies):
            fh.write(f"{n},{e:.17g}\n")


def write_vectors_binary(path, spectrum: Spectrum) -> None:
    """Column-major complex pairs, little-endian float64 (re, im)."""
    data = np.asarray(spectrum.vectors, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(data.tobytes(order="F"))


def read_vectors_binary(path, dim: int) -> np.ndarray:
    raw = np.fromfile(path, dtype="<c16")
    if raw.size != dim * dim:
        raise DimensionError(f"{path}: {raw.size} entries, expected {dim * dim}")
    return raw.reshape((dim, dim), order="F")
