"""Spin-1/2 chain Hamiltonians with open boundaries, dense storage.

Basis convention: the Fock state with bits ``b_0 ... b_{L-1}`` has index
``sum_l b_l 2**l`` (site 0 is the least significant bit) and ``b = 0``
encodes spin up, ``S^z = +1/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, ValidationError

MAX_SITES = 16

ISING = "ising"
XXZ = "xxz"
KINDS = (ISING, XXZ)

_UP = {"u", "U", "0", "+", "↑"}
_DOWN = {"d", "D", "1", "-", "↓"}


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one Hamiltonian instance.

    ``kind="ising"``::

        H = -j_z sum S^z_l S^z_{l+1} - h_x sum S^x_l - h_z sum S^z_l - sum h_l S^z_l

    ``kind="xxz"``::

        H = sum [j_z S^z_l S^z_{l+1} + j (S^x_l S^x_{l+1} + S^y_l S^y_{l+1})]
            - h_x sum S^x_l - h_z sum S^z_l - sum h_l S^z_l

    The random fields ``h_l`` are uniform in ``[-r_z/2, r_z/2]`` and drawn
    from ``seed`` (see :func:`draw_disorder`).
    """

    kind: str = ISING
    L: int = 4
    j_z: float = 1.0
    j: float = 0.0
    h_x: float = 0.0
    h_z: float = 0.0
    r_z: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}, expected one of {KINDS}")
        if isinstance(self.L, bool) or int(self.L) != self.L:
            raise ValidationError(f"L must be an integer, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        if not 1 <= self.L <= MAX_SITES:
            raise DimensionError(f"L={self.L} outside [1, {MAX_SITES}]")
        for name in ("j_z", "j", "h_x", "h_z", "r_z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.r_z < 0:
            raise ValidationError(f"r_z must be >= 0, got {self.r_z}")
        if int(self.seed) != self.seed or not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def dim(self) -> int:
        return 2**self.L

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(**{**asdict(self), "seed": seed})

    def to_config(self) -> dict[str, str]:
        """Flat key/value mapping (all values as strings)."""
        return {key: repr(value) if isinstance(value, float) else str(value)
                for key, value in asdict(self).items()}

    @classmethod
    def from_config(cls, section: Mapping[str, str]) -> "ModelSpec":
        known = {"kind", "L", "j_z", "j", "h_x", "h_z", "r_z", "seed"}
        unknown = set(section) - known
        if unknown:
            raise ValidationError(f"unknown model keys: {sorted(unknown)}")
        kwargs = {}
        for key, raw in section.items():
            raw = str(raw).strip()
            if key == "kind":
                kwargs[key] = raw.lower()
            elif key in ("L", "seed"):
                try:
                    kwargs[key] = int(raw)
                except ValueError:
                    raise ValidationError(f"{key} must be an integer, got {raw!r}") from None
            else:
                try:
                    kwargs[key] = float(raw)
                except ValueError:
                    raise ValidationError(f"{key} must be a number, got {raw!r}") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class FockState:
    """A basis state of an ``L``-site chain."""

    index: int
    L: int

    def __post_init__(self):
        if not 0 <= self.index < 2**self.L:
            raise ValidationError(f"Fock index {self.index} out of range for L={self.L}")

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.index >> site) & 1 for site in range(self.L))

    @property
    def sz(self) -> np.ndarray:
        """Per-site ``S^z`` values (+1/2 for up, -1/2 for down)."""
        return 0.5 - np.array(self.bits, dtype=float)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "FockState":
        return cls(sum(int(b) << site for site, b in enumerate(bits)), len(bits))

    @classmethod
    def from_string(cls, spins: str) -> "FockState":
        """Parse e.g. ``"uudd"`` or ``"↑↑↓↓"``; first character is site 0."""
        bits = []
        for ch in spins:
            if ch in _UP:
                bits.append(0)
            elif ch in _DOWN:
                bits.append(1)
            else:
                raise ValidationError(f"bad spin character {ch!r} in {spins!r}")
        if not bits:
            raise ValidationError("empty spin string")
        return cls.from_bits(bits)

    def __str__(self):
        return "".join("↓" if b else "↑" for b in self.bits)


def neel_like(L: int) -> FockState:
    """The ``↑↑↓↓↑↑...`` pattern used as bulk probe state."""
    return FockState.from_bits([(site // 2) % 2 for site in range(L)])


def _check_sites(L):
    if not 1 <= L <= MAX_SITES:
        raise DimensionError(f"L={L} outside [1, {MAX_SITES}]")


def sz_table(L: int) -> np.ndarray:
    """``(D, L)`` array of ``S^z`` values of every basis state."""
    _check_sites(L)
    idx = np.arange(2**L)
    bits = (idx[:, None] >> np.arange(L)[None, :]) & 1
    return 0.5 - bits


def draw_disorder(r_z: float, L: int, seed: int) -> np.ndarray:
    """Random longitudinal fields, uniform in ``[-r_z/2, r_z/2]``.

    Uses numpy's PCG64 generator, whose stream is platform independent for a
    given seed.
    """
    r_z = float(r_z)
    if not math.isfinite(r_z) or r_z < 0:
        raise ValidationError(f"r_z must be finite and >= 0, got {r_z}")
    _check_sites(L)
    if r_z == 0:
        return np.zeros(L)
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-r_z / 2, r_z / 2, size=L)


def build_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """Dense real-symmetric Hamiltonian matrix of ``spec``."""
    L, D = spec.L, spec.dim
    sz = sz_table(L)
    fields = draw_disorder(spec.r_z, L, spec.seed)

    bond_zz = (sz[:, :-1] * sz[:, 1:]).sum(axis=1)
    if spec.kind == ISING:
        diag = -spec.j_z * bond_zz
    else:
        diag = spec.j_z * bond_zz
    diag = diag - spec.h_z * sz.sum(axis=1) - sz @ fields

    H = np.zeros((D, D))
    idx = np.arange(D)
    H[idx, idx] = diag
    if spec.h_x != 0:
        for site in range(L):
            H[idx ^ (1 << site), idx] += -0.5 * spec.h_x
    if spec.kind == XXZ and spec.j != 0:
        # S^xS^x + S^yS^y = (S^+S^- + S^-S^+)/2 flips an antiparallel pair
        for site in range(L - 1):
            mask = (1 << site) | (1 << (site + 1))
            anti = sz[:, site] != sz[:, site + 1]
            H[idx[anti] ^ mask, idx[anti]] += 0.5 * spec.j
    return H


def build_observable_zz(L: int) -> np.ndarray:
    """Diagonal matrix of ``(1/(L-1)) sum_l S^z_l S^z_{l+1}``."""
    if L < 2:
        raise ValidationError(f"nearest-neighbour observable needs L >= 2, got {L}")
    sz = sz_table(L)
    return np.diag((sz[:, :-1] * sz[:, 1:]).sum(axis=1) / (L - 1))


def popcount(indices: np.ndarray) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    count = np.zeros_like(indices)
    for site in range(MAX_SITES):
        count += (indices >> site) & 1
    return count
