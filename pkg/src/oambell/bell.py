"""Generalized Bell basis and the Weyl-Heisenberg X/Z gates that navigate it."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .qudit import (
    BipartiteShape,
    DensityOperator,
    StateVector,
    apply_local,
    fidelity_pure,
    inner_product,
    check_same_basis,
)


class ContractViolation(ValueError):
    """An input did not satisfy an operation's precondition."""


@dataclass(frozen=True)
class ModeSpace:
    """Contiguous OAM window ``lowest_oam .. lowest_oam + dim - 1`` mapped to k = 0..dim-1."""

    dim: int
    lowest_oam: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")

    @classmethod
    def default(cls, dim: int) -> ModeSpace:
        # centres the window; gives the -2..1 window for dim 4
        return cls(dim, -(dim // 2))

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(range(self.lowest_oam, self.lowest_oam + self.dim))

    @property
    def shape(self) -> BipartiteShape:
        return BipartiteShape.square(self.labels)

    def index(self, ell: int) -> int:
        k = ell - self.lowest_oam
        if not 0 <= k < self.dim:
            raise KeyError(f"OAM {ell} outside window {self.labels[0]}..{self.labels[-1]}")
        return k

    def oam(self, k: int) -> int:
        if not 0 <= k < self.dim:
            raise KeyError(f"index {k} outside 0..{self.dim - 1}")
        return k + self.lowest_oam


LAB_MODES = ModeSpace(4, -2)


@dataclass(frozen=True, order=True)
class BellLabel:
    dim: int
    m: int
    n: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        if not (0 <= self.m < self.dim and 0 <= self.n < self.dim):
            raise ValueError(f"label (m={self.m}, n={self.n}) outside 0..{self.dim - 1}")

    @classmethod
    def all(cls, dim: int) -> list[BellLabel]:
        return [cls(dim, m, n) for m in range(dim) for n in range(dim)]

    @classmethod
    def from_message(cls, dim: int, message: int) -> BellLabel:
        return cls(dim, message // dim, message % dim)

    @property
    def message(self) -> int:
        return self.m * self.dim + self.n

    def __str__(self) -> str:
        return f"psi_{self.m}{self.n}"


def _modes_for(label: BellLabel, modes: ModeSpace | None) -> ModeSpace:
    modes = ModeSpace.default(label.dim) if modes is None else modes
    if modes.dim != label.dim:
        raise ValueError(f"mode space dimension {modes.dim} != label dimension {label.dim}")
    return modes


def bell_coefficients(label: BellLabel) -> np.ndarray:
    """Amplitude matrix ``C[k, k⊕m] = exp(2πi n k / D) / sqrt(D)``."""
    d = label.dim
    k = np.arange(d)
    c = np.zeros((d, d), dtype=complex)
    c[k, (k + label.m) % d] = np.exp(2j * np.pi * label.n * k / d) / np.sqrt(d)
    return c


def bell_state(label: BellLabel, modes: ModeSpace | None = None) -> StateVector:
    """Bell state ψ_mn in the two-photon OAM basis of ``modes``."""
    modes = _modes_for(label, modes)
    return modes.shape.state(bell_coefficients(label))


def bell_basis(dim: int, modes: ModeSpace | None = None) -> list[StateVector]:
    return [bell_state(lab, modes) for lab in BellLabel.all(dim)]


def pauli_x(dim: int, power: int = 1) -> np.ndarray:
    """Cyclic shift ``|k> -> |k ⊕ power>``."""
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    k = np.arange(dim)
    x = np.zeros((dim, dim), dtype=complex)
    x[(k + power) % dim, k] = 1.0
    return x


def pauli_z(dim: int, power: int = 1) -> np.ndarray:
    """Clock phase ``|k> -> exp(2πi k power / D)|k>``."""
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    k = np.arange(dim)
    return np.diag(np.exp(2j * np.pi * ((k * power) % dim) / dim))


def generate_bell(seed: StateVector, label: BellLabel, modes: ModeSpace | None = None,
                  tol: float = 1e-10) -> StateVector:
    """Apply ``Z^n`` to photon A and ``X^m`` to photon B of ψ_00."""
    modes = _modes_for(label, modes)
    ideal = bell_state(BellLabel(label.dim, 0, 0), modes)
    if abs(inner_product(ideal, seed)) < 1.0 - tol:
        raise ContractViolation("seed state is not psi_00")
    return apply_local(seed, modes.shape, pauli_z(label.dim, label.n), pauli_x(label.dim, label.m))


States = Sequence[Union[StateVector, DensityOperator]]


def overlap_matrix(states: States, targets: Sequence[StateVector]) -> np.ndarray:
    """``out[i, j]`` = overlap of state i with ideal target j."""
    out = np.zeros((len(states), len(targets)))
    for i, s in enumerate(states):
        for j, t in enumerate(targets):
            if isinstance(s, DensityOperator):
                out[i, j] = fidelity_pure(s, t)
            else:
                check_same_basis(s, t)
                out[i, j] = abs(inner_product(t, s)) ** 2
    return out


class Symmetry(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"
    NEITHER = "neither"


def swap_subsystems(psi: StateVector, shape: BipartiteShape) -> StateVector:
    if shape.labels_a != shape.labels_b:
        raise ValueError("exchange needs identical subsystems")
    return shape.state(shape.coefficients(psi).T)


def symmetry_class(label: BellLabel, tol: float = 1e-12) -> Symmetry:
    psi = bell_state(label)
    shape = ModeSpace.default(label.dim).shape
    ov = inner_product(psi, swap_subsystems(psi, shape))
    if abs(ov - 1.0) <= tol:
        return Symmetry.SYMMETRIC
    if abs(ov + 1.0) <= tol:
        return Symmetry.ANTISYMMETRIC
    return Symmetry.NEITHER


def symmetry_census(dim: int) -> dict[str, int]:
    counts = {s.value: 0 for s in Symmetry}
    for lab in BellLabel.all(dim):
        counts[symmetry_class(lab).value] += 1
    return counts
