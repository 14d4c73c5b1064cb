"""Pure and mixed states over labelled finite bases, and bipartite helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .linalg import jacobi_svd

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = -1e-10
PHASE_EQUAL_TOL = 1e-10


class BasisMismatchError(ValueError):
    """Two objects are expressed over different labelled bases."""


class NormalizationError(ValueError):
    """A normalized state was required."""


class InvalidDensityError(ValueError):
    """Matrix violates trace, Hermiticity or positivity tolerances."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over an ordered tuple of hashable basis labels."""

    labels: tuple
    amplitudes: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        amps = _frozen(self.amplitudes).reshape(-1)
        if len(labels) != amps.shape[0]:
            raise ValueError(f"{len(labels)} labels but {amps.shape[0]} amplitudes")
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise ValueError("basis labels must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "_index", index)

    @classmethod
    def basis(cls, labels: Sequence[Hashable], which: Hashable) -> StateVector:
        labels = tuple(labels)
        amps = np.zeros(len(labels), dtype=complex)
        amps[labels.index(which)] = 1.0
        return cls(labels, amps)

    @classmethod
    def from_dict(cls, labels: Sequence[Hashable], amps: dict) -> StateVector:
        labels = tuple(labels)
        vec = np.zeros(len(labels), dtype=complex)
        for lab, a in amps.items():
            vec[labels.index(lab)] = a
        return cls(labels, vec)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def index(self, label: Hashable) -> int:
        return self._index[label]

    def amplitude(self, label: Hashable) -> complex:
        return complex(self.amplitudes[self._index[label]])

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def normalized(self) -> StateVector:
        n2 = self.norm2()
        if n2 == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.labels, self.amplitudes / np.sqrt(n2))

    def with_amplitudes(self, amps: np.ndarray) -> StateVector:
        return StateVector(self.labels, amps)

    def __repr__(self) -> str:
        terms = [f"{a:.4g}|{lab}>" for lab, a in zip(self.labels, self.amplitudes) if abs(a) > 1e-12]
        return "StateVector(" + " + ".join(terms or ["0"]) + ")"


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Density matrix over labelled basis; validated on construction by default."""

    labels: tuple
    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        mat = _frozen(self.matrix)
        if mat.shape != (len(labels), len(labels)):
            raise ValueError(f"matrix shape {mat.shape} does not match {len(labels)} labels")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", mat)
        if self.check:
            validate_density(mat)

    @classmethod
    def from_pure(cls, psi: StateVector) -> DensityOperator:
        if not psi.is_normalized():
            raise NormalizationError(f"state has norm^2 {psi.norm2():.3g}")
        a = psi.amplitudes
        return cls(psi.labels, np.outer(a, a.conj()))

    @classmethod
    def maximally_mixed(cls, labels: Sequence[Hashable]) -> DensityOperator:
        d = len(labels)
        return cls(tuple(labels), np.eye(d) / d)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


def validate_density(mat: np.ndarray) -> None:
    herm = np.abs(mat - mat.conj().T).max(initial=0.0)
    if herm > HERMITIAN_TOL:
        raise InvalidDensityError(f"not Hermitian (deviation {herm:.3g})")
    tr = np.trace(mat)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidDensityError(f"trace {tr.real:.15g} != 1")
    lo = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2).min(initial=0.0))
    if lo < POSITIVITY_TOL:
        raise InvalidDensityError(f"negative eigenvalue {lo:.3g}")


@dataclass(frozen=True)
class BipartiteShape:
    """Labels of subsystems A and B; joint labels are (a, b) pairs, A-major."""

    labels_a: tuple
    labels_b: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels_a", tuple(self.labels_a))
        object.__setattr__(self, "labels_b", tuple(self.labels_b))

    @classmethod
    def square(cls, labels: Sequence[Hashable]) -> BipartiteShape:
        return cls(tuple(labels), tuple(labels))

    @classmethod
    def from_joint(cls, joint: Sequence[tuple]) -> BipartiteShape:
        a = tuple(dict.fromkeys(lab[0] for lab in joint))
        b = tuple(dict.fromkeys(lab[1] for lab in joint))
        shape = cls(a, b)
        if tuple(joint) != shape.joint_labels:
            raise BasisMismatchError("labels are not a row-major product basis")
        return shape

    @property
    def dim_a(self) -> int:
        return len(self.labels_a)

    @property
    def dim_b(self) -> int:
        return len(self.labels_b)

    @property
    def joint_labels(self) -> tuple:
        return tuple((a, b) for a in self.labels_a for b in self.labels_b)

    def coefficients(self, psi: StateVector) -> np.ndarray:
        """Amplitude matrix ``C[i, j] = <a_i, b_j|psi>``."""
        if psi.labels != self.joint_labels:
            raise BasisMismatchError("state basis does not match the bipartite shape")
        return psi.amplitudes.reshape(self.dim_a, self.dim_b)

    def state(self, coeffs: np.ndarray) -> StateVector:
        return StateVector(self.joint_labels, np.asarray(coeffs).reshape(-1))


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    labels = tuple((la, lb) for la in a.labels for lb in b.labels)
    return StateVector(labels, np.kron(a.amplitudes, b.amplitudes))


def check_same_basis(a, b) -> None:
    if a.labels != b.labels:
        raise BasisMismatchError(f"basis mismatch: {a.labels[:4]}... vs {b.labels[:4]}...")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, antilinear in the first argument."""
    check_same_basis(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def equal_up_to_phase(a: StateVector, b: StateVector, tol: float = PHASE_EQUAL_TOL) -> bool:
    return abs(inner_product(a, b)) >= 1.0 - tol


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left_vectors: np.ndarray  # columns
    right_vectors: np.ndarray  # columns
    shape: BipartiteShape

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    def reconstruct(self) -> StateVector:
        coeffs = (self.left_vectors * self.coefficients) @ self.right_vectors.T
        return self.shape.state(coeffs)


def schmidt_decompose(psi: StateVector, shape: BipartiteShape, cutoff: float = 1e-14) -> SchmidtDecomposition:
    """Schmidt form via SVD of the amplitude matrix.

    Coefficients at or below ``cutoff`` are dropped, so a product state yields a
    single coefficient.
    """
    if not psi.is_normalized(1e-10):
        raise NormalizationError(f"Schmidt decomposition needs a normalized state (norm^2 {psi.norm2():.6g})")
    u, s, vh = jacobi_svd(shape.coefficients(psi))
    keep = s > cutoff
    return SchmidtDecomposition(
        coefficients=s[keep],
        left_vectors=u[:, keep],
        right_vectors=vh[keep, :].T,
        shape=shape,
    )


def fidelity_pure(rho: DensityOperator, target: StateVector) -> float:
    """<target|rho|target> for a normalized target."""
    check_same_basis(rho, target)
    if not target.is_normalized(1e-10):
        raise NormalizationError("fidelity target must be normalized")
    t = target.amplitudes
    return float(np.vdot(t, rho.matrix @ t).real)


def project_to_subspace(psi: StateVector, labels: Iterable[Hashable]) -> tuple[StateVector, float]:
    """Restrict ``psi`` to ``labels`` (kept in the original order), unnormalized."""
    wanted = set(labels)
    if not wanted:
        raise ValueError("empty label set")
    missing = wanted.difference(psi.labels)
    if missing:
        raise BasisMismatchError(f"labels not in basis: {sorted(map(str, missing))}")
    kept = [i for i, lab in enumerate(psi.labels) if lab in wanted]
    sub = StateVector(tuple(psi.labels[i] for i in kept), psi.amplitudes[kept])
    return sub, sub.norm2()


def apply_local(psi: StateVector, shape: BipartiteShape, op_a: np.ndarray | None = None,
                op_b: np.ndarray | None = None) -> StateVector:
    """Apply ``op_a ⊗ op_b`` (either may be None for identity) to a bipartite pure state."""
    c = shape.coefficients(psi)
    if op_a is not None:
        c = op_a @ c
    if op_b is not None:
        c = c @ op_b.T
    return shape.state(c)


def apply_local_density(rho: DensityOperator, shape: BipartiteShape, op_a: np.ndarray | None = None,
                        op_b: np.ndarray | None = None, check: bool = True) -> DensityOperator:
    if rho.labels != shape.joint_labels:
        raise BasisMismatchError("density operator basis does not match the bipartite shape")
    ka = np.eye(shape.dim_a) if op_a is None else op_a
    kb = np.eye(shape.dim_b) if op_b is None else op_b
    k = np.kron(ka, kb)
    return DensityOperator(rho.labels, k @ rho.matrix @ k.conj().T, check=check)


def random_state(labels: Sequence[Hashable], rng: np.random.Generator) -> StateVector:
    d = len(labels)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector(tuple(labels), v / np.linalg.norm(v))


def random_density(labels: Sequence[Hashable], rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random density operator from a Ginibre matrix of the given rank."""
    d = len(labels)
    r = d if rank is None else rank
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityOperator(tuple(labels), m / np.trace(m).real)
