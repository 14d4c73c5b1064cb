"""Entanglement-dimensionality witness, Monte Carlo error propagation and dense coding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bell import LAB_MODES, BellLabel, ModeSpace, bell_basis, bell_state, pauli_x, pauli_z
from .noise import NoiseModel, apply_noise
from .qudit import (
    BipartiteShape,
    DensityOperator,
    StateVector,
    apply_local,
    fidelity_pure,
    schmidt_decompose,
)
from .source import source_state

DEFAULT_REPLICAS = 1000


def witness_bound(target: StateVector, shape: BipartiteShape, d: int) -> float:
    """Largest fidelity with ``target`` reachable by states of Schmidt rank ``d``:
    the sum of the ``d`` largest squared Schmidt coefficients of the target."""
    max_rank = min(shape.dim_a, shape.dim_b)
    if not 1 <= d <= max_rank:
        raise ValueError(f"d={d} outside 1..{max_rank}")
    lam2 = schmidt_decompose(target, shape).coefficients ** 2
    return float(np.sum(lam2[:d]))


@dataclass(frozen=True)
class WitnessResult:
    f_wit: float
    bound: float
    certified_dimension: int
    std_error: float = 0.0
    n_sigma: float = math.inf

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "certified_dimension": self.certified_dimension,
            "f_wit": self.f_wit,
            "n_sigma": None if math.isinf(self.n_sigma) else self.n_sigma,
            "std_error": self.std_error,
        }


def certified_dimension(f_wit: float, bounds: list[float]) -> int:
    """``bounds[d-1]`` is B(d); returns the largest d+1 with f_wit > B(d), else 1.

    A full-rank bound equals 1 and certifies nothing, so it is skipped.
    """
    best = 1
    for d, b in enumerate(bounds[:-1], start=1):
        if f_wit > b:
            best = d + 1
    return best


def certify_dimension(rho: DensityOperator, target: StateVector, shape: BipartiteShape,
                      counts=None, estimator: Callable[[np.ndarray], float] | None = None,
                      replicas: int = DEFAULT_REPLICAS, seed: int = 0) -> WitnessResult:
    """Witness the Schmidt number of ``rho`` against ``target``.

    Without counts the overlap is the exact ``<target|rho|target>``. With a
    count record and its estimator, the overlap is the measured estimate and the
    standard error comes from Monte Carlo resampling of the counts.
    """
    max_rank = min(shape.dim_a, shape.dim_b)
    bounds = [witness_bound(target, shape, d) for d in range(1, max_rank + 1)]
    rank = schmidt_decompose(target, shape).rank
    bound = bounds[max(rank - 1, 1) - 1]
    if counts is None:
        f = fidelity_pure(rho, target)
        std = 0.0
    else:
        if estimator is None:
            raise ValueError("an estimator is required together with counts")
        raw = np.asarray(getattr(counts, "counts", counts))
        f = float(estimator(raw))
        std = monte_carlo_error(raw, estimator, replicas, seed)
    if std > 0.0:
        n_sigma = (f - bound) / std
    else:
        n_sigma = math.inf if f > bound else -math.inf
    return WitnessResult(f, bound, certified_dimension(f, bounds), std, n_sigma)


def replica_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for one replica, independent of the order replicas are run in."""
    return np.random.default_rng([int(seed), int(index)])


def derive_seed(seed: int, index: int) -> int:
    """Deterministic 63-bit child seed for item ``index`` of a seeded batch."""
    state = np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


def monte_carlo_error(counts, estimator: Callable[[np.ndarray], float],
                      replicas: int = DEFAULT_REPLICAS, seed: int = 0) -> float:
    """Sample standard deviation of ``estimator`` over Poisson resamplings of ``counts``."""
    if replicas < 2:
        raise ValueError("need at least two replicas")
    raw = np.asarray(getattr(counts, "counts", counts))
    if not np.any(raw > 0):
        raise ValueError("all counts are zero")
    values = np.array([estimator(replica_rng(seed, r).poisson(raw)) for r in range(replicas)])
    return float(np.std(values, ddof=1))


def random_rank_state(shape: BipartiteShape, d: int, rng: np.random.Generator) -> StateVector:
    a = rng.normal(size=(shape.dim_a, d)) + 1j * rng.normal(size=(shape.dim_a, d))
    b = rng.normal(size=(d, shape.dim_b)) + 1j * rng.normal(size=(d, shape.dim_b))
    c = a @ b
    return shape.state(c / np.linalg.norm(c))


def rank_constrained_search(target: StateVector, shape: BipartiteShape, d: int,
                            samples: int = 10_000, seed: int = 0) -> float:
    """Best overlap with ``target`` found among Schmidt-rank-``d`` pure states.

    A (1+1) evolution strategy on the factors ``A (dim_a x d)``, ``B (d x dim_b)``
    of the amplitude matrix; every evaluated candidate counts as one sample.
    Independent of the Schmidt decomposition of the target.
    """
    rng = np.random.default_rng(seed)
    t = shape.coefficients(target)

    def overlap(a, b):
        c = a @ b
        return abs(np.vdot(c, t)) ** 2 / np.vdot(c, c).real

    def draw(*size):
        return rng.normal(size=size) + 1j * rng.normal(size=size)

    a, b = draw(shape.dim_a, d), draw(d, shape.dim_b)
    cur = overlap(a, b)
    best = cur
    step = 0.3
    for _ in range(samples - 1):
        a2 = a + step * draw(shape.dim_a, d)
        b2 = b + step * draw(d, shape.dim_b)
        val = overlap(a2, b2)
        if val > cur:
            a, b, cur = a2, b2, val
            step *= 1.5
        else:
            step *= 1.5 ** -0.25
        step = min(max(step, 1e-6), 3.0)
        best = max(best, cur)
    return float(best)


@dataclass(frozen=True)
class DenseCodingResult:
    decoded: int
    bits: float


@dataclass(frozen=True, eq=False)
class DenseCodingReport:
    confusion: np.ndarray  # row = sent message, column = Bell outcome
    decoded: tuple[int, ...]
    bits: float

    @property
    def all_correct(self) -> bool:
        return all(i == j for i, j in enumerate(self.decoded))


def encode_message(message: int, dim: int = 4, noise: NoiseModel | None = None,
                   modes: ModeSpace | None = None) -> DensityOperator:
    """Bob applies ``X^m Z^n`` to his photon of ψ_00, with ``(m, n) = divmod(message, D)``."""
    if not 0 <= message < dim * dim:
        raise ValueError(f"message {message} outside 0..{dim * dim - 1}")
    modes = (LAB_MODES if dim == 4 else ModeSpace.default(dim)) if modes is None else modes
    label = BellLabel.from_message(dim, message)
    if noise is None:
        psi = bell_state(BellLabel(dim, 0, 0), modes)
    else:
        psi, _ = source_state(noise.source(modes), modes)
    op_b = pauli_x(dim, label.m) @ pauli_z(dim, label.n)
    rho = DensityOperator.from_pure(apply_local(psi, modes.shape, None, op_b).normalized())
    if noise is not None:
        rho = apply_noise(rho, noise, label.m)
    return rho


def bell_measurement(rho: DensityOperator, dim: int = 4) -> np.ndarray:
    """Outcome probabilities of a projective measurement in the Bell basis."""
    modes = LAB_MODES if dim == 4 else ModeSpace.default(dim)
    return np.array([fidelity_pure(rho, b) for b in bell_basis(dim, modes)])


def _argmax_lowest(p: np.ndarray, tol: float = 1e-12) -> int:
    return int(np.flatnonzero(p >= p.max() - tol)[0])


def mutual_information(confusion: np.ndarray, prior: np.ndarray | None = None) -> float:
    """I(sent; received) in bits for a row-stochastic channel matrix."""
    ch = np.asarray(confusion, dtype=float)
    prior = np.full(ch.shape[0], 1.0 / ch.shape[0]) if prior is None else np.asarray(prior)
    joint = prior[:, None] * ch
    out = joint.sum(axis=0)
    mask = joint > 0
    ratio = joint[mask] / (prior[:, None] * out[None, :])[mask]
    return float(np.sum(joint[mask] * np.log2(ratio)))


def dense_coding_roundtrip(message: int, dim: int = 4, noise: NoiseModel | None = None) -> DenseCodingResult:
    """Encode one message, decode by the most likely Bell outcome."""
    p = bell_measurement(encode_message(message, dim, noise), dim)
    report = dense_coding_channel(dim, noise)
    return DenseCodingResult(_argmax_lowest(p), report.bits)


def dense_coding_channel(dim: int = 4, noise: NoiseModel | None = None, shots: int = 0,
                         seed: int = 0) -> DenseCodingReport:
    """Confusion matrix over all D^2 messages.

    With ``shots == 0`` rows are exact Bell-outcome probabilities; otherwise
    each row is an empirical histogram of ``shots`` seeded measurements.
    """
    rows = []
    for msg in range(dim * dim):
        p = np.clip(bell_measurement(encode_message(msg, dim, noise), dim), 0.0, None)
        p = p / p.sum()
        if shots:
            p = replica_rng(seed, msg).multinomial(shots, p) / shots
        rows.append(p)
    confusion = np.array(rows)
    decoded = tuple(_argmax_lowest(r) for r in confusion)
    return DenseCodingReport(confusion, decoded, mutual_information(confusion))
