"""Noise budget: unbalanced spiral bandwidth, cross-talk, loss of coherence, and filtering."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .bell import LAB_MODES, BellLabel, ModeSpace, bell_state, pauli_x, pauli_z
from .qudit import (
    BipartiteShape,
    DensityOperator,
    apply_local,
    fidelity_pure,
)
from .source import SourceSpec, source_state

MEASURED_ALPHA_OVER_BETA = 0.69
MEASURED_ALPHA_OVER_GAMMA = 0.45
MEASURED_CROSSTALK = 0.11
MEASURED_COHERENCE = 0.97


@dataclass(frozen=True)
class NoiseModel:
    """Spiral-bandwidth ratios plus cross-talk fraction and coherence factor.

    The source is ``gamma|-2,-2> + beta|-1,-1> + alpha|0,0> + beta|1,1>``.
    By default ``beta = alpha / alpha_over_beta``; ``reciprocal`` flips that to
    ``beta = alpha * alpha_over_beta`` (same for gamma). ``amplitudes``, when
    given, overrides the ratios with explicit per-mode amplitudes ordered by OAM.
    """

    alpha_over_beta: float = 1.0
    alpha_over_gamma: float = 1.0
    crosstalk: float = 0.0
    coherence: float = 1.0
    reciprocal: bool = False
    amplitudes: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.alpha_over_beta <= 0 or self.alpha_over_gamma <= 0:
            raise ValueError("spiral ratios must be positive")
        if not 0.0 <= self.crosstalk <= 1.0:
            raise ValueError(f"cross-talk fraction {self.crosstalk} outside [0, 1]")
        if not 0.0 <= self.coherence <= 1.0:
            raise ValueError(f"coherence factor {self.coherence} outside [0, 1]")
        if self.amplitudes is not None:
            object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))

    @classmethod
    def measured(cls, reciprocal: bool = False) -> NoiseModel:
        return cls(MEASURED_ALPHA_OVER_BETA, MEASURED_ALPHA_OVER_GAMMA, MEASURED_CROSSTALK, MEASURED_COHERENCE, reciprocal)

    @classmethod
    def ideal(cls) -> NoiseModel:
        return cls()

    def source(self, modes: ModeSpace = LAB_MODES) -> SourceSpec:
        if self.amplitudes is not None:
            if len(self.amplitudes) != modes.dim:
                raise ValueError(f"{len(self.amplitudes)} amplitudes for a {modes.dim}-mode window")
            return SourceSpec(dict(zip(modes.labels, self.amplitudes)))
        if self.alpha_over_beta == 1.0 and self.alpha_over_gamma == 1.0:
            return SourceSpec.flat(modes)
        if modes != LAB_MODES:
            raise ValueError("ratio form of the spiral spectrum is defined on the -2..1 window only")
        return spiral_state(self.alpha_over_beta, self.alpha_over_gamma, self.reciprocal)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["amplitudes"] = None if self.amplitudes is None else list(self.amplitudes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> NoiseModel:
        return cls(**d)


def spiral_amplitudes(alpha_over_beta: float, alpha_over_gamma: float, reciprocal: bool = False) -> np.ndarray:
    """Normalized amplitudes on OAM -2, -1, 0, 1 (gamma on -2, alpha on 0)."""
    if alpha_over_beta <= 0 or alpha_over_gamma <= 0:
        raise ValueError("spiral ratios must be positive")
    alpha = 1.0
    if reciprocal:
        beta, gamma = alpha * alpha_over_beta, alpha * alpha_over_gamma
    else:
        beta, gamma = alpha / alpha_over_beta, alpha / alpha_over_gamma
    amps = np.array([gamma, beta, alpha, beta])
    return amps / np.linalg.norm(amps)


def spiral_state(alpha_over_beta: float, alpha_over_gamma: float, reciprocal: bool = False) -> SourceSpec:
    amps = spiral_amplitudes(alpha_over_beta, alpha_over_gamma, reciprocal)
    return SourceSpec(dict(zip(LAB_MODES.labels, amps)))


def _square_shape(rho: DensityOperator) -> BipartiteShape:
    shape = BipartiteShape.from_joint(rho.labels)
    if shape.dim_a != shape.dim_b:
        raise ValueError("channel needs two subsystems of equal dimension")
    return shape


@dataclass(frozen=True)
class Crosstalk:
    """With probability ``epsilon`` the coincidence populations are scattered uniformly
    over the cells outside the correlated support ``{(k, k⊕shift)}``, without coherence."""

    epsilon: float
    shift: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"cross-talk fraction {self.epsilon} outside [0, 1]")

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        d = _square_shape(rho).dim_a
        a, b = np.divmod(np.arange(d * d), d)
        off = (b != (a + self.shift) % d).astype(float)
        leak = np.diag(off / off.sum()) * np.trace(rho.matrix).real
        return DensityOperator(rho.labels, (1.0 - self.epsilon) * rho.matrix + self.epsilon * leak)


@dataclass(frozen=True)
class Dephasing:
    """Scales every coherence of the product-basis density matrix by ``coherence``."""

    coherence: float

    def __post_init__(self):
        if not 0.0 <= self.coherence <= 1.0:
            raise ValueError(f"coherence factor {self.coherence} outside [0, 1]")

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        m = rho.matrix
        diag = np.diag(np.diag(m))
        return DensityOperator(rho.labels, self.coherence * m + (1.0 - self.coherence) * diag)


def crosstalk_channel(epsilon: float, shift: int = 0) -> Crosstalk:
    return Crosstalk(epsilon, shift)


def dephase_channel(coherence: float) -> Dephasing:
    return Dephasing(coherence)


ORDERS = ("crosstalk-first", "dephase-first")


def apply_noise(rho: DensityOperator, model: NoiseModel, shift: int = 0,
                order: str = "crosstalk-first") -> DensityOperator:
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}")
    channels = [crosstalk_channel(model.crosstalk, shift), dephase_channel(model.coherence)]
    if order == "dephase-first":
        channels.reverse()
    for ch in channels:
        rho = ch(rho)
    return rho


def noisy_state(model: NoiseModel, target: BellLabel, order: str = "crosstalk-first") -> DensityOperator:
    """Spiral source, ideal local gates (Z^n on A, X^m on B), then the channels."""
    modes = LAB_MODES if target.dim == 4 else ModeSpace.default(target.dim)
    psi, _ = source_state(model.source(modes), modes)
    psi = apply_local(psi, modes.shape, pauli_z(target.dim, target.n), pauli_x(target.dim, target.m))
    return apply_noise(DensityOperator.from_pure(psi.normalized()), model, target.m, order)


def predicted_witness(model: NoiseModel, target: BellLabel, order: str = "crosstalk-first") -> float:
    modes = LAB_MODES if target.dim == 4 else ModeSpace.default(target.dim)
    return fidelity_pure(noisy_state(model, target, order), bell_state(target, modes))


def average_diagonal_fidelity(model: NoiseModel, dim: int = 4) -> float:
    return float(np.mean([predicted_witness(model, lab) for lab in BellLabel.all(dim)]))


def fit_crosstalk(target_fidelity: float, dim: int = 4) -> float:
    """Cross-talk fraction that alone caps the psi_00 fidelity at ``target_fidelity``."""
    label = BellLabel(dim, 0, 0)

    def gap(eps: float) -> float:
        return predicted_witness(NoiseModel(crosstalk=eps), label) - target_fidelity

    if not gap(1.0) <= 0.0 <= gap(0.0):
        raise ValueError(f"fidelity {target_fidelity} not reachable by cross-talk alone")
    return float(brentq(gap, 0.0, 1.0, xtol=1e-14))


@dataclass(frozen=True, eq=False)
class ProcrusteanFilter:
    factors: dict  # OAM -> complex attenuation on photon A
    success_probability: float
    state: object  # StateVector after filtering, normalized


def procrustean_filter(spec: SourceSpec, modes: ModeSpace = LAB_MODES) -> ProcrusteanFilter:
    """Local diagonal filter on photon A that equalizes the Schmidt coefficients.

    Every mode is attenuated down to the weakest amplitude (and its phase
    removed), so the heralded state is ψ_00 with probability ``D |a_min|^2``.
    """
    if not spec.pbs_flip:
        raise ValueError("filtering expects the flipped (diagonal) source")
    psi, _ = source_state(spec, modes)
    diag = np.diag(modes.shape.coefficients(psi))
    if np.any(np.abs(diag) <= 1e-15):
        raise ValueError("procrustean filtering needs every mode populated")
    a_min = np.abs(diag).min()
    factors = a_min / diag
    out = apply_local(psi, modes.shape, np.diag(factors))
    return ProcrusteanFilter(dict(zip(modes.labels, factors)), out.norm2(), out.normalized())
