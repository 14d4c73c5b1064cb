"""End-to-end simulation of the two-photon setup and count-based fidelity estimation.

Photon A passes a rotated Dove prism; photon B passes one of the cyclic-gate
interferometers. Fidelities are estimated from product projections that an
SLM + single-mode fibre can realize: computational pairs and two-mode
superpositions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bell import LAB_MODES, BellLabel, ModeSpace, bell_coefficients, bell_state
from .noise import NoiseModel, apply_noise
from .optics import GATE_POWERS, PhotonSpace, build_cyclic_gate, computational_block, dove_prism_operator
from .qudit import DensityOperator, StateVector, apply_local
from .source import SourceSpec, source_state
from .witness import DEFAULT_REPLICAS, monte_carlo_error

GATE_FOR_SHIFT = {power: kind for kind, power in GATE_POWERS.items()}
RECOMBINATIONS = ("probabilistic", "deterministic")
PHASES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


@dataclass(frozen=True)
class ExperimentConfig:
    """One Bell-state preparation: Dove angle n*pi/4 on A, gate X^m on B."""

    m: int
    n: int
    recombination: str = "probabilistic"
    noise: NoiseModel | None = None
    source: SourceSpec | None = None
    trim: tuple[float, float] = (0.0, 0.0)
    oam_window: tuple[int, int] = (-4, 4)

    def __post_init__(self):
        BellLabel(4, self.m, self.n)
        if self.recombination not in RECOMBINATIONS:
            raise ValueError(f"recombination must be one of {RECOMBINATIONS}")
        object.__setattr__(self, "trim", tuple(float(t) for t in self.trim))
        object.__setattr__(self, "oam_window", tuple(int(w) for w in self.oam_window))

    @classmethod
    def from_angle(cls, alpha: float, gate: str, **kw) -> ExperimentConfig:
        n = alpha / (math.pi / 4)
        if abs(n - round(n)) > 1e-9 or not 0 <= round(n) < 4:
            raise ValueError(f"Dove angle {alpha} is not one of 0, pi/4, pi/2, 3pi/4")
        return cls(GATE_POWERS[gate], int(round(n)), **kw)

    @property
    def label(self) -> BellLabel:
        return BellLabel(4, self.m, self.n)

    @property
    def dove_angle(self) -> float:
        return self.n * math.pi / 4

    @property
    def gate(self) -> str:
        return GATE_FOR_SHIFT[self.m]

    def to_dict(self) -> dict:
        return {
            "gate": self.gate,
            "m": self.m,
            "n": self.n,
            "dove_angle": self.dove_angle,
            "noise": None if self.noise is None else self.noise.to_dict(),
            "oam_window": list(self.oam_window),
            "recombination": self.recombination,
            "source": None if self.source is None else self.source.to_dict(),
            "trim": list(self.trim),
        }


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: ExperimentConfig
    rho: DensityOperator
    success_probability: float
    retained_norm: float

    @property
    def fidelity(self) -> float:
        t = bell_state(self.config.label, LAB_MODES).amplitudes
        return float(np.vdot(t, self.rho.matrix @ t).real)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Source -> Dove prism on A -> cyclic gate on B -> noise channels."""
    modes = LAB_MODES
    if cfg.source is not None:
        spec = cfg.source
    elif cfg.noise is not None:
        spec = cfg.noise.source(modes)
    else:
        spec = SourceSpec.flat(modes)
    psi, retained = source_state(spec, modes)

    op_a = dove_prism_operator(cfg.dove_angle, modes.labels)
    if cfg.gate == "identity":
        op_b = np.eye(modes.dim, dtype=complex)
    else:
        circuit = build_cyclic_gate(cfg.gate, PhotonSpace(("a", "b"), cfg.oam_window), cfg.recombination, cfg.trim)
        op_b, _ = computational_block(circuit, modes)
    out = apply_local(psi, modes.shape, op_a, op_b)
    prob = out.norm2()
    if prob <= 1e-15:
        raise ValueError("nothing survives post-selection")
    rho = DensityOperator.from_pure(out.normalized())
    if cfg.noise is not None:
        rho = apply_noise(rho, cfg.noise, cfg.m)
    return ExperimentResult(cfg, rho, prob, retained)


def coincidence_probability(rho: DensityOperator, proj_a: StateVector, proj_b: StateVector) -> float:
    """``Tr(rho |a><a| ⊗ |b><b|)`` for normalized single-photon projections."""
    joint = tuple((la, lb) for la in proj_a.labels for lb in proj_b.labels)
    if joint != rho.labels:
        raise ValueError("projector bases do not match the two-photon state")
    v = np.kron(proj_a.amplitudes, proj_b.amplitudes)
    return float(np.vdot(v, rho.matrix @ v).real)


@dataclass(frozen=True, eq=False)
class FidelitySettings:
    """Product projections and weights with ``sum_i w_i Tr(rho P_i) = <psi|rho|psi>``."""

    target: BellLabel
    modes: ModeSpace
    proj_a: np.ndarray  # (settings, D)
    proj_b: np.ndarray
    weights: np.ndarray
    computational: np.ndarray  # bool mask of the D^2 computational pairs
    names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.weights)

    def probabilities(self, rho: DensityOperator) -> np.ndarray:
        if rho.labels != self.modes.shape.joint_labels:
            raise ValueError("density operator basis does not match the settings")
        v = np.einsum("si,sj->sij", self.proj_a, self.proj_b).reshape(len(self), -1)
        p = np.einsum("si,ij,sj->s", v.conj(), rho.matrix, v).real
        return p

    def estimate(self, rho: DensityOperator) -> float:
        return float(self.weights @ self.probabilities(rho))

    def from_counts(self, counts: np.ndarray) -> float:
        """Plug-in estimate: weighted counts over the computational-basis total."""
        counts = np.asarray(counts, dtype=float)
        total = counts[self.computational].sum()
        if total <= 0:
            raise ValueError("no computational-basis coincidences recorded")
        return float(self.weights @ counts / total)


def fidelity_settings(target: BellLabel, modes: ModeSpace | None = None) -> FidelitySettings:
    """Computational pairs plus, for each mode pair k < k', the 4 x 4 grid of
    superpositions ``(|k> + e^{i phi}|k'>)/sqrt2`` on A and
    ``(|k⊕m> + e^{i chi}|k'⊕m>)/sqrt2`` on B with phi, chi in {0, pi/2, pi, 3pi/2}.

    The superposition weights ``Re[c_k c*_k' e^{i(phi+chi)}]/2`` pick out exactly
    the coherence ``<k,k⊕m|rho|k',k'⊕m>`` by discrete Fourier filtering.
    """
    d = target.dim
    modes = (LAB_MODES if d == 4 else ModeSpace.default(d)) if modes is None else modes
    c = bell_coefficients(target)
    amp = np.array([c[k, (k + target.m) % d] for k in range(d)])
    eye = np.eye(d, dtype=complex)
    pa, pb, w, comp, names = [], [], [], [], []
    for ka in range(d):
        for kb in range(d):
            pa.append(eye[ka])
            pb.append(eye[kb])
            w.append(abs(amp[ka]) ** 2 if kb == (ka + target.m) % d else 0.0)
            comp.append(True)
            names.append(f"Z {modes.oam(ka)},{modes.oam(kb)}")
    for k, kp in itertools.combinations(range(d), 2):
        j, jp = (k + target.m) % d, (kp + target.m) % d
        coh = amp[k] * np.conj(amp[kp])
        for phi, chi in itertools.product(PHASES, PHASES):
            pa.append((eye[k] + np.exp(1j * phi) * eye[kp]) / np.sqrt(2))
            pb.append((eye[j] + np.exp(1j * chi) * eye[jp]) / np.sqrt(2))
            w.append(0.5 * (coh * np.exp(1j * (phi + chi))).real)
            comp.append(False)
            names.append(f"S {modes.oam(k)}{modes.oam(kp)}|{modes.oam(j)}{modes.oam(jp)} "
                         f"phi={phi / math.pi:g}pi chi={chi / math.pi:g}pi")
    return FidelitySettings(target, modes, np.array(pa), np.array(pb), np.array(w),
                            np.array(comp), tuple(names))


@dataclass(frozen=True, eq=False)
class CountMatrix:
    settings: FidelitySettings
    counts: np.ndarray
    total_exposure: float
    seed: int | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.settings),):
            raise ValueError("one count per setting is required")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    def to_dict(self) -> dict:
        return {"counts": [int(c) for c in self.counts], "seed": self.seed,
                "settings": list(self.settings.names), "total_exposure": float(self.total_exposure)}


def sample_counts(rho: DensityOperator, settings: FidelitySettings, total: float, seed: int) -> CountMatrix:
    """Independent Poisson counts with means ``total * p_i``."""
    if total <= 0:
        raise ValueError("expected total must be positive")
    p = np.clip(settings.probabilities(rho), 0.0, None)
    rng = np.random.default_rng(seed)
    return CountMatrix(settings, rng.poisson(total * p), total, seed)


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    std_error: float


def estimate_from_counts(counts: CountMatrix, replicas: int = DEFAULT_REPLICAS,
                         seed: int | None = None) -> FidelityEstimate:
    settings = counts.settings
    value = settings.from_counts(counts.counts)
    mc_seed = (counts.seed if counts.seed is not None else 0) if seed is None else seed
    std = monte_carlo_error(counts.counts, settings.from_counts, replicas, mc_seed)
    return FidelityEstimate(value, std)


def match_exposure(rho: DensityOperator, settings: FidelitySettings, target_std: float,
                   seed: int = 0, pilot: float = 1e5, replicas: int = DEFAULT_REPLICAS) -> float:
    """Exposure N at which the Monte Carlo error is ``target_std``, using 1/sqrt(N) scaling."""
    pilot_std = estimate_from_counts(sample_counts(rho, settings, pilot, seed), replicas).std_error
    return float(pilot * (pilot_std / target_std) ** 2)
