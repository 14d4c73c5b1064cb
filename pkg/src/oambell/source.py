"""Down-conversion source: OAM anti-correlated pairs, PBS sign flip, window truncation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bell import LAB_MODES, ModeSpace
from .qudit import NormalizationError, StateVector


@dataclass(frozen=True)
class SourceSpec:
    """Pair amplitudes ``c_ell`` keyed by the OAM of photon B; photon A carries ``-ell``.

    ``pbs_flip`` applies the reflection sign flip ``ell -> -ell`` on photon A.
    """

    amplitudes: tuple[tuple[int, complex], ...]
    pbs_flip: bool = True

    def __post_init__(self):
        items = self.amplitudes.items() if isinstance(self.amplitudes, dict) else self.amplitudes
        object.__setattr__(self, "amplitudes", tuple(sorted((int(l), complex(c)) for l, c in items)))

    @classmethod
    def flat(cls, modes: ModeSpace = LAB_MODES) -> SourceSpec:
        return cls({ell: 1.0 / np.sqrt(modes.dim) for ell in modes.labels})

    def as_dict(self) -> dict[int, complex]:
        return dict(self.amplitudes)

    def to_dict(self) -> dict:
        return {"amplitudes": [[ell, [c.real, c.imag]] for ell, c in self.amplitudes],
                "pbs_flip": self.pbs_flip}

    @classmethod
    def from_dict(cls, d: dict) -> SourceSpec:
        return cls(tuple((ell, complex(re, im)) for ell, (re, im) in d["amplitudes"]), d.get("pbs_flip", True))


def source_state(spec: SourceSpec, modes: ModeSpace = LAB_MODES) -> tuple[StateVector, float]:
    """Two-photon state over ``modes`` x ``modes`` and the retained squared norm.

    The amplitudes are normalized over all listed modes before truncation, so
    the retained norm is the fraction of pairs that fall inside the window.
    """
    amps = spec.as_dict()
    total = sum(abs(c) ** 2 for c in amps.values())
    if total == 0.0:
        raise NormalizationError("source has no amplitude")
    window = set(modes.labels)
    coeffs = np.zeros((modes.dim, modes.dim), dtype=complex)
    for ell_b, c in amps.items():
        ell_a = ell_b if spec.pbs_flip else -ell_b
        if ell_a in window and ell_b in window:
            coeffs[modes.index(ell_a), modes.index(ell_b)] += c / np.sqrt(total)
    retained = float(np.sum(np.abs(coeffs) ** 2))
    if retained <= 1e-300:
        raise NormalizationError("no source amplitude survives truncation to the window")
    return modes.shape.state(coeffs / np.sqrt(retained)), retained
