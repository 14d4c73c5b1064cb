"""Single-photon linear optics on a (path ⊗ OAM) space.

A photon state is held as a complex array of shape ``(n_paths, n_modes)``.
Every element acts on that array; elements that shift OAM refuse to push
occupied amplitude outside the window instead of truncating it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import ClassVar, Iterable, Sequence

import numpy as np

from .bell import LAB_MODES, ModeSpace
from .qudit import StateVector

OCCUPIED_TOL = 1e-14
COMPUTATIONAL_WINDOW = (-2, 1)


class WindowOverflowError(ValueError):
    """An element would move occupied amplitude outside the OAM window."""


class RoutingConflictError(ValueError):
    """An element received amplitude on a port it requires to be empty."""


class StructuralError(ValueError):
    """A post-selected circuit does not act as a scaled isometry on the computational modes."""


@dataclass(frozen=True)
class PhotonSpace:
    paths: tuple[str, ...] = ("a", "b")
    oam_window: tuple[int, int] = (-4, 4)

    def __post_init__(self):
        paths = tuple(self.paths)
        lo, hi = (int(v) for v in self.oam_window)
        if len(set(paths)) != len(paths) or not paths:
            raise ValueError(f"path labels must be unique and non-empty: {paths}")
        if lo > hi:
            raise ValueError(f"empty OAM window {lo}..{hi}")
        if lo > COMPUTATIONAL_WINDOW[0] or hi < COMPUTATIONAL_WINDOW[1]:
            raise ValueError(f"OAM window {lo}..{hi} must contain {COMPUTATIONAL_WINDOW[0]}..{COMPUTATIONAL_WINDOW[1]}")
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "oam_window", (lo, hi))

    @property
    def modes(self) -> tuple[int, ...]:
        lo, hi = self.oam_window
        return tuple(range(lo, hi + 1))

    @property
    def labels(self) -> tuple[tuple[str, int], ...]:
        return tuple((p, ell) for p in self.paths for ell in self.modes)

    @property
    def dimension(self) -> int:
        return len(self.paths) * len(self.modes)

    def contains(self, ell: int) -> bool:
        lo, hi = self.oam_window
        return lo <= ell <= hi

    def path_index(self, path: str) -> int:
        try:
            return self.paths.index(path)
        except ValueError:
            raise KeyError(f"unknown path {path!r}; space has {self.paths}") from None

    def mode_index(self, ell: int) -> int:
        if not self.contains(ell):
            raise WindowOverflowError(f"OAM {ell} outside window {self.oam_window}")
        return ell - self.oam_window[0]

    def zeros(self) -> np.ndarray:
        return np.zeros((len(self.paths), len(self.modes)), dtype=complex)

    def embed(self, oam_amplitudes: dict[int, complex], path: str) -> np.ndarray:
        x = self.zeros()
        p = self.path_index(path)
        for ell, a in oam_amplitudes.items():
            x[p, self.mode_index(ell)] = a
        return x

    def to_state(self, x: np.ndarray) -> StateVector:
        return StateVector(self.labels, x.reshape(-1))

    def from_state(self, psi: StateVector) -> np.ndarray:
        if psi.labels != self.labels:
            raise ValueError("state does not live in this photon space")
        return np.array(psi.amplitudes).reshape(len(self.paths), len(self.modes))


def _remap(space: PhotonSpace, row: np.ndarray, fn, element) -> np.ndarray:
    """Move amplitude at mode ell to mode fn(ell)."""
    out = np.zeros_like(row)
    for i, ell in enumerate(space.modes):
        a = row[i]
        if a == 0:
            continue
        target = fn(ell)
        if not space.contains(target):
            if abs(a) > OCCUPIED_TOL:
                raise WindowOverflowError(
                    f"{element.describe()}: OAM {ell} -> {target} leaves window {space.oam_window}")
            continue
        out[space.mode_index(target)] += a
    return out


def _parity_mask(space: PhotonSpace, parity: int) -> np.ndarray:
    return np.array([ell % 2 == parity for ell in space.modes])


class OpticalElement:
    """Base class; subclasses are frozen dataclasses."""

    kind: ClassVar[str] = ""
    unitary: ClassVar[bool] = True

    def referenced_paths(self) -> tuple[str, ...]:
        raise NotImplementedError

    def apply(self, space: PhotonSpace, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reach(self, sets: dict[str, set[int]]) -> dict[str, set[int]]:
        """Conservative set of OAM values each path may carry after this element."""
        return sets

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"type": self.kind, **self.params()}

    def describe(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{self.kind}({args})"


@dataclass(frozen=True)
class DovePrism(OpticalElement):
    """Rotated Dove prism: ``|ell> -> exp(2i ell alpha)|ell>``."""

    alpha: float
    path: str = "a"
    kind: ClassVar[str] = "DovePrism"

    def referenced_paths(self):
        return (self.path,)

    def apply(self, space, x):
        out = x.copy()
        ells = np.array(space.modes)
        out[space.path_index(self.path)] *= np.exp(2j * ells * self.alpha)
        return out

    def params(self):
        return {"alpha": float(self.alpha), "path": self.path}


@dataclass(frozen=True)
class PhaseShift(OpticalElement):
    """Mode-independent phase on one path (interferometer arm trim)."""

    phase: float
    path: str = "a"
    kind: ClassVar[str] = "PhaseShift"

    def referenced_paths(self):
        return (self.path,)

    def apply(self, space, x):
        out = x.copy()
        out[space.path_index(self.path)] *= np.exp(1j * self.phase)
        return out

    def params(self):
        return {"phase": float(self.phase), "path": self.path}


@dataclass(frozen=True)
class SPP(OpticalElement):
    """Spiral phase plate adding ``shift`` OAM quanta."""

    shift: int
    path: str = "a"
    kind: ClassVar[str] = "SPP"

    def referenced_paths(self):
        return (self.path,)

    def apply(self, space, x):
        out = x.copy()
        p = space.path_index(self.path)
        out[p] = _remap(space, x[p], lambda ell: ell + self.shift, self)
        return out

    def reach(self, sets):
        sets = dict(sets)
        sets[self.path] = {ell + self.shift for ell in sets.get(self.path, set())}
        return sets

    def params(self):
        return {"path": self.path, "shift": int(self.shift)}


@dataclass(frozen=True)
class Mirror(OpticalElement):
    """Reflection: ``|ell> -> |-ell>``."""

    path: str = "a"
    kind: ClassVar[str] = "Mirror"

    def referenced_paths(self):
        return (self.path,)

    def apply(self, space, x):
        out = x.copy()
        p = space.path_index(self.path)
        out[p] = _remap(space, x[p], lambda ell: -ell, self)
        return out

    def reach(self, sets):
        sets = dict(sets)
        sets[self.path] = {-ell for ell in sets.get(self.path, set())}
        return sets

    def params(self):
        return {"path": self.path}


@dataclass(frozen=True)
class BeamSplitter(OpticalElement):
    """Symmetric 50/50 splitter: transmission 1/sqrt2, reflection i/sqrt2.

    ``|p> -> (|p> + i|q>)/sqrt2`` and ``|q> -> (i|p> + |q>)/sqrt2``.
    """

    paths: tuple[str, str] = ("a", "b")
    kind: ClassVar[str] = "BeamSplitter"

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))

    def referenced_paths(self):
        return self.paths

    def apply(self, space, x):
        p, q = (space.path_index(s) for s in self.paths)
        out = x.copy()
        out[p] = (x[p] + 1j * x[q]) / np.sqrt(2)
        out[q] = (1j * x[p] + x[q]) / np.sqrt(2)
        return out

    def reach(self, sets):
        sets = dict(sets)
        both = sets.get(self.paths[0], set()) | sets.get(self.paths[1], set())
        sets[self.paths[0]] = set(both)
        sets[self.paths[1]] = set(both)
        return sets

    def params(self):
        return {"paths": list(self.paths)}


@dataclass(frozen=True)
class PBS(OpticalElement):
    """Polarizing beam splitter seen by a photon of fixed polarization.

    With ``reflect`` the photon changes path and its OAM sign flips; otherwise it
    is transmitted unchanged. Polarization itself is not represented.
    """

    path_in: str = "a"
    path_reflected: str = "b"
    reflect: bool = True
    kind: ClassVar[str] = "PBS"

    def referenced_paths(self):
        return (self.path_in, self.path_reflected)

    def apply(self, space, x):
        if not self.reflect:
            return x.copy()
        i, r = space.path_index(self.path_in), space.path_index(self.path_reflected)
        out = x.copy()
        out[r] = _remap(space, x[i], lambda ell: -ell, self)
        out[i] = _remap(space, x[r], lambda ell: -ell, self)
        return out

    def reach(self, sets):
        if not self.reflect:
            return sets
        sets = dict(sets)
        a = sets.get(self.path_in, set())
        b = sets.get(self.path_reflected, set())
        sets[self.path_reflected] = {-ell for ell in a}
        sets[self.path_in] = {-ell for ell in b}
        return sets

    def params(self):
        return {"path_in": self.path_in, "path_reflected": self.path_reflected, "reflect": bool(self.reflect)}


@dataclass(frozen=True)
class ParitySorter(OpticalElement):
    """Sagnac parity sorter: even OAM stays on ``path_even``, odd OAM goes to ``path_odd``.

    The even output port coincides with the input port. As a unitary on the two
    paths this is a parity-controlled path swap, which is its own inverse, so the
    same element with ``merge=True`` recombines an even arm and an odd arm
    deterministically (wrong-parity amplitude exits the other port).
    """

    path_in: str = "a"
    path_even: str = "a"
    path_odd: str = "b"
    merge: bool = False
    kind: ClassVar[str] = "ParitySorter"

    def __post_init__(self):
        if self.path_in != self.path_even:
            raise ValueError("the sorter's even output port is its input port")
        if self.path_even == self.path_odd:
            raise ValueError("even and odd ports must differ")

    def referenced_paths(self):
        return (self.path_even, self.path_odd)

    def apply(self, space, x):
        e, o = space.path_index(self.path_even), space.path_index(self.path_odd)
        if not self.merge and np.abs(x[o]).max(initial=0.0) > OCCUPIED_TOL:
            raise RoutingConflictError(
                f"{self.describe()}: output port {self.path_odd!r} is occupied on input")
        odd = _parity_mask(space, 1)
        out = x.copy()
        out[e] = np.where(odd, x[o], x[e])
        out[o] = np.where(odd, x[e], x[o])
        return out

    def reach(self, sets):
        # parity-blind on purpose: mis-sorted modes must still fit the window
        sets = dict(sets)
        both = sets.get(self.path_even, set()) | sets.get(self.path_odd, set())
        sets[self.path_even] = set(both)
        sets[self.path_odd] = set(both)
        return sets

    def params(self):
        return {"merge": bool(self.merge), "path_even": self.path_even,
                "path_in": self.path_in, "path_odd": self.path_odd}


@dataclass(frozen=True)
class Projector(OpticalElement):
    """SLM + single-mode fibre: project onto ``state`` and leave the photon in ell = 0."""

    state: tuple[tuple[int, complex], ...]
    path: str = "a"
    kind: ClassVar[str] = "Projector"
    unitary: ClassVar[bool] = False

    def __post_init__(self):
        items = self.state.items() if isinstance(self.state, dict) else self.state
        object.__setattr__(self, "state", tuple(sorted((int(l), complex(a)) for l, a in items)))

    def referenced_paths(self):
        return (self.path,)

    def apply(self, space, x):
        p = space.path_index(self.path)
        phi = np.zeros(len(space.modes), dtype=complex)
        for ell, a in self.state:
            phi[space.mode_index(ell)] = a
        out = x.copy()
        out[p] = 0.0
        out[p, space.mode_index(0)] = np.vdot(phi, x[p])
        return out

    def reach(self, sets):
        sets = dict(sets)
        sets[self.path] = {0}
        return sets

    def params(self):
        return {"path": self.path,
                "state": [[ell, [a.real, a.imag]] for ell, a in self.state]}


ELEMENT_TYPES: dict[str, type] = {
    cls.kind: cls for cls in (DovePrism, PhaseShift, SPP, Mirror, BeamSplitter, PBS, ParitySorter, Projector)
}


def element_from_dict(d: dict) -> OpticalElement:
    d = dict(d)
    kind = d.pop("type")
    if kind not in ELEMENT_TYPES:
        raise ValueError(f"unknown element type {kind!r}")
    if kind == "BeamSplitter":
        d["paths"] = tuple(d["paths"])
    if kind == "Projector":
        d["state"] = tuple((ell, complex(re, im)) for ell, (re, im) in d["state"])
    return ELEMENT_TYPES[kind](**d)


def dove_prism_operator(alpha: float, modes: Sequence[int]) -> np.ndarray:
    return np.diag(np.exp(2j * np.asarray(modes) * alpha))


def spp_operator(shift: int, modes: Sequence[int]) -> np.ndarray:
    """Shift matrix on ``modes``; raises if any mode leaves the window."""
    modes = list(modes)
    out = np.zeros((len(modes), len(modes)), dtype=complex)
    for j, ell in enumerate(modes):
        if ell + shift not in modes:
            raise WindowOverflowError(f"SPP({shift:+d}): OAM {ell} -> {ell + shift} leaves window")
        out[modes.index(ell + shift), j] = 1.0
    return out


def mirror_operator(modes: Sequence[int]) -> np.ndarray:
    modes = list(modes)
    out = np.zeros((len(modes), len(modes)), dtype=complex)
    for j, ell in enumerate(modes):
        if -ell not in modes:
            raise WindowOverflowError(f"Mirror: OAM {ell} -> {-ell} leaves window")
        out[modes.index(-ell), j] = 1.0
    return out


def element_matrix(element: OpticalElement, space: PhotonSpace,
                   domain: Iterable[tuple[str, int]] | None = None) -> np.ndarray:
    """Columns are the element's images of the domain basis vectors (default: whole space)."""
    domain = space.labels if domain is None else tuple(domain)
    cols = []
    for path, ell in domain:
        x = space.embed({ell: 1.0}, path)
        cols.append(element.apply(space, x).reshape(-1))
    return np.array(cols).T


@dataclass(frozen=True)
class PostSelectedMap:
    """Linear map followed by keeping only some output labels."""

    operator: np.ndarray
    in_labels: tuple
    out_labels: tuple

    def success_probability(self, x: np.ndarray) -> float:
        y = self.operator @ np.asarray(x)
        return float(np.vdot(y, y).real)

    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.operator, 2))


def beam_splitter_recombine(space: PhotonSpace, path_pair: tuple[str, str] = ("a", "b")) -> PostSelectedMap:
    """50/50 recombination keeping the output port ``path_pair[0]``."""
    bs = BeamSplitter(tuple(path_pair))
    domain = tuple((p, ell) for p in path_pair for ell in space.modes)
    full = element_matrix(bs, space, domain)
    keep = [i for i, (p, _) in enumerate(space.labels) if p == path_pair[0]]
    return PostSelectedMap(full[keep], domain, tuple(space.labels[i] for i in keep))


@dataclass(frozen=True)
class Circuit:
    space: PhotonSpace
    elements: tuple = ()
    postselect: tuple[str, ...] | None = None
    input_path: str = "a"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        post = self.space.paths if self.postselect is None else tuple(self.postselect)
        object.__setattr__(self, "postselect", post)
        for el in self.elements:
            for p in el.referenced_paths():
                self.space.path_index(p)
        for p in (*post, self.input_path):
            self.space.path_index(p)

    def run(self, x: np.ndarray) -> np.ndarray:
        for el in self.elements:
            x = el.apply(self.space, x)
        return x

    def keep_mask(self) -> np.ndarray:
        return np.array([p in self.postselect for p in self.space.paths])

    def reach(self, start: Iterable[int]) -> dict[str, set[int]]:
        """Propagate a set of input modes; raises on the first element that leaves the window."""
        sets: dict[str, set[int]] = {self.input_path: set(start)}
        for el in self.elements:
            sets = el.reach(sets)
            for path, ells in sets.items():
                bad = sorted(e for e in ells if not self.space.contains(e))
                if bad:
                    raise WindowOverflowError(
                        f"{el.describe()} can send OAM {bad} on path {path!r} outside window "
                        f"{self.space.oam_window[0]}..{self.space.oam_window[1]}")
        return sets

    def to_dict(self) -> dict:
        return {
            "elements": [el.to_dict() for el in self.elements],
            "input_path": self.input_path,
            "name": self.name,
            "postselect": list(self.postselect),
            "space": {"oam_window": list(self.space.oam_window), "paths": list(self.space.paths)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> Circuit:
        space = PhotonSpace(tuple(d["space"]["paths"]), tuple(d["space"]["oam_window"]))
        return cls(space, tuple(element_from_dict(e) for e in d["elements"]),
                   tuple(d["postselect"]), d.get("input_path", "a"), d.get("name", ""))


def circuit_to_json(c: Circuit) -> str:
    return json.dumps(c.to_dict(), sort_keys=True, indent=2) + "\n"


def circuit_from_json(text: str) -> Circuit:
    return Circuit.from_dict(json.loads(text))


def apply_circuit(c: Circuit, psi: StateVector) -> tuple[StateVector, float]:
    """Run, post-select onto ``c.postselect`` and renormalize.

    Returns the output state (over the full space, discarded paths zeroed) and
    the success probability. A zero-probability outcome returns the zero vector.
    """
    x = c.run(c.space.from_state(psi))
    x[~c.keep_mask()] = 0.0
    prob = float(np.vdot(x, x).real) / psi.norm2()
    if prob > 0.0:
        x = x / np.sqrt(np.vdot(x, x).real) * np.sqrt(psi.norm2())
    return c.space.to_state(x), prob


def apply_chain(circuits: Sequence[Circuit], psi: StateVector) -> tuple[StateVector, float]:
    prob = 1.0
    for c in circuits:
        psi, p = apply_circuit(c, psi)
        prob *= p
    return psi, prob


def postselected_map(c: Circuit, modes: ModeSpace = LAB_MODES) -> PostSelectedMap:
    """Action of the circuit on ``|input_path, ell>`` for ell in ``modes``, restricted to kept paths."""
    in_labels = tuple((c.input_path, ell) for ell in modes.labels)
    cols = []
    for _, ell in in_labels:
        y = c.run(c.space.embed({ell: 1.0}, c.input_path))
        cols.append(y[c.keep_mask()].reshape(-1))
    out_labels = tuple(lab for lab in c.space.labels if lab[0] in c.postselect)
    return PostSelectedMap(np.array(cols).T, in_labels, out_labels)


def computational_block(c: Circuit, modes: ModeSpace = LAB_MODES,
                        out_path: str | None = None) -> tuple[np.ndarray, float]:
    """Map from input modes to the same modes on ``out_path``; also returns the worst leaked weight."""
    out_path = c.input_path if out_path is None else out_path
    psm = postselected_map(c, modes)
    rows = [psm.out_labels.index((out_path, ell)) for ell in modes.labels]
    block = psm.operator[rows]
    total = np.sum(np.abs(psm.operator) ** 2, axis=0)
    kept = np.sum(np.abs(block) ** 2, axis=0)
    return block, float(np.max(total - kept, initial=0.0))


def _probe_vectors(d: int) -> list[np.ndarray]:
    eye = np.eye(d, dtype=complex)
    probes = list(eye)
    for j in range(d):
        for k in range(j + 1, d):
            probes.append((eye[j] + eye[k]) / np.sqrt(2))
            probes.append((eye[j] + 1j * eye[k]) / np.sqrt(2))
    return probes


def verify_equivalence(c: Circuit, u: np.ndarray, modes: ModeSpace = LAB_MODES,
                       out_path: str | None = None, isometry_tol: float = 1e-8) -> float:
    """Largest probe-state distance between the renormalized circuit action and ``u``.

    One global phase is fitted by maximizing ``|tr(u^† V)|``.
    """
    block, leak = computational_block(c, modes, out_path)
    if leak > isometry_tol:
        raise StructuralError(f"circuit {c.name or '?'} leaks weight {leak:.3g} out of the computational modes")
    gram = block.conj().T @ block
    scale2 = float(np.trace(gram).real) / modes.dim
    if scale2 <= 1e-14:
        raise StructuralError(f"circuit {c.name or '?'} transmits nothing after post-selection")
    if np.abs(gram / scale2 - np.eye(modes.dim)).max() > isometry_tol:
        raise StructuralError(f"circuit {c.name or '?'} is not proportional to an isometry")
    v = block / np.sqrt(scale2)
    tr = np.trace(np.asarray(u).conj().T @ v)
    phase = np.exp(-1j * np.angle(tr)) if abs(tr) > 1e-12 else 1.0
    return max(float(np.linalg.norm((phase * v - u) @ p)) for p in _probe_vectors(modes.dim))


GATE_KINDS = ("X", "X2", "Xdagger")
GATE_POWERS = {"identity": 0, "X": 1, "X2": 2, "Xdagger": 3}


def build_cyclic_gate(kind: str, space: PhotonSpace | None = None, recombination: str = "probabilistic",
                      trim: tuple[float, float] = (0.0, 0.0)) -> Circuit:
    """Interferometric realization of X, X^2 or X^† on the -2..1 OAM window.

    Layouts (photon enters on path ``a``; the sorter sends odd OAM to ``b``):

    * X: SPP(+1) before the sorter, reflection in the even arm.
    * X2: SPP(+2) in the even arm, reflection after recombination.
    * Xdagger: reflection in the even arm, SPP(-1) on both arms before the
      splitter (after the merge for deterministic recombination).

    With the symmetric splitter the arm entering through the reflection port
    picks up ``i``; an aligned interferometer compensates it, which the builder
    encodes as a -pi/2 phase on arm ``b``. ``trim`` adds further per-arm phases
    (arm a, arm b) on top of that alignment.
    """
    if kind not in GATE_KINDS:
        raise ValueError(f"unknown gate kind {kind!r}; expected one of {GATE_KINDS}")
    if recombination not in ("probabilistic", "deterministic"):
        raise ValueError(f"unknown recombination {recombination!r}")
    space = PhotonSpace() if space is None else space
    deterministic = recombination == "deterministic"

    sorter = ParitySorter("a", "a", "b")
    trims: list[OpticalElement] = []
    if trim[0]:
        trims.append(PhaseShift(trim[0], "a"))
    if deterministic:
        if trim[1]:
            trims.append(PhaseShift(trim[1], "b"))
        recombine = [*trims, ParitySorter("a", "a", "b", merge=True)]
    else:
        recombine = [*trims, PhaseShift(-np.pi / 2 + trim[1], "b"), BeamSplitter(("a", "b"))]

    if kind == "X":
        elements = [SPP(1, "a"), sorter, Mirror("a"), *recombine]
    elif kind == "X2":
        elements = [sorter, SPP(2, "a"), *recombine, Mirror("a")]
    elif deterministic:
        elements = [sorter, Mirror("a"), *recombine, SPP(-1, "a")]
    else:
        elements = [sorter, Mirror("a"), SPP(-1, "a"), SPP(-1, "b"), *recombine]

    circuit = Circuit(space, tuple(elements), ("a",), "a", f"{kind}/{recombination}")
    circuit.reach(LAB_MODES.labels)
    return circuit


def gate_success_probabilities(c: Circuit, modes: ModeSpace = LAB_MODES) -> np.ndarray:
    psm = postselected_map(c, modes)
    return np.sum(np.abs(psm.operator) ** 2, axis=0)
