import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oambell.bell import LAB_MODES, pauli_x
from oambell.optics import (
    GATE_KINDS,
    GATE_POWERS,
    PBS,
    SPP,
    BeamSplitter,
    Circuit,
    DovePrism,
    Mirror,
    ParitySorter,
    PhaseShift,
    PhotonSpace,
    Projector,
    RoutingConflictError,
    StructuralError,
    WindowOverflowError,
    apply_chain,
    apply_circuit,
    beam_splitter_recombine,
    build_cyclic_gate,
    circuit_from_json,
    circuit_to_json,
    computational_block,
    dove_prism_operator,
    element_from_dict,
    element_matrix,
    gate_success_probabilities,
    mirror_operator,
    spp_operator,
    verify_equivalence,
)
from oambell.qudit import StateVector

SPACE = PhotonSpace()


def single(ell, path="a", space=SPACE):
    return space.to_state(space.embed({ell: 1.0}, path))


def run(element, ell, path="a"):
    return SPACE.to_state(element.apply(SPACE, SPACE.embed({ell: 1.0}, path)))


def occupied(psi, tol=1e-12):
    return {lab: a for lab, a in zip(psi.labels, psi.amplitudes) if abs(a) > tol}


# --- space ---------------------------------------------------------------

def test_space_requires_computational_window():
    with pytest.raises(ValueError):
        PhotonSpace(("a", "b"), (-1, 3))
    with pytest.raises(ValueError):
        PhotonSpace(("a", "a"))
    assert PhotonSpace(("a", "b"), (-2, 1)).dimension == 8


# --- single elements -----------------------------------------------------

def test_dove_prism_values():
    np.testing.assert_allclose(dove_prism_operator(0.0, LAB_MODES.labels), np.eye(4))
    assert dove_prism_operator(np.pi / 2, [1])[0, 0] == pytest.approx(-1)


def test_dove_prism_quarter_turn_is_z():
    d = np.diag(dove_prism_operator(np.pi / 4, LAB_MODES.labels))
    ratio = d / np.exp(1j * np.pi * np.arange(4) / 2)
    np.testing.assert_allclose(ratio, ratio[0])
    assert ratio[0] == pytest.approx(-1)


def test_spp_examples():
    assert occupied(run(SPP(1), -2)) == {("a", -1): 1}
    assert occupied(run(SPP(2), 0)) == {("a", 2): 1}
    np.testing.assert_allclose(spp_operator(0, LAB_MODES.labels), np.eye(4))


def test_spp_overflow():
    with pytest.raises(WindowOverflowError):
        SPP(2).apply(SPACE, SPACE.embed({3: 1.0}, "a"))


def test_mirror_examples():
    assert occupied(run(Mirror(), 0)) == {("a", 0): 1}
    assert occupied(run(Mirror(), 2)) == {("a", -2): 1}
    m = mirror_operator(SPACE.modes)
    np.testing.assert_allclose(m @ m, np.eye(len(SPACE.modes)))


def test_parity_sorter_examples():
    sorter = ParitySorter()
    assert occupied(run(sorter, 0)) == {("a", 0): 1}
    assert occupied(run(sorter, -1)) == {("b", -1): 1}
    x = SPACE.embed({0: 1 / np.sqrt(2), 1: 1 / np.sqrt(2)}, "a")
    out = occupied(SPACE.to_state(sorter.apply(SPACE, x)))
    assert out == pytest.approx({("a", 0): 1 / np.sqrt(2), ("b", 1): 1 / np.sqrt(2)})


def test_parity_sorter_conflict_and_merge():
    x = SPACE.embed({0: 1.0}, "b")
    with pytest.raises(RoutingConflictError):
        ParitySorter().apply(SPACE, x)
    merged = ParitySorter(merge=True).apply(SPACE, ParitySorter().apply(SPACE, SPACE.embed({1: 1.0}, "a")))
    assert occupied(SPACE.to_state(merged)) == {("a", 1): 1}


def test_parity_sorter_rejects_bad_ports():
    with pytest.raises(ValueError):
        ParitySorter("a", "b", "a")


def test_beam_splitter_single_arm():
    psm = beam_splitter_recombine(SPACE)
    x = SPACE.embed({0: 1.0}, "a").reshape(-1)
    assert psm.success_probability(x) == pytest.approx(0.5)
    kept = psm.operator @ x
    assert np.abs(kept).max() == pytest.approx(1 / np.sqrt(2))


def test_beam_splitter_orthogonal_arms():
    x = (SPACE.embed({0: 0.6}, "a") + SPACE.embed({1: 0.8}, "b")).reshape(-1)
    assert beam_splitter_recombine(SPACE).success_probability(x) == pytest.approx(0.5)


def test_pbs_reflection_flips_sign():
    assert occupied(run(PBS(), 2)) == {("b", -2): 1}
    assert occupied(run(PBS(reflect=False), 2)) == {("a", 2): 1}


def test_projector_is_not_unitary():
    proj = Projector({0: 1 / np.sqrt(2), 1: 1 / np.sqrt(2)})
    x = SPACE.embed({0: 1.0}, "a")
    out = proj.apply(SPACE, x)
    assert np.vdot(out, out).real == pytest.approx(0.5)
    assert out[0, SPACE.mode_index(0)] == pytest.approx(1 / np.sqrt(2))


UNITARIES = [DovePrism(0.3), PhaseShift(1.1, "b"), Mirror(), BeamSplitter(), PBS(),
             ParitySorter(merge=True)]


@pytest.mark.parametrize("element", UNITARIES, ids=lambda e: e.kind)
def test_elements_are_unitary(element):
    m = element_matrix(element, SPACE)
    np.testing.assert_allclose(m.conj().T @ m, np.eye(SPACE.dimension), atol=1e-12)


def test_spp_unitary_on_its_domain():
    domain = [(p, ell) for p in SPACE.paths for ell in range(-4, 3)]
    m = element_matrix(SPP(2, "a"), SPACE, domain)
    np.testing.assert_allclose(m.conj().T @ m, np.eye(len(domain)), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-7, 7), b=st.floats(-7, 7))
def test_dove_prisms_commute(a, b):
    da, db = dove_prism_operator(a, SPACE.modes), dove_prism_operator(b, SPACE.modes)
    np.testing.assert_allclose(da @ db, db @ da, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(amps=st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False),
                     min_size=9, max_size=9))
def test_parity_sorter_conserves_oam(amps):
    x = SPACE.zeros()
    x[0] = amps
    out = ParitySorter().apply(SPACE, x)
    np.testing.assert_allclose(np.abs(out).sum(axis=0), np.abs(x).sum(axis=0), atol=1e-12)


# --- circuits --------------------------------------------------------------

def test_empty_circuit_is_identity():
    psi = single(1)
    out, p = apply_circuit(Circuit(SPACE), psi)
    assert p == pytest.approx(1.0)
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes)


@pytest.mark.parametrize("kind,start,end", [("X", -2, -1), ("X2", 1, -1), ("Xdagger", -2, 1)])
def test_quoted_cycles(kind, start, end):
    out, p = apply_circuit(build_cyclic_gate(kind), single(start))
    assert p == pytest.approx(0.5)
    occ = occupied(out)
    assert list(occ) == [("a", end)]
    assert abs(occ[("a", end)]) == pytest.approx(1.0)


@pytest.mark.parametrize("recombination", ["probabilistic", "deterministic"])
@pytest.mark.parametrize("kind", GATE_KINDS)
def test_gate_matches_pauli_power(kind, recombination):
    c = build_cyclic_gate(kind, recombination=recombination)
    assert verify_equivalence(c, pauli_x(4, GATE_POWERS[kind])) <= 1e-10
    expected = 0.5 if recombination == "probabilistic" else 1.0
    np.testing.assert_allclose(gate_success_probabilities(c), expected, atol=1e-12)


def test_wrong_target_is_detected():
    assert verify_equivalence(build_cyclic_gate("X"), pauli_x(4, 3)) >= 0.5


@pytest.mark.parametrize("kind", GATE_KINDS)
def test_x_cycle_image_of_each_mode(kind):
    c = build_cyclic_gate(kind)
    power = GATE_POWERS[kind]
    for k, ell in enumerate(LAB_MODES.labels):
        out, p = apply_circuit(c, single(ell))
        target = LAB_MODES.oam((k + power) % 4)
        assert p == pytest.approx(0.5, abs=1e-12)
        assert abs(out.amplitude(("a", target))) == pytest.approx(1.0)


def test_non_isometric_circuit_is_structural_failure():
    c = Circuit(SPACE, (Projector({0: 1.0}),), ("a",))
    with pytest.raises(StructuralError):
        verify_equivalence(c, np.eye(4))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(GATE_KINDS))
def test_success_probability_independent_of_input(seed, kind):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    psi = SPACE.to_state(SPACE.embed(dict(zip(LAB_MODES.labels, v)), "a"))
    _, p = apply_circuit(build_cyclic_gate(kind), psi)
    assert p == pytest.approx(0.5, abs=1e-12)


def _comp_vector(psi):
    return np.array([psi.amplitude(("a", ell)) for ell in LAB_MODES.labels])


def test_chained_x_then_xdagger_is_identity():
    rng = np.random.default_rng(4)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    psi = SPACE.to_state(SPACE.embed(dict(zip(LAB_MODES.labels, v)), "a"))
    out, p = apply_chain([build_cyclic_gate("X"), build_cyclic_gate("Xdagger")], psi)
    assert p == pytest.approx(0.25)
    assert abs(np.vdot(v, _comp_vector(out))) == pytest.approx(1.0)
    out4, p4 = apply_chain([build_cyclic_gate("X")] * 4, psi)
    assert p4 == pytest.approx(0.5 ** 4)
    assert abs(np.vdot(v, _comp_vector(out4))) == pytest.approx(1.0)


def test_window_overflow_names_element():
    narrow = PhotonSpace(("a", "b"), (-2, 2))
    assert verify_equivalence(build_cyclic_gate("X", narrow), pauli_x(4, 1)) <= 1e-10
    with pytest.raises(WindowOverflowError, match="SPP"):
        build_cyclic_gate("X2", narrow)
    with pytest.raises(WindowOverflowError):
        build_cyclic_gate("Xdagger", narrow)
    for kind in GATE_KINDS:
        build_cyclic_gate(kind, PhotonSpace(("a", "b"), (-3, 3)))


def test_trim_changes_relative_phase():
    c = build_cyclic_gate("X", trim=(0.0, 0.4))
    block, _ = computational_block(c)
    assert verify_equivalence(c, pauli_x(4, 1)) > 0.1
    np.testing.assert_allclose(np.abs(block), np.abs(pauli_x(4, 1)) / np.sqrt(2), atol=1e-12)


@pytest.mark.parametrize("recombination", ["probabilistic", "deterministic"])
@pytest.mark.parametrize("kind", GATE_KINDS)
def test_json_roundtrip_is_byte_stable(kind, recombination):
    c = build_cyclic_gate(kind, recombination=recombination, trim=(0.1, -0.2))
    text = circuit_to_json(c)
    again = circuit_from_json(text)
    assert again == c
    assert circuit_to_json(again) == text


def test_element_from_dict_roundtrip():
    for el in [*UNITARIES, SPP(-1, "b"), Projector({0: 0.6, 1: 0.8j}, "b")]:
        assert element_from_dict(el.to_dict()) == el
    with pytest.raises(ValueError):
        element_from_dict({"type": "Lens"})


def test_apply_circuit_rejects_foreign_state():
    with pytest.raises(ValueError):
        apply_circuit(Circuit(SPACE), StateVector.basis((0, 1), 0))
