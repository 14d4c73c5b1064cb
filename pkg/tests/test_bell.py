import itertools

import numpy as np
import pytest

from oambell.bell import (
    LAB_MODES,
    BellLabel,
    ContractViolation,
    ModeSpace,
    Symmetry,
    bell_basis,
    bell_coefficients,
    bell_state,
    generate_bell,
    overlap_matrix,
    pauli_x,
    pauli_z,
    swap_subsystems,
    symmetry_census,
    symmetry_class,
)
from oambell.qudit import DensityOperator, apply_local, inner_product


def brute_bell(d, m, n):
    """Direct double loop over (k_a, k_b)."""
    v = np.zeros(d * d, complex)
    for k in range(d):
        v[k * d + (k + m) % d] = np.exp(2j * np.pi * n * k / d) / np.sqrt(d)
    return v


def test_qubit_phi_plus():
    psi = bell_state(BellLabel(2, 0, 0))
    np.testing.assert_allclose(psi.amplitudes, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])


def test_first_state_in_oam_labels():
    psi = bell_state(BellLabel(4, 0, 0), LAB_MODES)
    for ell in range(-2, 2):
        assert psi.amplitude((ell, ell)) == pytest.approx(0.5)
    assert psi.amplitude((-2, -1)) == 0


def test_psi_21_amplitudes():
    c = bell_coefficients(BellLabel(4, 2, 1))
    for k in range(4):
        assert c[k, (k + 2) % 4] == pytest.approx(np.exp(1j * np.pi * k / 2) / 2)
    assert np.count_nonzero(np.abs(c) > 0) == 4


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_matches_brute_force(d):
    for lab in BellLabel.all(d):
        np.testing.assert_allclose(bell_state(lab).amplitudes, brute_bell(d, lab.m, lab.n), atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_orthonormal(d):
    basis = bell_basis(d)
    gram = np.array([[inner_product(a, b) for b in basis] for a in basis])
    assert np.abs(gram - np.eye(d * d)).max() < 1e-12


def test_invalid_labels():
    with pytest.raises(ValueError):
        BellLabel(4, 4, 0)
    with pytest.raises(ValueError):
        BellLabel(1, 0, 0)
    with pytest.raises(ValueError):
        bell_state(BellLabel(3, 0, 0), LAB_MODES)


def test_message_roundtrip():
    for msg in range(16):
        assert BellLabel.from_message(4, msg).message == msg
    assert str(BellLabel(4, 3, 2)) == "psi_32"


def test_default_mode_window():
    assert LAB_MODES.labels == (-2, -1, 0, 1)
    assert ModeSpace.default(4) == LAB_MODES
    assert LAB_MODES.oam(3) == 1 and LAB_MODES.index(-2) == 0


def test_pauli_x_cycle():
    x = pauli_x(4, 1)
    out = x @ np.eye(4)[3]
    np.testing.assert_array_equal(out, np.eye(4)[0])
    for k, nxt in [(0, 1), (1, 2), (2, 3), (3, 0)]:
        assert (x @ np.eye(4)[k])[nxt] == 1
    np.testing.assert_allclose(pauli_x(4, 4), np.eye(4))


def test_pauli_z_values():
    assert pauli_z(4, 1)[1, 1] == pytest.approx(1j)
    np.testing.assert_allclose(np.diag(pauli_z(4, 2)), [1, -1, 1, -1], atol=1e-15)
    np.testing.assert_allclose(pauli_z(4, 0), np.eye(4))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7])
def test_weyl_relations(d):
    x, z = pauli_x(d), pauli_z(d)
    w = np.exp(2j * np.pi / d)
    np.testing.assert_allclose(z @ x, w * x @ z, atol=1e-12)
    np.testing.assert_allclose(np.linalg.matrix_power(x, d), np.eye(d), atol=1e-12)
    np.testing.assert_allclose(np.linalg.matrix_power(z, d), np.eye(d), atol=1e-12)
    for p in range(d):
        for op in (pauli_x(d, p), pauli_z(d, p)):
            np.testing.assert_allclose(op @ op.conj().T, np.eye(d), atol=1e-12)


def test_generate_bell_examples():
    seed = bell_state(BellLabel(4, 0, 0))
    np.testing.assert_allclose(generate_bell(seed, BellLabel(4, 0, 0)).amplitudes, seed.amplitudes)
    psi10 = generate_bell(seed, BellLabel(4, 1, 0))
    for k in range(4):
        assert psi10.amplitude((k - 2, (k + 1) % 4 - 2)) == pytest.approx(0.5)
    for lab in BellLabel.all(4):
        assert abs(inner_product(bell_state(lab), generate_bell(seed, lab))) >= 1 - 1e-10


def test_generate_bell_rejects_other_seed():
    with pytest.raises(ContractViolation):
        generate_bell(bell_state(BellLabel(4, 1, 0)), BellLabel(4, 2, 2))


def test_overlap_matrix_identity():
    basis = bell_basis(4)
    np.testing.assert_allclose(overlap_matrix(basis, basis), np.eye(16), atol=1e-15)
    group = [bell_state(BellLabel(4, 0, n)) for n in range(4)]
    np.testing.assert_allclose(overlap_matrix(group, group), np.eye(4), atol=1e-15)
    rhos = [DensityOperator.from_pure(b) for b in group]
    np.testing.assert_allclose(overlap_matrix(rhos, group), np.eye(4), atol=1e-14)


def test_symmetry_examples():
    assert symmetry_class(BellLabel(4, 0, 0)) is Symmetry.SYMMETRIC
    assert symmetry_class(BellLabel(2, 1, 1)) is Symmetry.ANTISYMMETRIC
    assert symmetry_census(4) == {"symmetric": 6, "antisymmetric": 2, "neither": 8}


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_census_against_exchange_operator(d):
    """Brute-force SWAP matrix on the product basis."""
    swap = np.zeros((d * d, d * d))
    for a, b in itertools.product(range(d), repeat=2):
        swap[b * d + a, a * d + b] = 1
    counts = {"symmetric": 0, "antisymmetric": 0, "neither": 0}
    for lab in BellLabel.all(d):
        v = brute_bell(d, lab.m, lab.n)
        ov = np.vdot(v, swap @ v)
        key = "symmetric" if abs(ov - 1) < 1e-12 else "antisymmetric" if abs(ov + 1) < 1e-12 else "neither"
        counts[key] += 1
        assert symmetry_class(lab).value == key
    assert symmetry_census(d) == counts


def test_swap_is_involution():
    psi = bell_state(BellLabel(4, 1, 3))
    twice = swap_subsystems(swap_subsystems(psi, LAB_MODES.shape), LAB_MODES.shape)
    np.testing.assert_allclose(twice.amplitudes, psi.amplitudes)


def test_local_action_stays_in_basis():
    """Every X^a Z^b on B maps a Bell state onto another Bell state (up to phase)."""
    basis = bell_basis(4)
    for lab in BellLabel.all(4):
        for a, b in itertools.product(range(4), repeat=2):
            out = apply_local(bell_state(lab), LAB_MODES.shape, None, pauli_x(4, a) @ pauli_z(4, b))
            ovs = sorted(abs(inner_product(t, out)) for t in basis)
            assert ovs[-1] == pytest.approx(1.0) and ovs[-2] < 1e-12
