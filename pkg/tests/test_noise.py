import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oambell.bell import LAB_MODES, BellLabel, ModeSpace, bell_state
from oambell.noise import (
    Crosstalk,
    Dephasing,
    NoiseModel,
    apply_noise,
    average_diagonal_fidelity,
    crosstalk_channel,
    dephase_channel,
    fit_crosstalk,
    noisy_state,
    predicted_witness,
    procrustean_filter,
    spiral_amplitudes,
    spiral_state,
)
from oambell.qudit import DensityOperator, NormalizationError, fidelity_pure, random_density, schmidt_decompose
from oambell.source import SourceSpec, source_state

PSI00 = BellLabel(4, 0, 0)
JOINT = LAB_MODES.shape.joint_labels


def closed_form_ceiling(ab, ag, reciprocal=False):
    alpha = 1.0
    beta, gamma = (alpha * ab, alpha * ag) if reciprocal else (alpha / ab, alpha / ag)
    n = np.sqrt(alpha ** 2 + 2 * beta ** 2 + gamma ** 2)
    return ((alpha + 2 * beta + gamma) / (2 * n)) ** 2


# --- source ----------------------------------------------------------------

def test_flat_source_gives_psi00():
    psi, kept = source_state(SourceSpec.flat())
    assert kept == pytest.approx(1.0)
    np.testing.assert_allclose(psi.amplitudes, bell_state(PSI00).amplitudes, atol=1e-15)


def test_without_flip_pairs_are_anticorrelated():
    psi, _ = source_state(SourceSpec({-1: 1.0, 1: 1.0}, pbs_flip=False))
    assert psi.amplitude((1, -1)) == pytest.approx(1 / np.sqrt(2))
    assert psi.amplitude((-1, -1)) == 0


def test_single_mode_source_is_product():
    psi, _ = source_state(SourceSpec({0: 1.0}))
    assert psi.amplitude((0, 0)) == pytest.approx(1.0)
    assert schmidt_decompose(psi, LAB_MODES.shape).rank == 1


def test_truncation_keeps_window_weight():
    c = {ell: np.exp(-abs(ell) / 2) for ell in range(-3, 4)}
    psi, kept = source_state(SourceSpec(c))
    total = sum(v ** 2 for v in c.values())
    assert kept == pytest.approx(sum(c[e] ** 2 for e in range(-2, 2)) / total)
    assert psi.norm2() == pytest.approx(1.0)


def test_empty_window_raises():
    with pytest.raises(NormalizationError):
        source_state(SourceSpec({3: 1.0}))


def test_source_spec_roundtrip():
    spec = SourceSpec({-2: 0.5, 0: 0.3 + 0.1j}, pbs_flip=False)
    assert SourceSpec.from_dict(spec.to_dict()) == spec


# --- spiral spectrum ---------------------------------------------------------

def test_flat_ratios_recover_psi00():
    psi, _ = source_state(spiral_state(1.0, 1.0))
    assert fidelity_pure(DensityOperator.from_pure(psi), bell_state(PSI00)) == pytest.approx(1.0)


@pytest.mark.parametrize("reciprocal", [False, True])
def test_spiral_ceiling(reciprocal):
    psi, _ = source_state(spiral_state(0.69, 0.45, reciprocal))
    f = fidelity_pure(DensityOperator.from_pure(psi), bell_state(PSI00))
    assert f == pytest.approx(closed_form_ceiling(0.69, 0.45, reciprocal), abs=1e-12)
    assert abs(f - 0.93) <= 0.01


def test_spiral_schmidt_coefficients():
    amps = spiral_amplitudes(0.69, 0.45)
    psi, _ = source_state(spiral_state(0.69, 0.45))
    sd = schmidt_decompose(psi, LAB_MODES.shape)
    np.testing.assert_allclose(sd.coefficients, np.sort(amps)[::-1], atol=1e-14)
    gamma, beta, alpha, beta2 = amps
    assert beta == beta2 and alpha / beta == pytest.approx(0.69) and alpha / gamma == pytest.approx(0.45)


def test_spiral_rejects_nonpositive():
    with pytest.raises(ValueError):
        spiral_amplitudes(0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(ab=st.floats(0.05, 20), ag=st.floats(0.05, 20), rec=st.booleans())
def test_spiral_normalized(ab, ag, rec):
    assert np.linalg.norm(spiral_amplitudes(ab, ag, rec)) == pytest.approx(1.0)


# --- channels ------------------------------------------------------------------

def pure(label):
    return DensityOperator.from_pure(bell_state(label))


def test_crosstalk_examples():
    rho = pure(PSI00)
    np.testing.assert_allclose(crosstalk_channel(0.0)(rho).matrix, rho.matrix)
    assert fidelity_pure(crosstalk_channel(0.11)(rho), bell_state(PSI00)) == pytest.approx(0.89)
    leaked = crosstalk_channel(1.0)(rho)
    for n in range(4):
        assert fidelity_pure(leaked, bell_state(BellLabel(4, 0, n))) == pytest.approx(0.0, abs=1e-15)


def test_crosstalk_shift_follows_group():
    lab = BellLabel(4, 2, 1)
    out = crosstalk_channel(1.0, shift=2)(pure(lab))
    assert fidelity_pure(out, bell_state(lab)) == pytest.approx(0.0, abs=1e-15)
    assert fidelity_pure(crosstalk_channel(0.2, 2)(pure(lab)), bell_state(lab)) == pytest.approx(0.8)


def test_dephasing_examples():
    rho = pure(PSI00)
    np.testing.assert_allclose(dephase_channel(1.0)(rho).matrix, rho.matrix)
    assert fidelity_pure(dephase_channel(0.0)(rho), bell_state(PSI00)) == pytest.approx(0.25)
    assert fidelity_pure(dephase_channel(0.97)(rho), bell_state(PSI00)) == pytest.approx(0.9775)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_dephasing_law(d):
    modes = ModeSpace.default(d)
    for v in np.linspace(0, 1, 11):
        for lab in BellLabel.all(d):
            psi = bell_state(lab, modes)
            f = fidelity_pure(dephase_channel(v)(DensityOperator.from_pure(psi)), psi)
            assert abs(f - (1 / d + (1 - 1 / d) * v)) < 1e-12


def test_channel_parameter_bounds():
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            Crosstalk(bad)
        with pytest.raises(ValueError):
            Dephasing(bad)
        with pytest.raises(ValueError):
            NoiseModel(crosstalk=bad)


def test_channels_preserve_density_operators():
    rng = np.random.default_rng(11)
    for i in range(1000):
        rho = random_density(JOINT, rng, rank=1 + i % 16)
        eps, v, shift = rng.uniform(), rng.uniform(), int(rng.integers(4))
        for out in (Crosstalk(eps, shift)(rho), Dephasing(v)(rho)):
            m = out.matrix
            assert abs(np.trace(m).real - 1) < 1e-12
            assert np.abs(m - m.conj().T).max() < 1e-12
            assert np.linalg.eigvalsh(m).min() > -1e-10


def test_order_of_channels():
    for lab in (PSI00, BellLabel(4, 3, 1)):
        a = predicted_witness(NoiseModel.measured(), lab, "crosstalk-first")
        b = predicted_witness(NoiseModel.measured(), lab, "dephase-first")
        assert abs(a - b) < 0.01
    with pytest.raises(ValueError):
        apply_noise(pure(PSI00), NoiseModel(), order="sideways")


# --- composite predictions ----------------------------------------------------------

def test_ideal_model_predicts_one():
    assert predicted_witness(NoiseModel.ideal(), PSI00) == pytest.approx(1.0)


@pytest.mark.parametrize("reciprocal", [False, True])
def test_measured_point_predictions(reciprocal):
    model = NoiseModel.measured(reciprocal)
    assert 0.76 <= predicted_witness(model, PSI00) <= 0.86
    assert abs(average_diagonal_fidelity(model) - 0.78) <= 0.03


def test_composite_closed_form():
    """F = (1 - eps) * [c + v * (s - c)] where c is the diagonal weight and s the pure ceiling."""
    amps = spiral_amplitudes(0.69, 0.45)
    s = (amps.sum() / 2) ** 2
    c = np.sum(amps ** 2 / 4)
    expect = (1 - 0.11) * (c + 0.97 * (s - c))
    assert predicted_witness(NoiseModel.measured(), PSI00) == pytest.approx(expect, abs=1e-12)


def test_witness_monotonic_in_parameters():
    grid = np.linspace(0, 1, 11)
    f_eps = [predicted_witness(NoiseModel(0.69, 0.45, e, 0.97), PSI00) for e in grid]
    f_v = [predicted_witness(NoiseModel(0.69, 0.45, 0.11, v), PSI00) for v in grid]
    assert np.all(np.diff(f_eps) <= 1e-12)
    assert np.all(np.diff(f_v) >= -1e-12)


def test_fit_crosstalk():
    eps = fit_crosstalk(0.91)
    assert eps == pytest.approx(0.09, abs=1e-9)
    assert predicted_witness(NoiseModel(crosstalk=eps), PSI00) == pytest.approx(0.91)
    with pytest.raises(ValueError):
        fit_crosstalk(1.5)


def test_noise_model_roundtrip_and_explicit_amplitudes():
    m = NoiseModel.measured(True)
    assert NoiseModel.from_dict(m.to_dict()) == m
    explicit = NoiseModel(amplitudes=tuple(spiral_amplitudes(0.69, 0.45)))
    assert predicted_witness(explicit, PSI00) == pytest.approx(predicted_witness(NoiseModel(0.69, 0.45), PSI00))


def test_noisy_state_other_dimension():
    assert predicted_witness(NoiseModel(crosstalk=0.2), BellLabel(3, 1, 2)) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        noisy_state(NoiseModel.measured(), BellLabel(3, 0, 0))


# --- procrustean filtering -------------------------------------------------------

def test_filter_flat_is_identity():
    f = procrustean_filter(SourceSpec.flat())
    assert f.success_probability == pytest.approx(1.0)
    np.testing.assert_allclose(list(f.factors.values()), 1.0)


def test_filter_restores_maximal_entanglement():
    spec = spiral_state(0.69, 0.45)
    f = procrustean_filter(spec)
    amps = spiral_amplitudes(0.69, 0.45)
    assert fidelity_pure(DensityOperator.from_pure(f.state), bell_state(PSI00)) == pytest.approx(1.0)
    assert f.success_probability == pytest.approx(4 * np.min(amps ** 2))


def test_filter_two_mode_example():
    modes = ModeSpace(2, 0)
    f = procrustean_filter(SourceSpec({0: 2.0, 1: 1.0}), modes)
    assert f.success_probability == pytest.approx(0.4)


def test_filter_needs_every_mode():
    with pytest.raises(ValueError):
        procrustean_filter(SourceSpec({0: 1.0, 1: 1.0}))
    with pytest.raises(ValueError):
        procrustean_filter(SourceSpec.flat().__class__(SourceSpec.flat().amplitudes, pbs_flip=False))
