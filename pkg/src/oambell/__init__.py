"""Simulation of high-dimensional OAM Bell-state generation with generalized Pauli gates."""

from .bell import (
    LAB_MODES,
    BellLabel,
    ModeSpace,
    Symmetry,
    bell_basis,
    bell_state,
    generate_bell,
    overlap_matrix,
    pauli_x,
    pauli_z,
    symmetry_census,
    symmetry_class,
)
from .experiment import (
    CountMatrix,
    ExperimentConfig,
    coincidence_probability,
    estimate_from_counts,
    fidelity_settings,
    run_experiment,
    sample_counts,
)
from .noise import (
    NoiseModel,
    crosstalk_channel,
    dephase_channel,
    predicted_witness,
    procrustean_filter,
    spiral_state,
)
from .optics import (
    Circuit,
    PhotonSpace,
    apply_circuit,
    build_cyclic_gate,
    verify_equivalence,
)
from .qudit import (
    BipartiteShape,
    DensityOperator,
    StateVector,
    fidelity_pure,
    inner_product,
    project_to_subspace,
    schmidt_decompose,
    tensor_product,
)
from .source import SourceSpec, source_state
from .witness import (
    WitnessResult,
    certify_dimension,
    dense_coding_channel,
    dense_coding_roundtrip,
    monte_carlo_error,
    witness_bound,
)

__version__ = "0.1.0"
