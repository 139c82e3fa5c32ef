"""Simulator and parameter-design toolkit for coupler-mediated W-state
transfer between qubits distributed across cavities."""

from .basis import (
    CompositeBasis,
    DensityMatrix,
    ModeKind,
    ModeSpec,
    SparseOperator,
    StateVector,
    build_basis,
    embed,
    embed_product,
)
from .device import (
    DecoherenceParams,
    DeviceParams,
    EffectiveParams,
    apply_breakage,
    cavity_lifetime,
    check_conditions,
    crosstalk_estimate,
    derive_params,
    effective_params,
    quality_factor,
)
from .analytic import closed_form_state, ideal_target, initial_state, transfer_time, w_state
from .dynamics import (
    LindbladSpec,
    SimResult,
    build_lindblad_spec,
    evolve_closed,
    evolve_lindblad,
    fidelity,
    photon_time_averages,
)
from .hamiltonians import (
    TermSet,
    build_effective,
    build_frame_and_exchange,
    build_full_interaction,
    build_interaction,
    build_unwanted,
    collective_exchange,
)

__version__ = "0.1.0"
