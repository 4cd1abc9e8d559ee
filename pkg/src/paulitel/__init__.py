"""Teleportation-fidelity simulator and operator-size analytics.

Exact Clifford-circuit computation of teleportation fidelities and
operator-size statistics in 0D/1D/2D random unitary circuits, closed-form
large-q fermion and stringy-gravity correlators, and the rigorous
peaked-size bound.
"""

__version__ = "0.1.0"

from .analytics import (
    OverlapDistribution,
    PeakBoundResult,
    SizeDistribution,
    asymptotic_width,
    kpz_extract,
    ksize_pmf,
    overlap_pmf,
    peak_bound,
    peak_bound_vs_gbeta,
    syk_size_pmf,
)
from .backend import get_backend
from .capacity import CapacityResult, CapacitySweepSpec, capacity_sweep, optimize_fidelity
from .circuits import (
    BatchEngine,
    CircuitSpec,
    LayerSchedule,
    OperatorSeed,
    SizeTrace,
    SubsystemSpec,
    build_layout,
    evolve,
    sample_matching,
    scrambling_time_0d,
    size_trace,
)
from .clifford import (
    SymplecticGate2,
    apply_gate,
    enumerate_symplectic2,
    gate_table,
    sample_gate,
)
from .fidelity import (
    CouplingSpec,
    FidelityResult,
    default_blocks,
    epr_fidelity,
    epr_fidelity_encoded,
    epr_to_state_fidelity,
    marginal_fidelity,
    phase,
    state_to_epr_fidelity,
)
from .pauli import (
    PauliString,
    SiteSet,
    k_size,
    multiply,
    overlap,
    random_pauli,
    random_pauli_of_size,
    size,
)
from .syk import (
    NumericalFailure,
    StringyParams,
    SykParams,
    WindingDistribution,
    correlator_finite_T,
    correlator_infinite_T,
    resum_winding,
    solve_lyapunov,
    stringy_correlator,
    syk_size_moments,
    winding_distribution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
