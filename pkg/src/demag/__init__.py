"""Bath-assisted cooling of Ising chains: statevector simulator, observables and theory."""

from .config import ConfigError, RunConfig, parse_config, preset
from .evolve import NoiseSpec, SweepSpec, TrotterEngine, noise_layer, run_sweep, trotter_step
from .model import (
    ScheduleSpec,
    SpectralData,
    SpinModelSpec,
    assemble_full_hamiltonian_terms,
    build_ising,
    exact_spectrum,
    free_fermion_spectrum,
    schedule_eval,
)
from .observables import (
    bond_correlators,
    domain_wall_number,
    eigenstate_occupations,
    energy_expectation,
    fidelity_to_ground_space,
    local_susceptibility,
)
from .protocol import (
    CycleRecord,
    EnsembleSummary,
    ProtocolConfig,
    TrajectoryRecord,
    run_cycle,
    run_ensemble,
    run_trajectory,
    stopping_rule,
)
from .statevec import StateVector, apply_diagonal_phase, apply_local_unitary, basis_state, measure_qubit
from .theory import (
    ConvergenceError,
    RampSpec,
    RateModelSpec,
    cooling_rate_pt,
    delta_c,
    delta_s,
    kz_comparison,
    kz_defect_density,
    rate_evolve,
    rate_finite_size,
    rate_steady_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
