"""Cooling cycles, trajectories and seeded ensembles.

A cycle is: one sweep, projective measurement of every bath qubit, bookkeeping,
then reset of the bath to all-up. Observables are recorded on the reset state.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .evolve import NoiseSpec, SweepSpec, TrotterEngine, run_sweep
from .model import SpectralData, SpinModelSpec, exact_spectrum
from .observables import bond_correlators_from_probs
from .statevec import StateVector

WORKERS_ENV = "DEMAG_WORKERS"


@dataclass
class CycleRecord:
    cycle_index: int
    bath_outcomes: str  # one char per bath qubit in qubit order, '1' = flipped (down)
    n_flips: int
    energy: float
    energy_above_gs: float
    energy_density: float  # (E - E_0) / |E_0|
    fidelity: float
    bond_correlators: tuple[float, ...]
    noise_insertions: int


@dataclass
class TrajectoryRecord:
    seed: int
    cycles: list[CycleRecord]
    stopped_at: int | None = None
    final_occupations: np.ndarray | None = None
    mean_occupations: np.ndarray | None = None


@dataclass(frozen=True)
class ProtocolConfig:
    model: SpinModelSpec
    sweep: SweepSpec
    noise: NoiseSpec = NoiseSpec()
    n_cycles: int = 100
    stopping_rule: bool = True
    stop_k: int = 5
    halt_on_stop: bool = False
    initial_state: str = "basis"  # 'basis' | 'product'
    occupation_window: int = 0  # average occupations over the last this-many cycles

    def __post_init__(self):
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")
        if self.stop_k < 1:
            raise ValueError("stop_k must be >= 1")
        if self.initial_state not in ("basis", "product"):
            raise ValueError(f"unknown initial_state {self.initial_state!r}")


def trajectory_seed(base_seed: int, index: int) -> int:
    """64-bit seed of trajectory ``index``: SeedSequence([base_seed, index]) -> two uint32 words."""
    lo, hi = np.random.SeedSequence([int(base_seed), int(index)]).generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def initial_state(model: SpinModelSpec, kind: str, rng: np.random.Generator) -> StateVector:
    """Random system state (basis state or product of random qubits) with the bath all-up."""
    n = model.n_system
    amps = np.zeros(1 << model.n_qubits, dtype=np.complex128)
    if kind == "basis":
        amps[int(rng.integers(0, 1 << n))] = 1.0
    else:
        phi = np.ones(1, dtype=np.complex128)
        for _ in range(n):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            phi = np.kron(v / np.linalg.norm(v), phi)
        amps[: 1 << n] = phi
    return StateVector(model.n_qubits, amps)


def measure_and_reset_bath(state: StateVector, model: SpinModelSpec, rng: np.random.Generator):
    """Projective measurement of all bath qubits followed by reset to all-up.

    The joint outcome is drawn from the bath marginal with a single uniform (same
    distribution as measuring the bath qubits one after another). Returns the
    outcome index (bit k = bath qubit k) and the new state; the state is updated in place.
    """
    m = state.amplitudes.reshape(1 << model.n_bath, 1 << model.n_system)
    probs = np.einsum("ij,ij->i", m.real, m.real) + np.einsum("ij,ij->i", m.imag, m.imag)
    cum = np.cumsum(probs)
    u = rng.random() * cum[-1]
    outcome = int(min(np.searchsorted(cum, u, side="right"), probs.size - 1))
    while probs[outcome] <= 0.0:
        outcome -= 1
    p = probs[outcome]
    if p < 1e-14:
        raise RuntimeError("bath measurement landed on a vanishing branch")
    phi = m[outcome] / np.sqrt(p)
    m[:] = 0.0
    m[0] = phi
    state.amplitudes /= np.sqrt(np.sum(np.abs(phi) ** 2))
    return outcome, state


class CycleRunner:
    """Holds the per-model precomputation shared by all cycles of a trajectory."""

    def __init__(self, model: SpinModelSpec, sweep: SweepSpec, spectral: SpectralData):
        self.model = model
        self.sweep = sweep
        self.spectral = spectral
        self.engine = TrotterEngine(model, sweep.dtau, sweep.splitting)
        self.e0 = spectral.ground_energy

    def observe(self, phi: np.ndarray):
        c = self.spectral.eigenvectors.T @ phi
        occ = np.abs(c) ** 2
        energy = float(np.dot(occ, self.spectral.eigenvalues))
        fid = float(np.sum(occ[: self.spectral.ground_multiplicity]))
        corr = bond_correlators_from_probs(np.abs(phi) ** 2, self.model)
        return energy, min(max(fid, 0.0), 1.0), corr, occ

    def run_cycle(self, state: StateVector, noise: NoiseSpec, rng, cycle_index: int = 0):
        state, log = run_sweep(state, self.model, self.sweep, noise, rng, self.engine)
        outcome, state = measure_and_reset_bath(state, self.model, rng)
        bits = "".join(str((outcome >> k) & 1) for k in range(self.model.n_bath))
        phi = state.amplitudes[: 1 << self.model.n_system]
        energy, fid, corr, occ = self.observe(phi)
        rec = CycleRecord(
            cycle_index=cycle_index,
            bath_outcomes=bits,
            n_flips=bits.count("1"),
            energy=energy,
            energy_above_gs=energy - self.e0,
            energy_density=(energy - self.e0) / abs(self.e0),
            fidelity=fid,
            bond_correlators=tuple(float(x) for x in corr),
            noise_insertions=len(log),
        )
        return state, rec, occ


def run_cycle(state, model, sweep, noise, spectral, rng, runner: CycleRunner | None = None):
    runner = runner or CycleRunner(model, sweep, spectral)
    state, rec, _ = runner.run_cycle(state, noise, rng)
    return state, rec


def stopping_rule(records, k: int = 5) -> bool:
    """True iff the last ``k`` records all have no flipped bath spin."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(records) < k:
        return False
    return all(r.n_flips == 0 for r in records[-k:])


def run_trajectory(config: ProtocolConfig, seed: int, spectral: SpectralData | None = None,
                   runner: CycleRunner | None = None) -> TrajectoryRecord:
    if config.n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    spectral = spectral or exact_spectrum(config.model)
    runner = runner or CycleRunner(config.model, config.sweep, spectral)
    rng = np.random.default_rng(seed)
    state = initial_state(config.model, config.initial_state, rng)
    cycles: list[CycleRecord] = []
    stopped_at = None
    occ = None
    occ_sum = None
    window_start = config.n_cycles - config.occupation_window
    for c in range(config.n_cycles):
        state, rec, occ = runner.run_cycle(state, config.noise, rng, c)
        cycles.append(rec)
        if config.occupation_window and c >= window_start:
            occ_sum = occ.copy() if occ_sum is None else occ_sum + occ
        if config.stopping_rule and stopped_at is None and stopping_rule(cycles, config.stop_k):
            stopped_at = c
            if config.halt_on_stop:
                break
    mean_occ = occ_sum / config.occupation_window if occ_sum is not None else None
    return TrajectoryRecord(seed, cycles, stopped_at, occ, mean_occ)


@dataclass
class EnsembleSummary:
    n_trajectories: int
    seeds: list[int]
    cycle_index: np.ndarray
    mean_energy_above_gs: np.ndarray
    median_energy_above_gs: np.ndarray
    mean_energy_density: np.ndarray
    median_fidelity: np.ndarray
    mean_fidelity: np.ndarray
    mean_flips: np.ndarray
    mean_bond_correlators: np.ndarray
    window: tuple[int, int]
    steady_energy_density: np.ndarray  # per trajectory, window mean
    steady_energy_above_gs: np.ndarray
    postselected_energy_density: np.ndarray  # per stopped trajectory, at stop
    stopped_at: list
    mean_occupations: np.ndarray | None = None
    trajectories: list = field(default_factory=list, repr=False)

    @property
    def steady_e(self) -> float:
        return float(np.mean(self.steady_energy_density))

    @property
    def postselected_e(self) -> float:
        if self.postselected_energy_density.size == 0:
            return float("nan")
        return float(np.mean(self.postselected_energy_density))


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    return max(1, int(raw)) if raw else (os.cpu_count() or 1)


def _run_one(args):
    config, seed, spectral = args
    return run_trajectory(config, seed, spectral)


def summarize(trajs: list[TrajectoryRecord], window: tuple[int, int] | None = None) -> EnsembleSummary:
    n_c = min(len(t.cycles) for t in trajs)
    if window is None:
        window = (n_c // 2, n_c)
    lo, hi = window
    arr = lambda attr: np.array([[getattr(c, attr) for c in t.cycles[:n_c]] for t in trajs], dtype=float)
    de = arr("energy_above_gs")
    e = arr("energy_density")
    fid = arr("fidelity")
    flips = arr("n_flips")
    corr = np.array([[c.bond_correlators for c in t.cycles[:n_c]] for t in trajs], dtype=float)
    post = np.array([t.cycles[t.stopped_at].energy_density for t in trajs if t.stopped_at is not None])
    occs = [t.mean_occupations for t in trajs if t.mean_occupations is not None]
    return EnsembleSummary(
        n_trajectories=len(trajs),
        seeds=[t.seed for t in trajs],
        cycle_index=np.arange(n_c),
        mean_energy_above_gs=de.mean(axis=0),
        median_energy_above_gs=np.median(de, axis=0),
        mean_energy_density=e.mean(axis=0),
        median_fidelity=np.median(fid, axis=0),
        mean_fidelity=fid.mean(axis=0),
        mean_flips=flips.mean(axis=0),
        mean_bond_correlators=corr.mean(axis=0),
        window=(lo, hi),
        steady_energy_density=e[:, lo:hi].mean(axis=1),
        steady_energy_above_gs=de[:, lo:hi].mean(axis=1),
        postselected_energy_density=post,
        stopped_at=[t.stopped_at for t in trajs],
        mean_occupations=np.mean(occs, axis=0) if occs else None,
        trajectories=trajs,
    )


def run_ensemble(config: ProtocolConfig, n_init: int, base_seed: int, window: tuple[int, int] | None = None,
                 spectral: SpectralData | None = None, workers: int | None = None) -> EnsembleSummary:
    """``n_init`` trajectories with seeds ``trajectory_seed(base_seed, i)``, merged in index order."""
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    spectral = spectral or exact_spectrum(config.model)
    seeds = [trajectory_seed(base_seed, i) for i in range(n_init)]
    workers = workers or _worker_count()
    if workers > 1 and n_init > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(_run_one, [(config, s, spectral) for s in seeds]))
    else:
        runner = CycleRunner(config.model, config.sweep, spectral)
        trajs = [run_trajectory(config, s, spectral, runner) for s in seeds]
    return summarize(trajs, window)
