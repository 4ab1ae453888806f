"""Noisy second-order Trotter evolution.

One step at time ``t_n`` applies, in order,

    exp(-i dt/2 H_Z), noise, exp(-i dt H_X), exp(-i dt H_Y), noise, exp(-i dt/2 H_Z)

with the schedule frozen at ``t_n``. The X and Y groups share system sites, so
this ordered product is first order in dt globally; ``splitting='symmetric'``
replaces the middle by exp(-i dt/2 H_X) exp(-i dt H_Y) exp(-i dt/2 H_X), which
together with midpoint time sampling gives a second-order sweep. Random numbers are consumed per step, then
per insertion point, then per qubit: one uniform per qubit decides whether a
Pauli is inserted, followed by one integer in {0, 1, 2} (X, Y, Z) for every
hit in qubit order. Nothing is drawn when ``p_err == 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ScheduleSpec, SpinModelSpec, schedule_eval, z_diagonal
from .statevec import PAULI, StateVector

PAULI_LABELS = ("X", "Y", "Z")
SPLITTINGS = ("ordered", "symmetric")
_PAULI_MATS = tuple(np.ascontiguousarray(PAULI[p]) for p in PAULI_LABELS)


@dataclass(frozen=True)
class NoiseSpec:
    p_err: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_err <= 1.0:
            raise ValueError(f"p_err must lie in [0, 1], got {self.p_err}")

    def eta_e(self, n_steps: int) -> float:
        """Average number of errors per sweep per spin (two insertion points per step)."""
        return 2 * n_steps * self.p_err

    @classmethod
    def from_eta(cls, eta_e: float, n_steps: int) -> "NoiseSpec":
        return cls(eta_e / (2 * n_steps))


@dataclass(frozen=True)
class SweepSpec:
    """``n_steps`` steps of length ``dtau``; coefficients are frozen at ``times()``.

    ``sampling='start'`` uses t_n = n dtau. ``'midpoint'`` uses (n + 1/2) dtau,
    which makes the whole time-dependent sweep second order in dtau (step-start
    sampling is first order in the schedule discretization).
    """

    n_steps: int
    dtau: float
    schedule: ScheduleSpec
    sampling: str = "start"
    splitting: str = "ordered"

    def __post_init__(self):
        if self.n_steps < 1 or self.dtau <= 0:
            raise ValueError("need n_steps >= 1 and dtau > 0")
        if self.sampling not in ("start", "midpoint"):
            raise ValueError(f"sampling must be 'start' or 'midpoint', got {self.sampling!r}")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}, got {self.splitting!r}")
        if self.times()[-1] > self.schedule.T * (1 + 1e-12):
            raise ValueError("step times run past the end of the schedule")

    @classmethod
    def from_schedule(cls, schedule: ScheduleSpec, n_steps: int, dtau: float | None = None,
                      sampling: str = "start", splitting: str = "ordered") -> "SweepSpec":
        """dtau defaults to T / n_steps so the steps tile [0, T] exactly."""
        return cls(n_steps, schedule.T / n_steps if dtau is None else dtau, schedule, sampling, splitting)

    def times(self) -> np.ndarray:
        offset = 0.5 if self.sampling == "midpoint" else 0.0
        return self.dtau * (np.arange(self.n_steps) + offset)


@dataclass(frozen=True)
class NoiseEvent:
    step: int
    point: int
    qubit: int
    pauli: str


def _rx(theta: float) -> np.ndarray:
    """exp(+i theta X)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]])


def _pair_rotation(theta: float, p: str) -> np.ndarray:
    """exp(-i theta P x P) on two qubits."""
    pp = np.kron(PAULI[p], PAULI[p])
    return np.cos(theta) * np.eye(4) - 1j * np.sin(theta) * pp


def _xx_layers(bonds):
    """Greedy split of XX bonds into layers of site-disjoint bonds (even/odd on a chain)."""
    layers: list[list] = []
    for bond in bonds:
        for layer in layers:
            if all({bond[0], bond[1]}.isdisjoint({b[0], b[1]}) for b in layer):
                layer.append(bond)
                break
        else:
            layers.append([bond])
    return layers


class TrotterEngine:
    """Precomputed, in-place Trotter propagator for one model and step size."""

    def __init__(self, model: SpinModelSpec, dtau: float, splitting: str = "ordered"):
        if splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}, got {splitting!r}")
        self.model = model
        self.dtau = float(dtau)
        self.splitting = splitting
        # X-block duration on each side of the coupler
        x_dt = self.dtau / 2 if splitting == "symmetric" else self.dtau
        n, nb = model.n_system, model.n_bath
        self.n_system = n
        self.n_qubits = model.n_qubits
        self._half_sys = np.exp(-0.5j * self.dtau * z_diagonal(model))
        bits = np.arange(1 << nb)
        pop = np.zeros(bits.size)
        for k in range(nb):
            pop += (bits >> k) & 1
        self._bath_mag = nb - 2.0 * pop  # sum_k sigma^z_k
        self._sys_q = np.array(model.bath_sites, dtype=np.int64)
        self._bath_q = np.array(model.bath_qubits, dtype=np.int64)
        self._free_sites = [i for i in range(n) if not model.bath_mask[i]]
        self._fused = not model.xx_bonds
        self._xx_layers = [
            [(i, j, _pair_rotation(-0.5 * x_dt * c, "X")) for i, j, c in layer]
            for layer in _xx_layers(model.xx_bonds)
        ]
        self._rx_full = [_rx(self.dtau * h) for h in model.x_fields]
        self._rx = [_rx(x_dt * h) for h in model.x_fields]
        self._cache_g = None

    def z_half(self, psi: np.ndarray, B: float) -> None:
        high = np.exp(0.5j * self.dtau * B * self._bath_mag)
        _kernels.apply_split_phase(psi, self.n_system, self._half_sys, high)

    def _site_gates(self, g: float):
        if self._cache_g is not None and self._cache_g[0] == g:
            return self._cache_g[1], self._cache_g[2]
        coupler = _pair_rotation(self.dtau * g, "Y")
        if self.splitting == "symmetric":
            fused = [np.kron(np.eye(2), self._rx[i]) @ coupler @ np.kron(np.eye(2), self._rx[i])
                     for i in self.model.bath_sites]
        else:
            fused = [coupler @ np.kron(np.eye(2), self._rx[i]) for i in self.model.bath_sites]
        fused = np.array(fused)
        fused = fused.reshape(-1, 4, 4)
        fr = np.ascontiguousarray(fused.real)
        fi = np.ascontiguousarray(fused.imag)
        self._cache_g = (g, fr, fi)
        return fr, fi

    def _x_block(self, psi: np.ndarray) -> None:
        for layer in self._xx_layers:
            for i, j, u in layer:
                _kernels.apply_2q(psi, i, j, u)
        for i in range(self.n_system):
            _kernels.apply_1q(psi, i, self._rx[i])
        for layer in reversed(self._xx_layers):
            for i, j, u in layer:
                _kernels.apply_2q(psi, i, j, u)

    def xy(self, psi: np.ndarray, g: float) -> None:
        """exp(-i dt H_Y) exp(-i dt H_X), or the symmetric X/2 Y X/2 variant."""
        if self._fused:
            # x fields on uncoupled sites commute with H_Y
            for i in self._free_sites:
                _kernels.apply_1q(psi, i, self._rx_full[i])
            if self._sys_q.size:
                fr, fi = self._site_gates(g)
                _kernels.apply_site_gates(psi.view(np.float64), self._sys_q, self._bath_q, fr, fi)
            return
        self._x_block(psi)
        coupler = _pair_rotation(self.dtau * g, "Y")
        for s, b in zip(self._sys_q, self._bath_q):
            _kernels.apply_2q(psi, int(s), int(b), coupler)
        if self.splitting == "symmetric":
            self._x_block(psi)

    def noise(self, psi: np.ndarray, p_err: float, rng: np.random.Generator) -> list[tuple[int, str]]:
        if p_err <= 0:
            return []
        hits = np.flatnonzero(rng.random(self.n_qubits) < p_err)
        if hits.size == 0:
            return []
        kinds = rng.integers(0, 3, size=hits.size)
        for q, k in zip(hits, kinds):
            _kernels.apply_1q(psi, int(q), _PAULI_MATS[k])
        return [(int(q), PAULI_LABELS[k]) for q, k in zip(hits, kinds)]

    def step(self, psi: np.ndarray, g: float, B: float, p_err: float, rng, log=None, step_index: int = 0) -> None:
        self.z_half(psi, B)
        first = self.noise(psi, p_err, rng)
        self.xy(psi, g)
        second = self.noise(psi, p_err, rng)
        self.z_half(psi, B)
        if log is not None:
            log.extend(NoiseEvent(step_index, 0, q, p) for q, p in first)
            log.extend(NoiseEvent(step_index, 1, q, p) for q, p in second)


def noise_layer(state: StateVector, n_spins_total: int, p_err: float, rng: np.random.Generator):
    """Independent depolarizing kicks: each qubit gets X, Y or Z with probability p_err."""
    if n_spins_total != state.n_qubits:
        raise ValueError(f"n_spins_total={n_spins_total} but state has {state.n_qubits} qubits")
    out = state.copy()
    if p_err <= 0:
        return out, []
    hits = np.flatnonzero(rng.random(n_spins_total) < p_err)
    kinds = rng.integers(0, 3, size=hits.size) if hits.size else np.zeros(0, dtype=int)
    for q, k in zip(hits, kinds):
        _kernels.apply_1q(out.amplitudes, int(q), _PAULI_MATS[k])
    return out, [(int(q), PAULI_LABELS[k]) for q, k in zip(hits, kinds)]


def trotter_step(
    state: StateVector,
    model: SpinModelSpec,
    schedule: ScheduleSpec,
    t_n: float,
    dtau: float,
    noise: NoiseSpec = NoiseSpec(),
    rng: np.random.Generator | None = None,
    engine: TrotterEngine | None = None,
    splitting: str = "ordered",
) -> StateVector:
    if state.n_qubits != model.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, model needs {model.n_qubits}")
    if noise.p_err > 0 and rng is None:
        raise ValueError("a random generator is required when p_err > 0")
    if engine is None or engine.dtau != dtau or engine.splitting != splitting:
        engine = TrotterEngine(model, dtau, splitting)
    g, B = schedule_eval(schedule, t_n)
    out = state.copy()
    engine.step(out.amplitudes, g, B, noise.p_err, rng)
    return out


def run_sweep(
    state: StateVector,
    model: SpinModelSpec,
    sweep: SweepSpec,
    noise: NoiseSpec = NoiseSpec(),
    rng: np.random.Generator | None = None,
    engine: TrotterEngine | None = None,
) -> tuple[StateVector, list[NoiseEvent]]:
    """N_tau Trotter steps at ``sweep.times()``; returns the final state and the noise log."""
    if state.n_qubits != model.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, model needs {model.n_qubits}")
    if noise.p_err > 0 and rng is None:
        raise ValueError("a random generator is required when p_err > 0")
    if engine is None or engine.dtau != sweep.dtau or engine.splitting != sweep.splitting:
        engine = TrotterEngine(model, sweep.dtau, sweep.splitting)
    out = state.copy()
    psi = out.amplitudes
    log: list[NoiseEvent] = []
    sched = sweep.schedule
    for n, t in enumerate(sweep.times()):
        g, B = schedule_eval(sched, t)
        engine.step(psi, g, B, noise.p_err, rng, log, n)
    return out, log
