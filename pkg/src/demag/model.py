"""Ising chain + bath Hamiltonians, sweep schedules and exact spectra.

Spin operators are Pauli matrices (eigenvalues +-1). The system Hamiltonian is

    H_s = -sum_b J_b z_i z_j - sum_b Jx_b x_i x_j - sum_i (hx_i x_i + hz_i z_i)

and the full generator adds, for each site carrying a bath spin,
``g(t) y_i sigma^y_i - B(t) sigma^z_i``.

Register layout: system spin ``i`` is qubit ``i``; the bath spin attached to
the ``k``-th masked site is qubit ``n_system + k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DENSE_CAP = 14
DEGENERACY_TOL = 1e-8
# a Z2 doublet counts as the ground manifold when its splitting is below this
# fraction of the distance to the next level
DOUBLET_RATIO = 0.25


class ModelError(ValueError):
    """Invalid model or schedule input."""


@dataclass(frozen=True)
class SpinModelSpec:
    n_system: int
    boundary: str
    zz_bonds: tuple[tuple[int, int, float], ...]
    x_fields: tuple[float, ...]
    z_fields: tuple[float, ...]
    xx_bonds: tuple[tuple[int, int, float], ...] = ()
    bath_mask: tuple[bool, ...] | None = None
    trap: tuple[int, float] | None = None

    def __post_init__(self):
        if self.boundary not in ("periodic", "open"):
            raise ModelError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        n = self.n_system
        if n < 1:
            raise ModelError("n_system must be >= 1")
        mask = self.bath_mask
        if mask is None:
            mask = (True,) * n
        mask = tuple(bool(m) for m in mask)
        if len(mask) != n:
            raise ModelError(f"bath_mask has {len(mask)} entries, expected {n}")
        object.__setattr__(self, "bath_mask", mask)
        if len(self.x_fields) != n or len(self.z_fields) != n:
            raise ModelError("x_fields and z_fields need one entry per site")
        for i, j, _ in self.zz_bonds + self.xx_bonds:
            if not (0 <= i < n and 0 <= j < n):
                raise ModelError(f"bond ({i}, {j}) out of range")

    @property
    def bath_sites(self) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.bath_mask) if m)

    @property
    def n_bath(self) -> int:
        return sum(self.bath_mask)

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_bath

    @property
    def bath_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_system, self.n_qubits))

    @property
    def z2_symmetric(self) -> bool:
        """True when prod_i x_i commutes with H_s (no longitudinal field)."""
        return all(h == 0 for h in self.z_fields)


def chain_bonds(n: int, boundary: str) -> list[tuple[int, int]]:
    if boundary == "periodic":
        return [(i, (i + 1) % n) for i in range(n)]
    return [(i, i + 1) for i in range(n - 1)]


def build_ising(
    n_system: int,
    J: float = 1.0,
    h_x: float = 0.0,
    h_z: float = 0.0,
    J_x: float = 0.0,
    boundary: str = "periodic",
    trap: tuple[int, float] | None = None,
    bath_mask: Sequence[bool] | None = None,
) -> SpinModelSpec:
    """Uniform Ising chain; ``trap=(bond, J_trap)`` weakens one ZZ bond."""
    if boundary == "periodic" and n_system < 2:
        raise ModelError("periodic chains need n_system >= 2")
    for name, val in (("J", J), ("h_x", h_x), ("h_z", h_z), ("J_x", J_x)):
        if not np.isfinite(val):
            raise ModelError(f"{name} must be finite")
    bonds = chain_bonds(n_system, boundary)
    couplings = [float(J)] * len(bonds)
    if trap is not None:
        b, j_trap = trap
        if not 0 <= b < len(bonds):
            raise ModelError(f"trap bond {b} out of range (0..{len(bonds) - 1})")
        couplings[b] = float(j_trap)
        trap = (int(b), float(j_trap))
    zz = tuple((i, j, c) for (i, j), c in zip(bonds, couplings))
    xx = tuple((i, j, float(J_x)) for i, j in bonds) if J_x != 0 else ()
    return SpinModelSpec(
        n_system=n_system,
        boundary=boundary,
        zz_bonds=zz,
        x_fields=(float(h_x),) * n_system,
        z_fields=(float(h_z),) * n_system,
        xx_bonds=xx,
        bath_mask=tuple(bath_mask) if bath_mask is not None else None,
        trap=trap,
    )


@dataclass(frozen=True)
class ScheduleSpec:
    """g(t): 0 -> g_0 on [0, t_1], flat to t_2, -> 0 at T.  B(t): B_i -> B_f on [0, t_2], then flat."""

    T: float
    g_0: float
    B_i: float
    B_f: float
    t_1: float | None = None
    t_2: float | None = None

    def __post_init__(self):
        if self.t_1 is None:
            object.__setattr__(self, "t_1", self.T / 4)
        if self.t_2 is None:
            object.__setattr__(self, "t_2", 3 * self.T / 4)
        if not 0 < self.t_1 < self.t_2 < self.T:
            raise ModelError(f"need 0 < t_1 < t_2 < T, got {self.t_1}, {self.t_2}, {self.T}")

    @property
    def sweep_rate(self) -> float:
        return (self.B_i - self.B_f) / self.t_2

    def g(self, t):
        t = np.asarray(t, dtype=float)
        up = self.g_0 * t / self.t_1
        down = self.g_0 * (self.T - t) / (self.T - self.t_2)
        return np.where(t < self.t_1, up, np.where(t <= self.t_2, self.g_0, down))

    def B(self, t):
        t = np.asarray(t, dtype=float)
        ramp = self.B_i + (self.B_f - self.B_i) * t / self.t_2
        return np.where(t <= self.t_2, ramp, self.B_f)


def schedule_eval(s: ScheduleSpec, t: float) -> tuple[float, float]:
    slack = 1e-12 * s.T
    if not -slack <= t <= s.T + slack:
        raise ModelError(f"t={t} outside [0, {s.T}]")
    t = min(max(t, 0.0), s.T)
    return float(s.g(t)), float(s.B(t))


@dataclass(frozen=True)
class Term:
    """coeff * prod of Paulis; ``ops`` is a tuple of (qubit, 'X'|'Y'|'Z')."""

    ops: tuple[tuple[int, str], ...]
    coeff: float


@dataclass(frozen=True)
class TermGroups:
    X: tuple[Term, ...]
    Y: tuple[Term, ...]
    Z: tuple[Term, ...]

    def all_terms(self) -> tuple[Term, ...]:
        return self.X + self.Y + self.Z


def system_terms(model: SpinModelSpec) -> list[Term]:
    terms = [Term(((i, "Z"), (j, "Z")), -c) for i, j, c in model.zz_bonds]
    terms += [Term(((i, "Z"),), -h) for i, h in enumerate(model.z_fields) if h != 0]
    terms += [Term(((i, "X"),), -h) for i, h in enumerate(model.x_fields) if h != 0]
    terms += [Term(((i, "X"), (j, "X")), -c) for i, j, c in model.xx_bonds]
    return terms


def assemble_full_hamiltonian_terms(model: SpinModelSpec, g: float, B: float) -> TermGroups:
    xs, zs = [], []
    for t in system_terms(model):
        (xs if t.ops[0][1] == "X" else zs).append(t)
    ys = []
    for site, q in zip(model.bath_sites, model.bath_qubits):
        zs.append(Term(((q, "Z"),), -B))
        if g != 0:
            ys.append(Term(((site, "Y"), (q, "Y")), g))
    return TermGroups(tuple(xs), tuple(ys), tuple(zs))


_P = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def term_matrix(term: Term, n_qubits: int) -> np.ndarray:
    """Dense matrix of one term (little-endian: qubit 0 is the rightmost factor)."""
    ops = dict(term.ops)
    out = np.eye(1, dtype=complex)
    for q in reversed(range(n_qubits)):
        out = np.kron(out, _P[ops[q]] if q in ops else np.eye(2))
    return term.coeff * out


def dense_matrix(terms: Sequence[Term], n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    h = np.zeros((dim, dim), dtype=complex)
    for t in terms:
        h += term_matrix(t, n_qubits)
    return h


def z_diagonal(model: SpinModelSpec) -> np.ndarray:
    """Diagonal (Z and ZZ) part of H_s over the 2^N system basis."""
    idx = np.arange(1 << model.n_system)
    z = lambda i: 1.0 - 2.0 * ((idx >> i) & 1)
    d = np.zeros(idx.size)
    for i, j, c in model.zz_bonds:
        d -= c * z(i) * z(j)
    for i, h in enumerate(model.z_fields):
        if h != 0:
            d -= h * z(i)
    return d


def system_hamiltonian(model: SpinModelSpec) -> np.ndarray:
    """Real dense H_s on the system register."""
    n = model.n_system
    if n > DENSE_CAP:
        raise ModelError(f"dense H_s refused: n_system={n} exceeds cap {DENSE_CAP}")
    dim = 1 << n
    idx = np.arange(dim)
    h = np.zeros((dim, dim))
    h[idx, idx] = z_diagonal(model)
    for i, hx in enumerate(model.x_fields):
        if hx != 0:
            h[idx ^ (1 << i), idx] -= hx
    for i, j, c in model.xx_bonds:
        h[idx ^ (1 << i) ^ (1 << j), idx] -= c
    return h


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ground_multiplicity: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[self.ground_multiplicity] - self.eigenvalues[0])

    @property
    def ground_space(self) -> np.ndarray:
        return self.eigenvectors[:, : self.ground_multiplicity]


def _ground_multiplicity(model: SpinModelSpec, evals: np.ndarray, tol: float) -> int:
    m = int(np.sum(evals - evals[0] <= tol))
    if m == 1 and model.z2_symmetric and evals.size > 2:
        split = evals[1] - evals[0]
        if split < DOUBLET_RATIO * (evals[2] - evals[1]):
            m = 2
    return min(m, evals.size - 1) if evals.size > 1 else 1


def exact_spectrum(model: SpinModelSpec, cap: int = DENSE_CAP, degeneracy_tol: float = DEGENERACY_TOL) -> SpectralData:
    """Full diagonalization of H_s (system register only).

    The ground multiplet holds all levels within ``degeneracy_tol`` of E_0. For
    Z2-symmetric models it is widened to the lowest two levels when they form an
    isolated finite-size doublet (ordered phase); the gap is measured above it.
    """
    if model.n_system > cap:
        raise ModelError(
            f"exact_spectrum refused: n_system={model.n_system} exceeds dense cap {cap} "
            f"({1 << model.n_system}x{1 << model.n_system} matrix)"
        )
    evals, evecs = np.linalg.eigh(system_hamiltonian(model))
    return SpectralData(evals, evecs, _ground_multiplicity(model, evals, degeneracy_tol))


def _check_free_fermion(J, h_x, N, boundary):
    if N < 1 or (boundary == "periodic" and N < 2):
        raise ModelError("need N >= 2 for a periodic chain")
    if boundary not in ("periodic", "open"):
        raise ModelError(f"unknown boundary {boundary!r}")


def dispersion(J: float, h_x: float, k) -> np.ndarray:
    """eps_k = 2 sqrt(J^2 + h^2 - 2 J h cos k), written symmetrically in (J, h)."""
    k = np.asarray(k, dtype=float)
    return 2.0 * np.sqrt(np.maximum(J * J + h_x * h_x - 2.0 * (J * h_x) * np.cos(k), 0.0))


def _sector_modes(J, h_x, N, parity):
    """Signed mode energies in one fermion-parity sector of the periodic chain.

    parity=+1 (even fermion number) uses antiperiodic momenta, parity=-1 periodic
    momenta. Unpaired modes k=0 and k=pi carry signed energies 2(h -+ J).
    """
    if parity == 1:
        ks = np.pi * (2 * np.arange(N) + 1) / N
    else:
        ks = 2 * np.pi * np.arange(N) / N
    ks = np.mod(ks, 2 * np.pi)
    eps = dispersion(J, h_x, ks)
    eps = np.where(np.isclose(ks, 0.0), 2.0 * (h_x - J), eps)
    eps = np.where(np.isclose(ks, np.pi), 2.0 * (h_x + J), eps)
    return ks, eps


@dataclass(frozen=True)
class FreeFermionSpectrum:
    J: float
    h_x: float
    N: int
    boundary: str
    single_particle: np.ndarray
    ground_energy: float
    sectors: dict

    def many_body_levels(self) -> np.ndarray:
        """All 2^N many-body energies (enumeration; small N only)."""
        if self.N > 14:
            raise ModelError("level enumeration limited to N <= 14")
        levels = []
        for parity, eps in self.sectors.items():
            for occ in itertools.product((0, 1), repeat=eps.size):
                occ = np.array(occ)
                if self.boundary == "periodic" and (-1) ** occ.sum() != parity:
                    continue
                levels.append(float(np.sum(eps * (occ - 0.5))))
        return np.sort(np.array(levels))


def _majorana_energies(J, h_x, N):
    """Positive quasiparticle energies of the open chain from the Majorana form."""
    a = np.zeros((2 * N, 2 * N))
    for i in range(N):
        a[2 * i, 2 * i + 1] = -2.0 * h_x
    for i in range(N - 1):
        a[2 * i + 1, 2 * i + 2] = -2.0 * J
    a = a - a.T
    w = np.linalg.eigvalsh(1j * a)
    return np.sort(w)[N:]


def free_fermion_spectrum(J: float, h_x: float, N: int, boundary: str = "periodic", h_z: float = 0.0,
                          J_x: float = 0.0) -> FreeFermionSpectrum:
    """Jordan-Wigner solution of H = -J sum z z - h_x sum x."""
    if h_z != 0 or J_x != 0:
        raise ModelError("free-fermion solution requires h_z = 0 and J_x = 0")
    if np.ndim(J) or np.ndim(h_x):
        raise ModelError("free-fermion solution requires uniform couplings")
    _check_free_fermion(J, h_x, N, boundary)
    if boundary == "periodic":
        sectors = {}
        e0 = np.inf
        for parity in (1, -1):
            _, eps = _sector_modes(J, h_x, N, parity)
            sectors[parity] = eps
            occ = (eps < 0).astype(int)
            e = float(np.sum(eps * (occ - 0.5)))
            if (-1) ** occ.sum() != parity:
                e += float(np.min(np.abs(eps)))
            e0 = min(e0, e)
        sp = np.sort(np.abs(np.concatenate(list(sectors.values()))))
    else:
        eps = _majorana_energies(J, h_x, N)
        sectors = {0: eps}
        e0 = -0.5 * float(np.sum(eps))
        sp = eps
    return FreeFermionSpectrum(J, h_x, N, boundary, sp, e0, sectors)
