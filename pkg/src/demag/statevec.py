"""Dense statevector substrate.

Qubit ``k`` is bit ``k`` of the basis index (little-endian). A bitstring
``bits`` passed to :func:`basis_state` lists qubits in order, so ``bits[k]``
is the value of qubit ``k``; bit 0 means spin up (sigma^z = +1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class StateError(ValueError):
    """Invalid input to a statevector operation."""


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise StateError(
                f"expected {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}"
            )

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.sqrt(_kernels.sum_sq(self.amplitudes)))

    def normalize(self) -> "StateVector":
        nrm = self.norm()
        if nrm < 1e-14:
            raise RuntimeError("cannot normalize a state with vanishing norm")
        self.amplitudes /= nrm
        return self


@dataclass(frozen=True)
class LocalUnitary:
    """A 1- or 2-qubit gate. For two qubits the local index is bit(support[0]) + 2*bit(support[1])."""

    support: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        dim = 1 << len(self.support)
        if len(self.support) not in (1, 2) or m.shape != (dim, dim):
            raise StateError(f"support {self.support} does not match matrix shape {m.shape}")
        if len(set(self.support)) != len(self.support):
            raise StateError(f"support indices must be distinct: {self.support}")
        if not np.allclose(m.conj().T @ m, np.eye(dim), atol=UNITARY_TOL, rtol=0):
            raise StateError("matrix is not unitary")


def basis_state(n_qubits: int, bits: str | Sequence[int]) -> StateVector:
    bits = [int(b) for b in bits]
    if len(bits) != n_qubits:
        raise StateError(f"bitstring has length {len(bits)}, expected {n_qubits}")
    if any(b not in (0, 1) for b in bits):
        raise StateError("bits must be 0 or 1")
    index = sum(b << k for k, b in enumerate(bits))
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def _check_qubits(state: StateVector, qubits):
    for q in qubits:
        if not 0 <= q < state.n_qubits:
            raise StateError(f"qubit {q} out of range for {state.n_qubits} qubits")


def apply_local_unitary(state: StateVector, u: LocalUnitary) -> StateVector:
    _check_qubits(state, u.support)
    out = state.copy()
    if len(u.support) == 1:
        _kernels.apply_1q(out.amplitudes, u.support[0], u.matrix)
    else:
        _kernels.apply_2q(out.amplitudes, u.support[0], u.support[1], u.matrix)
    return out


def _term_arrays(z_terms: Mapping[int, float], zz_terms: Mapping[tuple[int, int], float]):
    zq = np.array(list(z_terms.keys()), dtype=np.int64)
    zc = np.array(list(z_terms.values()), dtype=np.float64)
    pairs = list(zz_terms.keys())
    za = np.array([p[0] for p in pairs], dtype=np.int64)
    zb = np.array([p[1] for p in pairs], dtype=np.int64)
    zzc = np.array(list(zz_terms.values()), dtype=np.float64)
    return zq, zc, za, zb, zzc


def apply_diagonal_phase(
    state: StateVector,
    z_terms: Mapping[int, float] | None = None,
    zz_terms: Mapping[tuple[int, int], float] | None = None,
    angle: float = 1.0,
) -> StateVector:
    """Multiply amplitude ``b`` by ``exp(-i * angle * phase(b))``.

    ``phase(b) = sum_q c_q z_q(b) + sum_(p,q) c_pq z_p(b) z_q(b)`` with
    ``z_q(b) = +1/-1`` for bit ``q`` equal to 0/1. The phase is evaluated per
    amplitude from the coefficient lists; no 2^n table is built.
    """
    z_terms = dict(z_terms or {})
    zz_terms = dict(zz_terms or {})
    _check_qubits(state, list(z_terms) + [q for pair in zz_terms for q in pair])
    out = state.copy()
    _kernels.apply_zterms_phase(out.amplitudes, float(angle), *_term_arrays(z_terms, zz_terms))
    return out


def measure_qubit(state: StateVector, qubit: int, rng: np.random.Generator) -> tuple[int, StateVector]:
    _check_qubits(state, [qubit])
    p1 = _kernels.prob_bit_one(state.amplitudes, qubit)
    outcome = int(rng.random() < p1)
    p = p1 if outcome else 1.0 - p1
    if p < 1e-14:
        raise RuntimeError(f"sampled a branch with probability {p:.3g}")
    amps = state.amplitudes.copy()
    mask = ((np.arange(amps.size) >> qubit) & 1) != outcome
    amps[mask] = 0.0
    amps /= np.sqrt(p)
    return outcome, StateVector(state.n_qubits, amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise StateError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation_pauli(state: StateVector, paulis: Mapping[int, str]) -> float:
    """<psi| prod_q P_q |psi> for a Pauli string given as {qubit: 'X'|'Y'|'Z'}."""
    out = state.copy()
    for q, p in paulis.items():
        out = apply_local_unitary(out, LocalUnitary((q,), PAULI[p]))
    return float(np.real(inner_product(state, out)))
