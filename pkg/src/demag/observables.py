"""Energies, fidelities, correlators, eigenstate occupations and the Lehmann susceptibility."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import SpectralData, SpinModelSpec, z_diagonal
from .statevec import StateVector


def _register_matrix(state: StateVector, model: SpinModelSpec) -> np.ndarray:
    """Amplitudes as a (2^n_bath, 2^n_system) matrix; row 0 is the polarized bath."""
    return state.amplitudes.reshape(1 << (state.n_qubits - model.n_system), 1 << model.n_system)


def system_factor(state: StateVector, model: SpinModelSpec) -> np.ndarray:
    """System amplitudes in the bath-up sector (the full state when the bath is polarized)."""
    return _register_matrix(state, model)[0]


def apply_system_hamiltonian(m: np.ndarray, model: SpinModelSpec, diag: np.ndarray | None = None) -> np.ndarray:
    """H_s acting on the system index (last axis) of ``m``, matrix-free."""
    idx = np.arange(1 << model.n_system)
    out = (z_diagonal(model) if diag is None else diag) * m
    for i, h in enumerate(model.x_fields):
        if h != 0:
            out -= h * m[..., idx ^ (1 << i)]
    for i, j, c in model.xx_bonds:
        out -= c * m[..., idx ^ (1 << i) ^ (1 << j)]
    return out


def energy_expectation(state: StateVector, model: SpinModelSpec) -> float:
    m = _register_matrix(state, model)
    return float(np.real(np.vdot(m, apply_system_hamiltonian(m, model))))


def fidelity_to_ground_space(state: StateVector, spectral: SpectralData, model: SpinModelSpec | None = None) -> float:
    n_sys = spectral.eigenvectors.shape[0].bit_length() - 1
    phi = state.amplitudes[: 1 << n_sys]
    overlaps = spectral.ground_space.conj().T @ phi
    return float(np.sum(np.abs(overlaps) ** 2))


def system_probabilities(state: StateVector, model: SpinModelSpec) -> np.ndarray:
    m = _register_matrix(state, model)
    return np.sum(np.abs(m) ** 2, axis=0)


def bond_correlators_from_probs(probs: np.ndarray, model: SpinModelSpec) -> np.ndarray:
    idx = np.arange(probs.size)
    out = []
    for i, j, _ in model.zz_bonds:
        zz = 1.0 - 2.0 * (((idx >> i) ^ (idx >> j)) & 1)
        out.append(float(np.dot(probs, zz)))
    return np.clip(np.array(out), -1.0, 1.0)


def bond_correlators(state: StateVector, model: SpinModelSpec) -> np.ndarray:
    """<z_i z_j> for every ZZ bond, in bond order."""
    return bond_correlators_from_probs(system_probabilities(state, model), model)


def eigenstate_occupations(state: StateVector, spectral: SpectralData) -> np.ndarray:
    """p_k = |<E_k, bath up|psi>|^2."""
    n_sys = spectral.eigenvectors.shape[0].bit_length() - 1
    phi = state.amplitudes[: 1 << n_sys]
    return np.abs(spectral.eigenvectors.conj().T @ phi) ** 2


def domain_wall_operator(model: SpinModelSpec) -> np.ndarray:
    """Diagonal of sum_bonds (1 - z_i z_j)/2 over the system basis."""
    idx = np.arange(1 << model.n_system)
    d = np.zeros(idx.size)
    for i, j, _ in model.zz_bonds:
        d += ((idx >> i) ^ (idx >> j)) & 1
    return d


def domain_wall_number(state, model: SpinModelSpec) -> int:
    """Domain-wall count of a basis index, or the rounded expectation for a system vector.

    For eigenstates at h_x > 0 this is only a crossover label: the expectation is
    rounded to the nearest even integer on periodic chains, nearest integer otherwise.
    """
    if isinstance(state, (int, np.integer)):
        return int(domain_wall_operator(model)[int(state)])
    vec = np.asarray(state)
    w = float(np.dot(np.abs(vec) ** 2, domain_wall_operator(model)))
    if model.boundary == "periodic":
        return int(2 * np.round(w / 2))
    return int(np.round(w))


def eigenstate_domain_walls(spectral: SpectralData, model: SpinModelSpec) -> np.ndarray:
    w = domain_wall_operator(model) @ (np.abs(spectral.eigenvectors) ** 2)
    if model.boundary == "periodic":
        return (2 * np.round(w / 2)).astype(int)
    return np.round(w).astype(int)


@dataclass
class SusceptibilityGrid:
    frequencies: np.ndarray
    chi_imag: np.ndarray
    eta: float
    beta: float
    lehmann_weight: float = 0.0  # sum of pi (p_n - p_m) |A_nm|^2 over w_nm > 0
    lehmann_first_moment: float = 0.0  # sum of pi (p_n - p_m) |A_nm|^2 w_nm over all pairs

    def value(self, omega: float) -> float:
        lo, hi = self.frequencies[0], self.frequencies[-1]
        if not lo <= omega <= hi:
            raise ValueError(f"omega={omega} outside grid [{lo}, {hi}]")
        return float(np.interp(omega, self.frequencies, self.chi_imag))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["omega", "chi_imag"])
            for x, y in zip(self.frequencies, self.chi_imag):
                w.writerow([repr(float(x)), repr(float(y))])


def thermal_weights(energies: np.ndarray, beta: float, degeneracy_tol: float = 1e-8) -> np.ndarray:
    e = energies - energies[0]
    if np.isinf(beta):
        p = (e <= degeneracy_tol).astype(float)
    else:
        p = np.exp(-beta * e)
    return p / p.sum()


def y_matrix_elements(spectral: SpectralData, site: int) -> np.ndarray:
    """|<n| y_site |m>|^2 in the eigenbasis."""
    v = spectral.eigenvectors
    dim = v.shape[0]
    idx = np.arange(dim)
    bit = (idx >> site) & 1
    # y|0> = i|1>, y|1> = -i|0>
    yv = np.empty_like(v, dtype=complex)
    yv[idx ^ (1 << site)] = (1j * (1 - 2 * bit))[:, None] * v
    a = v.conj().T @ yv
    return np.abs(a) ** 2


def local_susceptibility(
    spectral: SpectralData,
    site: int | None,
    beta: float,
    frequencies: np.ndarray,
    eta: float = 0.05,
    weight_cut: float = 1e-14,
) -> SusceptibilityGrid:
    """Gaussian-broadened Lehmann sum for chi''_i(omega) of the y_i operator.

    ``site=None`` averages over all sites. ``beta=np.inf`` gives the ground-state response.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    e = spectral.eigenvalues
    n_sys = spectral.eigenvectors.shape[0].bit_length() - 1
    sites = range(n_sys) if site is None else [site]
    a2 = sum(y_matrix_elements(spectral, s) for s in sites) / len(sites)
    p = thermal_weights(e, beta)
    w = np.pi * (p[:, None] - p[None, :]) * a2
    omega_nm = e[None, :] - e[:, None]
    keep = np.abs(w) > weight_cut
    w, om = w[keep], omega_nm[keep]
    freqs = np.asarray(frequencies, dtype=float)
    chi = np.zeros(freqs.size)
    norm = 1.0 / (np.sqrt(2 * np.pi) * eta)
    for chunk in range(0, w.size, 4096):
        ww = w[chunk : chunk + 4096]
        oo = om[chunk : chunk + 4096]
        chi += (ww[None, :] * np.exp(-0.5 * ((freqs[:, None] - oo[None, :]) / eta) ** 2)).sum(axis=1) * norm
    return SusceptibilityGrid(
        freqs, chi, eta, beta,
        lehmann_weight=float(np.sum(w[om > 0])),
        lehmann_first_moment=float(np.sum(w * om)),
    )


def fit_log_occupations(energies: np.ndarray, probs: np.ndarray, min_prob: float = 1e-12):
    """Least-squares line through log p_k vs E_k for occupied states.

    Returns (slope, intercept, r_squared); ``-slope`` is an effective inverse temperature.
    """
    energies = np.asarray(energies, dtype=float)
    probs = np.asarray(probs, dtype=float)
    m = probs > min_prob
    x, y = energies[m], np.log(probs[m])
    if x.size < 3:
        raise ValueError("need at least three occupied states to fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)
