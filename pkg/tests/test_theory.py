import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import cumulative_trapezoid

from demag.evolve import SweepSpec, run_sweep
from demag.model import ScheduleSpec, build_ising, exact_spectrum
from demag.observables import SusceptibilityGrid, energy_expectation, local_susceptibility, thermal_weights
from demag.statevec import StateVector
from demag.theory import (
    ConvergenceError,
    RampSpec,
    RateModelSpec,
    bose,
    cooling_rate_pt,
    delta_c,
    delta_c_adiabatic,
    delta_s,
    delta_s_adiabatic,
    kz_comparison,
    kz_defect_density,
    kz_exponent,
    rate_evolve,
    rate_finite_size,
    rate_steady_state,
    resonance_amplitude,
    write_delta_csv,
    write_kz_csv,
)


def triangle_oracle(ramp, omega, n=400_001):
    """2 Re int_0^T dt g(t) e^{i phi(t)} int_0^t dt' g(t') e^{-i phi(t')} on a dense grid.

    theta_B is integrated numerically from B(t), independently of the closed form.
    """
    t = np.linspace(0, ramp.T, n)
    theta = -cumulative_trapezoid(ramp.B(t), t, initial=0.0)
    phi = omega * t - 2 * theta
    g = ramp.g(t)
    inner = cumulative_trapezoid(g * np.exp(-1j * phi), t, initial=0.0)
    return 2 * np.real(np.trapezoid(g * np.exp(1j * phi) * inner, t))


def test_theta_closed_form_matches_numerical_integral():
    r = RampSpec(8.0, 0.5, 5.0, 0.7)
    t = np.linspace(0, 8, 20001)
    num = -cumulative_trapezoid(r.B(t), t, initial=0.0)
    assert np.max(np.abs(r.theta_B(t) - num)) < 1e-6
    assert r.theta_B(0.0) == 0.0


def test_ramp_profile_and_rate():
    r = RampSpec(6.0, 0.5, 5.0, 0.7)
    assert r.gamma_B == pytest.approx(4.3 / 4.5)
    assert r.g(0.0) == 0 and r.g(3.0) == 0.5 and r.g(6.0) == pytest.approx(0)
    assert r.B(6.0) == pytest.approx(0.7)
    lin = RampSpec.linear_to_zero(10.0, 5.0)
    assert lin.B(10.0) == pytest.approx(0.0) and lin.gamma_B == pytest.approx(0.5)
    with pytest.raises(ValueError):
        RampSpec(6.0, 0.5, 0.7, 5.0)
    with pytest.raises(ValueError):
        RampSpec(-1.0, 0.5, 5.0, 0.7)


@pytest.mark.parametrize(
    "ramp,omega",
    [
        (RampSpec(20.0, 1.0, 1.0, 0.001), -1.0),
        (RampSpec(20.0, 1.0, 1.0, 0.001), -3.0),
        (RampSpec(20.0, 1.0, 1.0, 0.001), 1.0),
        (RampSpec(6.0, 0.5, 5.0, 0.7), -4.0),
        (RampSpec.linear_to_zero(8.0, 5.0), 2.0),
        (RampSpec.linear_to_zero(3.0, 5.0), -1.0),
    ],
)
def test_delta_c_matches_triangle_integral(ramp, omega):
    ref = triangle_oracle(ramp, omega)
    val = delta_c(ramp.T, omega, ramp)
    assert val == pytest.approx(ref, rel=1e-5, abs=1e-9 * ramp.T**2)


def test_delta_c_zero_coupling_and_T_check():
    r = RampSpec(6.0, 0.0, 5.0, 0.7)
    assert delta_c(6.0, -3.0, r) == 0.0
    with pytest.raises(ValueError):
        delta_c(5.0, -3.0, RampSpec(6.0, 0.5, 5.0, 0.7))


def test_delta_c_nonnegative_and_real():
    r = RampSpec(12.0, 0.5, 5.0, 0.7)
    amp, err, _ = resonance_amplitude(r, -3.0)
    assert delta_c(12.0, -3.0, r) == pytest.approx(abs(amp) ** 2)
    assert err < 1e-6 * abs(amp)


@pytest.mark.parametrize("omega", [-1.0, -3.0, 0.5])
def test_quadrature_tolerance_refinement(omega):
    r = RampSpec(200.0, 1.0, 1.0, 0.001)
    coarse = delta_c(200.0, omega, r, tol=1e-5)
    fine = delta_c(200.0, omega, r, tol=5e-6)
    scale = delta_c_adiabatic(r, -1.0)
    assert abs(coarse - fine) < 1e-5 * max(abs(fine), 1e-6 * scale)


def test_convergence_error_carries_estimate():
    r = RampSpec(5000.0, 1.0, 5.0, 0.0)
    with pytest.raises(ConvergenceError) as info:
        resonance_amplitude(r, -3.0, tol=1e-15, max_level=1)
    assert info.value.estimate is not None


def test_adiabatic_limit_approached_monotonically():
    errs = []
    for T in (200.0, 2000.0, 20000.0):
        r = RampSpec(T, 1.0, 1.0, 0.001)
        errs.append(abs(delta_c(T, -1.0, r) / delta_c_adiabatic(r, -1.0) - 1))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-4


def test_heaviside_structure():
    r = RampSpec(2000.0, 1.0, 1.0, 0.001)
    scale = delta_c_adiabatic(r, -1.0)
    for omega in (-3.0, -2.5, 0.5, 1.0):
        assert delta_c_adiabatic(r, omega) == 0.0
        assert delta_c(r.T, omega, r) < 1e-3 * scale


def test_resonance_time():
    r = RampSpec(20.0, 1.0, 1.0, 0.001)
    ts = r.resonance_time(-1.0)
    assert -2 * r.B(ts) == pytest.approx(-1.0)
    assert r.resonance_time(-3.0) is None and r.resonance_time(1.0) is None


def test_delta_s_vanishes_without_field():
    # with B -> 0 the phase is omega t and g is real, so omega and -omega give equal weight
    r = RampSpec(7.0, 0.8, 1e-12, 0.0)
    assert abs(delta_s(7.0, 1.3, r)) < 1e-9 * delta_c(7.0, 1.3, r)


@pytest.mark.parametrize("omega", [1.0, 2.0])
def test_delta_s_slow_and_fast_limits(omega):
    slow = RampSpec.linear_to_zero(1000.0, 5.0)
    fast = RampSpec.linear_to_zero(0.3, 5.0)
    # omega > 0: the -omega mode is the resonant (cooling) one
    assert delta_s_adiabatic(slow, omega) < 0
    assert delta_s(1000.0, omega, slow) / delta_s_adiabatic(slow, omega) == pytest.approx(1.0, abs=0.01)
    assert delta_s(0.3, omega, fast) / delta_s_adiabatic(fast, omega) < 0.5


def test_bose_function():
    assert bose(1.0, 2.0) == pytest.approx(1 / (np.exp(2.0) - 1))
    assert 1 + bose(-1.0, np.inf) == 0.0
    assert bose(1.0, np.inf) == 0.0
    # n_B(-w) = -1 - n_B(w)
    assert bose(-0.7, 1.3) == pytest.approx(-1 - bose(0.7, 1.3))


def test_cooling_rate_trivial_limits():
    grid = np.linspace(-6, 6, 121)
    zero = SusceptibilityGrid(grid, np.zeros_like(grid), 0.05, 1.0)
    assert cooling_rate_pt(zero, 0.5, 1.0) == 0.0
    sp = exact_spectrum(build_ising(1, J=0.0, h_x=1.0, boundary="open"))
    cold = local_susceptibility(sp, 0, np.inf, grid)
    assert cooling_rate_pt(cold, 0.5, 1.0) == 0.0
    warm = local_susceptibility(sp, 0, 0.5, grid)
    # positive power is extracted from a hot system at resonance
    assert cooling_rate_pt(warm, 0.5, 1.0) > 0
    with pytest.raises(ValueError):
        cooling_rate_pt(warm, 0.5, 4.0)


def _simulated_vs_predicted(g0, T, beta=0.5):
    """Energy removed from a thermal single spin by one sweep, simulator vs resonant rate."""
    m = build_ising(1, J=0.0, h_x=1.0, boundary="open")
    sp = exact_spectrum(m)
    sched = ScheduleSpec(T=T, g_0=g0, B_i=5.0, B_f=0.7)
    sweep = SweepSpec.from_schedule(sched, int(40 * T))
    p = thermal_weights(sp.eigenvalues, beta)
    removed = 0.0
    for k in range(2):
        amps = np.zeros(4, complex)
        amps[:2] = sp.eigenvectors[:, k]
        out, _ = run_sweep(StateVector(2, amps), m, sweep)
        removed += p[k] * (sp.eigenvalues[k] - energy_expectation(out, m))
    chi = local_susceptibility(sp, 0, beta, np.linspace(-12, 0, 6001), eta=0.02)
    ramp = RampSpec(T, g0, 5.0, 0.7)
    ts = np.linspace(0, T, 20001)
    rates = [cooling_rate_pt(chi, float(ramp.g(t)), float(ramp.B(t))) for t in ts]
    predicted = np.trapezoid(rates, ts)
    return removed / predicted


def test_rate_prefactor_against_simulator_small_coupling():
    assert _simulated_vs_predicted(0.01, 200.0) == pytest.approx(1.0, abs=0.05)


def test_rate_prefactor_against_simulator_moderate_coupling():
    assert _simulated_vs_predicted(0.05, 30.0) == pytest.approx(1.0, abs=0.2)


def test_rate_steady_state_examples():
    assert rate_steady_state(RateModelSpec(2.0, 4.0, M=1)) == 0.5
    assert rate_steady_state(RateModelSpec(1e-4, 1.0, M=2)) == pytest.approx(1e-2, abs=1e-14)
    assert rate_steady_state(RateModelSpec(0.0, 1.0, M=2)) == 0.0


def test_rate_spec_validation():
    for kw in (dict(M=4), dict(d=4), dict(V=0.5), dict(nu=0), dict(z=-1)):
        with pytest.raises(ValueError):
            RateModelSpec(1.0, 1.0, **kw)
    with pytest.raises(ValueError):
        RateModelSpec(-1.0, 1.0)


def test_rate_finite_size():
    n1, _ = rate_finite_size(RateModelSpec(0.1, 2.0, M=1, V=50))
    assert n1 == rate_steady_state(RateModelSpec(0.1, 2.0, M=1))
    a, ok_a = rate_finite_size(RateModelSpec(1e-4, 1.0, M=2, V=8))
    b, _ = rate_finite_size(RateModelSpec(1e-4, 1.0, M=2, V=16))
    assert b == pytest.approx(2 * a, rel=1e-12) and ok_a
    n, ok = rate_finite_size(RateModelSpec(0.5, 1.0, M=2, V=10))
    assert n == pytest.approx(5.0) and not ok


def test_rate_evolve_linear_decay():
    t, n = rate_evolve(RateModelSpec(0.0, 1.0, M=1), 1.0, 5.0, 0.01)
    assert np.max(np.abs(n - np.exp(-t))) < 1e-8


def test_rate_evolve_pair_annihilation():
    t, n = rate_evolve(RateModelSpec(0.0, 1.0, M=2), 1.0, 10.0, 0.01)
    assert np.max(np.abs(n - 1 / (1 + t))) < 1e-6


@settings(max_examples=25, deadline=None)
@given(
    gamma=st.floats(1e-4, 1.0),
    gc=st.floats(0.2, 5.0),
    M=st.integers(1, 3),
    n0=st.floats(0.0, 2.0),
)
def test_rate_evolve_reaches_steady_state(gamma, gc, M, n0):
    spec = RateModelSpec(gamma, gc, M=M)
    ns = rate_steady_state(spec)
    relax = 1.0 / (M * gc * max(ns, 1e-12) ** (M - 1))
    t_end = min(40 * relax, 4000.0) if M > 1 else 40 * relax
    dt = min(0.05, 0.2 / (gc * max(n0, ns, 1.0) ** (M - 1) * M))
    _, n = rate_evolve(spec, n0, t_end, dt)
    if 40 * relax <= t_end:
        assert n[-1] == pytest.approx(ns, abs=1e-8)


def test_rate_evolve_instability_detected():
    with pytest.raises(ValueError, match="unstable"):
        rate_evolve(RateModelSpec(0.0, 10.0, M=1), 1.0, 10.0, 1.0)
    with pytest.raises(ValueError, match="unstable"):
        rate_evolve(RateModelSpec(0.0, 1.0, M=2), 10.0, 10.0, 0.5)
    with pytest.raises(ValueError):
        rate_evolve(RateModelSpec(0.0, 1.0), -1.0, 1.0, 0.1)


def test_kz_exponents_closed_form():
    assert kz_exponent(2, 0.63, 1) == pytest.approx(0.4360, abs=1e-4)
    assert kz_exponent(3, 0.5, 1) == 0.5


@pytest.mark.parametrize("d,nu,z", [(2, 0.63, 1), (3, 0.5, 1), (1, 1.0, 1), (2, 1.0, 2)])
def test_kz_minimizer_scaling(d, nu, z):
    gammas = np.logspace(-6, -3, 7)
    res = [kz_defect_density(g, d, nu, z, c=1.3) for g in gammas]
    n = np.array([r[0] for r in res])
    slope = np.polyfit(np.log(gammas), np.log(n), 1)[0]
    assert slope == pytest.approx(res[0][2], rel=0.02)
    # stationarity of Gamma T + c T^-a gives T_opt = (a c / Gamma)^(1/(1+a))
    a = d * nu / (1 + z * nu)
    for g, (nmin, topt, _) in zip(gammas, res):
        assert topt == pytest.approx((a * 1.3 / g) ** (1 / (1 + a)), rel=1e-5)
        assert nmin == pytest.approx(g * topt + 1.3 * topt**-a, rel=1e-10)


def test_kz_rejects_nonpositive():
    with pytest.raises(ValueError):
        kz_defect_density(0.0, 2, 0.63, 1)


def test_kz_verdicts():
    v = kz_comparison(1e-4, 2, 0.63, 1, M=2)
    assert v.cooling_beats_kz and v.nu_boundary == 1.0 and v.eq10_applicable
    assert v.exponent_kz == pytest.approx(0.4360, abs=1e-4)
    # optimized KZ d/(d+z) = 2/3 > 1/2 when d > z
    assert v.kz_optimized_beats_kz and not v.cooling_beats_kz_optimized
    assert v.winner() == "kz_opt"
    v3 = kz_comparison(1e-4, 3, 0.5, 1, M=2)
    assert v3.exponent_kz == 0.5 and not v3.cooling_beats_kz and v3.nu_boundary == 0.5
    one_d = kz_comparison(1e-4, 1, 1.0, 1, M=2)
    assert not one_d.eq10_applicable and one_d.nu_boundary is None
    # d = z: optimized KZ ties with pair cooling at 1/2 and beats plain KZ (1/3)
    assert not one_d.cooling_beats_kz_optimized and one_d.kz_optimized_beats_kz
    with pytest.raises(ValueError):
        kz_comparison(1e-4, 2, 0.63, 1, M=3)


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 3), nu=st.floats(0.1, 5.0), z=st.floats(0.5, 3.0))
def test_single_excitation_cooling_always_wins(d, nu, z):
    v = kz_comparison(1e-3, d, nu, z, M=1)
    assert v.exponent_kz < 1 and v.cooling_beats_kz


def test_csv_writers(tmp_path):
    p = tmp_path / "d.csv"
    write_delta_csv(p, [(1.0, 2.0, 3.0, 4.0, 0.5)])
    rows = list(csv.reader(open(p)))
    assert rows[0][0].startswith("T[") and float(rows[1][4]) == 0.5
    q = tmp_path / "k.csv"
    write_kz_csv(q, [(1e-4, 1e-2, 1e-2, 1e-3, "kz_opt")])
    rows = list(csv.reader(open(q)))
    assert len(rows[0]) == 5 and rows[1][-1] == "kz_opt"
