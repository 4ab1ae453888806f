"""Experiment recipes: run a configuration and write CSV tables plus a JSON manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import time
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from .config import RunConfig, parse_text
from .observables import eigenstate_domain_walls
from .protocol import EnsembleSummary, run_ensemble, trajectory_seed
from .theory import (
    RampSpec,
    RateModelSpec,
    delta_c,
    delta_s,
    delta_s_adiabatic,
    kz_comparison,
    rate_evolve,
    rate_finite_size,
    rate_steady_state,
    write_delta_csv,
    write_kz_csv,
)

EXPERIMENTS = ("single", "noise-sweep", "size-sweep", "trap", "occupations", "theory-delta", "rate-model", "kz")
MANIFEST = "manifest.json"


def code_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def ensure_writable(out_dir: str) -> None:
    """Create ``out_dir`` and prove it is writable; raises OSError otherwise."""
    os.makedirs(out_dir, exist_ok=True)
    probe = os.path.join(out_dir, ".write-probe")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return repr(float(x))


def _write(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _sem(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("nan")


def _ensemble(cfg: RunConfig, n_init: int, base_seed: int, N=None, eta=None, spectral=None) -> EnsembleSummary:
    proto = cfg.protocol(N, eta)
    return run_ensemble(proto, n_init, base_seed, cfg.window, spectral)


def _cycle_rows(summary: EnsembleSummary):
    for i, t in enumerate(summary.trajectories):
        for c in t.cycles:
            yield (i, t.seed, c.cycle_index, c.n_flips, "b" + c.bath_outcomes, c.energy, c.energy_above_gs,
                   c.energy_density, c.fidelity, c.noise_insertions)


CYCLE_HEADER = ["trajectory", "seed", "cycle", "n_flips[count]", "bath_outcomes[bits]", "energy[J]",
                "energy_above_gs[J]", "energy_density[1]", "fidelity[1]", "noise_insertions[count]"]


def _write_single(out: str, summary: EnsembleSummary, spectral, prefix: str = "") -> list[str]:
    files = []
    p = os.path.join(out, prefix + "cycles.csv")
    _write(p, CYCLE_HEADER, _cycle_rows(summary))
    files.append(p)
    p = os.path.join(out, prefix + "ensemble.csv")
    _write(
        p,
        ["cycle", "mean_energy_above_gs[J]", "median_energy_above_gs[J]", "mean_energy_density[1]",
         "mean_fidelity[1]", "median_fidelity[1]", "mean_flips[count]"],
        zip(summary.cycle_index, summary.mean_energy_above_gs, summary.median_energy_above_gs,
            summary.mean_energy_density, summary.mean_fidelity, summary.median_fidelity, summary.mean_flips),
    )
    files.append(p)
    p = os.path.join(out, prefix + "bonds.csv")
    nb = summary.mean_bond_correlators.shape[1]
    _write(p, ["cycle"] + [f"zz_bond{k}[1]" for k in range(nb)],
           ([c] + list(row) for c, row in zip(summary.cycle_index, summary.mean_bond_correlators)))
    files.append(p)
    return files


def _summary_row(cfg, spectral, s: EnsembleSummary, eta, N):
    post = s.postselected_energy_density
    return (N, eta, eta / (2 * cfg.N_tau), spectral.ground_energy, spectral.gap, spectral.gap / abs(spectral.ground_energy),
            s.steady_e, _sem(s.steady_energy_density), float(np.mean(s.steady_energy_above_gs)),
            _sem(s.steady_energy_above_gs), s.postselected_e, _sem(post) if post.size else float("nan"),
            post.size, s.n_trajectories)


SUMMARY_HEADER = ["N", "eta_e[1/sweep/spin]", "p_err[1/step/spin]", "E0[J]", "gap[J]", "gap_density[1]",
                  "e_mean[1]", "e_sem[1]", "dE_mean[J]", "dE_sem[J]", "e_post_mean[1]", "e_post_sem[1]",
                  "n_stopped[count]", "n_trajectories[count]"]


def run_experiment(cfg: RunConfig, experiment: str, out: str | None = None, n_init: int | None = None,
                   seed: int | None = None) -> dict:
    """Run ``experiment`` for ``cfg``; write CSVs and the manifest into ``out``. Returns the manifest."""
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    out = out or cfg.out
    ensure_writable(out)
    n_init = n_init or cfg.N_init
    base = cfg.seed if seed is None else seed
    t0 = time.time()
    files: list[str] = []
    seeds: dict = {"base_seed": base}

    if experiment in ("single", "trap", "occupations"):
        spectral = cfg.spectrum()
        s = _ensemble(cfg, n_init, base, spectral=spectral)
        seeds["trajectory_seeds"] = s.seeds
        files += _write_single(out, s, spectral)
        p = os.path.join(out, "summary.csv")
        _write(p, SUMMARY_HEADER, [_summary_row(cfg, spectral, s, cfg.noise_eta, cfg.N)])
        files.append(p)
        if experiment == "trap":
            lo, hi = s.window
            corr = np.array([[c.bond_correlators for c in t.cycles[lo:hi]] for t in s.trajectories]).mean(axis=1)
            model = cfg.model()
            p = os.path.join(out, "bond_profile.csv")
            _write(p, ["bond", "site_i", "site_j", "J_bond[J]", "zz_mean[1]", "zz_sem[1]"],
                   ((k, i, j, c, corr[:, k].mean(), _sem(corr[:, k])) for k, (i, j, c) in enumerate(model.zz_bonds)))
            files.append(p)
        if experiment == "occupations":
            dw = eigenstate_domain_walls(spectral, cfg.model())
            e = spectral.eigenvalues
            p = os.path.join(out, "occupations.csv")
            _write(p, ["state", "energy[J]", "energy_above_gs[J]", "domain_walls[count]", "occupation[1]"],
                   ((k, e[k], e[k] - e[0], dw[k], s.mean_occupations[k]) for k in range(e.size)))
            files.append(p)

    elif experiment in ("noise-sweep", "size-sweep"):
        rows = []
        points = []
        if experiment == "noise-sweep":
            points = [(cfg.N, eta) for eta in cfg.eta_grid]
        else:
            points = [(n, cfg.noise_eta) for n in cfg.size_grid]
        seeds["points"] = []
        for idx, (n, eta) in enumerate(points):
            point_seed = trajectory_seed(base, idx)
            spectral = cfg.spectrum(n)
            s = _ensemble(cfg, n_init, point_seed, N=n, eta=eta, spectral=spectral)
            seeds["points"].append({"N": n, "eta_e": eta, "base_seed": point_seed, "trajectory_seeds": s.seeds})
            rows.append(_summary_row(cfg, spectral, s, eta, n))
            files += _write_single(out, s, spectral, prefix=f"N{n}_eta{eta:g}_")
        p = os.path.join(out, experiment.replace("-", "_") + ".csv")
        _write(p, SUMMARY_HEADER, rows)
        files.append(p)

    elif experiment == "theory-delta":
        rows = []
        for T in cfg.T_grid:
            if cfg.ramp == "linear":
                ramp = RampSpec(T, cfg.g_0, cfg.B_i, cfg.B_f, t_ramp=T)
            else:
                ramp = RampSpec(T, cfg.g_0, cfg.B_i, cfg.B_f)
            for w in cfg.omega:
                dc = delta_c(T, w, ramp, cfg.tol)
                ds = delta_s(T, w, ramp, cfg.tol)
                ref = delta_s_adiabatic(ramp, w)
                rows.append((T, w, dc, ds, ds / ref if ref != 0 else float("nan")))
        p = os.path.join(out, "theory_delta.csv")
        write_delta_csv(p, rows)
        files.append(p)

    elif experiment == "rate-model":
        rows = []
        for g in cfg.gamma_noise:
            for V in cfg.V:
                spec = RateModelSpec(g, cfg.gamma_c, cfg.M, V, cfg.d, cfg.nu, cfg.z, cfg.c)
                n_fs, valid = rate_finite_size(spec)
                rows.append((g, V, cfg.M, rate_steady_state(spec), n_fs, valid))
        p = os.path.join(out, "rate_model.csv")
        _write(p, ["Gamma_noise[1/time/site]", "V[sites]", "M", "n_steady[1/site]", "n_finite_size[1/site]",
                   "finite_size_valid[bool]"], rows)
        files.append(p)
        spec = RateModelSpec(cfg.gamma_noise[0], cfg.gamma_c, cfg.M)
        t, n = rate_evolve(spec, cfg.n_0, cfg.t_end, cfg.dt)
        stride = max(1, t.size // 1000)
        p = os.path.join(out, "rate_evolve.csv")
        _write(p, ["t[time]", "n[1/site]"], zip(t[::stride], n[::stride]))
        files.append(p)

    elif experiment == "kz":
        rows = []
        for g in cfg.gamma_noise:
            v = kz_comparison(g, cfg.d, cfg.nu, cfg.z, cfg.M)
            rows.append((g, v.n_cooling, v.n_kz, v.n_kz_optimized, v.winner()))
        p = os.path.join(out, "kz.csv")
        write_kz_csv(p, rows)
        files.append(p)
        v = kz_comparison(cfg.gamma_noise[0], cfg.d, cfg.nu, cfg.z, cfg.M)
        p = os.path.join(out, "kz_verdict.csv")
        _write(p, ["d", "nu", "z", "M", "x_cooling[1]", "x_kz[1]", "x_kz_opt[1]", "cooling_beats_kz[bool]",
                   "cooling_beats_kz_opt[bool]", "kz_opt_beats_kz[bool]", "nu_boundary[1]", "boundary_applicable[bool]"],
               [(cfg.d, cfg.nu, cfg.z, cfg.M, v.exponent_cooling, v.exponent_kz, v.exponent_kz_optimized,
                 v.cooling_beats_kz, v.cooling_beats_kz_optimized, v.kz_optimized_beats_kz, v.nu_boundary,
                 v.eq10_applicable)])
        files.append(p)

    manifest = {
        "experiment": experiment,
        "config_text": cfg.text,
        "n_init": n_init,
        "seeds": seeds,
        "code_version": code_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": time.time() - t0,
        "outputs": {os.path.basename(f): _sha256(f) for f in files},
    }
    with open(os.path.join(out, MANIFEST), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def _sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def rerun_from_manifest(path: str, out: str) -> dict:
    """Re-run the experiment recorded in a manifest into ``out``."""
    with open(path) as fh:
        m = json.load(fh)
    cfg = parse_text(m["config_text"])
    return run_experiment(cfg, m["experiment"], out, m["n_init"], m["seeds"]["base_seed"])
