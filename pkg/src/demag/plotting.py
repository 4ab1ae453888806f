"""SVG figures drawn from the CSV tables of an output directory (needs matplotlib)."""

from __future__ import annotations

import csv
import os

import numpy as np


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _col(header, rows, name, cast=float):
    k = header.index(name)
    return np.array([cast(r[k]) for r in rows])


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.fonttype"] = "none"
    import matplotlib.pyplot as plt

    return plt


def plot_directory(out_dir: str) -> list[str]:
    """Write one SVG per recognised CSV in ``out_dir``; returns the written paths."""
    plt = _pyplot()
    written = []

    def save(fig, name):
        p = os.path.join(out_dir, name)
        fig.tight_layout()
        fig.savefig(p, format="svg")
        plt.close(fig)
        written.append(p)

    p = os.path.join(out_dir, "ensemble.csv")
    if os.path.exists(p):
        h, r = _read(p)
        cyc = _col(h, r, "cycle")
        fig, (a, b) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
        a.plot(cyc, _col(h, r, "median_fidelity[1]"), label="median")
        a.plot(cyc, _col(h, r, "mean_fidelity[1]"), label="mean")
        a.set_ylabel("ground-space fidelity")
        a.legend()
        b.plot(cyc, _col(h, r, "median_energy_above_gs[J]"), label="median")
        b.plot(cyc, _col(h, r, "mean_energy_above_gs[J]"), label="mean")
        b.set_yscale("symlog", linthresh=1e-3)
        b.set_xlabel("cycle")
        b.set_ylabel("E - E0 [J]")
        b.legend()
        save(fig, "ensemble.svg")

    for name, xcol, xlabel in (("noise_sweep.csv", "eta_e[1/sweep/spin]", "eta_e"), ("size_sweep.csv", "N", "N")):
        p = os.path.join(out_dir, name)
        if os.path.exists(p):
            h, r = _read(p)
            x = _col(h, r, xcol)
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.errorbar(x, _col(h, r, "e_mean[1]"), _col(h, r, "e_sem[1]"), marker="s", label="all")
            ax.errorbar(x, _col(h, r, "e_post_mean[1]"), _col(h, r, "e_post_sem[1]"), marker="o", mfc="none",
                        label="post-selected")
            ax.plot(x, _col(h, r, "gap_density[1]"), "k--", label="gap")
            ax.set_xlabel(xlabel)
            ax.set_ylabel("(E - E0)/|E0|")
            ax.legend()
            save(fig, name.replace(".csv", ".svg"))

    p = os.path.join(out_dir, "bonds.csv")
    if os.path.exists(p):
        h, r = _read(p)
        data = np.array([[float(x) for x in row[1:]] for row in r])
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.imshow(data, aspect="auto", origin="lower", cmap="viridis", vmin=-1, vmax=1)
        fig.colorbar(im, label="<z_i z_i+1>")
        ax.set_xlabel("bond")
        ax.set_ylabel("cycle")
        save(fig, "bonds.svg")

    p = os.path.join(out_dir, "occupations.csv")
    if os.path.exists(p):
        h, r = _read(p)
        e = _col(h, r, "energy_above_gs[J]")
        occ = _col(h, r, "occupation[1]")
        dw = _col(h, r, "domain_walls[count]", int)
        fig, ax = plt.subplots(figsize=(5, 4))
        for w in np.unique(dw):
            m = (dw == w) & (occ > 0)
            ax.semilogy(e[m], occ[m], ".", label=f"{w} DW")
        ax.set_xlabel("E_k - E0 [J]")
        ax.set_ylabel("occupation")
        ax.legend(fontsize="small")
        save(fig, "occupations.svg")

    p = os.path.join(out_dir, "theory_delta.csv")
    if os.path.exists(p):
        h, r = _read(p)
        T, w, ratio = _col(h, r, "T[1/J]"), _col(h, r, "omega[J]"), _col(h, r, "adiabatic_ratio[1]")
        fig, ax = plt.subplots(figsize=(5, 4))
        for om in np.unique(w):
            m = w == om
            ax.semilogx(T[m], ratio[m], marker="o", label=f"omega = {om:g}")
        ax.axhline(1.0, color="k", lw=0.5)
        ax.set_xlabel("T")
        ax.set_ylabel("Delta_s / Delta_s^A")
        ax.legend()
        save(fig, "theory_delta.svg")

    p = os.path.join(out_dir, "kz.csv")
    if os.path.exists(p):
        h, r = _read(p)
        g = _col(h, r, "Gamma_noise[1/time/site]")
        fig, ax = plt.subplots(figsize=(5, 4))
        for col, lab in (("n_cooling[1/site]", "cooling"), ("n_kz[1/site]", "KZ"), ("n_kz_opt[1/site]", "optimized KZ")):
            ax.loglog(g, _col(h, r, col), marker="o", label=lab)
        ax.set_xlabel("Gamma_noise")
        ax.set_ylabel("n")
        ax.legend()
        save(fig, "kz.svg")

    p = os.path.join(out_dir, "rate_evolve.csv")
    if os.path.exists(p):
        h, r = _read(p)
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(_col(h, r, "t[time]"), _col(h, r, "n[1/site]"))
        ax.set_xlabel("t")
        ax.set_ylabel("n")
        save(fig, "rate_evolve.svg")
    return written
