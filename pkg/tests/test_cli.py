import csv
import json
import os
import subprocess
import sys

import pytest

from demag.cli import main
from demag.experiments import rerun_from_manifest

SMALL = """\
J = 1
h_x = 0.5
N = 3
T = 6
B_i = 5
B_f = 0.7
g_0 = 0.5
N_tau = 31
N_c = 6
N_init = 3
eta_e = 0.05
eta_grid = 0, 0.05
size_grid = 2, 3
T_grid = 2, 20
omega = -1, 1
gamma_noise = 1e-5, 1e-4
t_end = 20
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def assert_units_in_header(path, exempt=("trajectory", "seed", "cycle", "state", "bond", "site_i", "site_j", "M",
                                         "N", "d", "nu", "z", "winner")):
    for col in read_csv(path)[0]:
        assert "[" in col or col in exempt or col.startswith("zz_bond"), (path, col)


@pytest.mark.parametrize(
    "command,expected",
    [
        ("run", ["cycles.csv", "ensemble.csv", "bonds.csv", "summary.csv"]),
        ("trap", ["bond_profile.csv"]),
        ("occupations", ["occupations.csv"]),
        ("sweep-noise", ["noise_sweep.csv", "N3_eta0_cycles.csv", "N3_eta0.05_cycles.csv"]),
        ("sweep-size", ["size_sweep.csv", "N2_eta0.05_cycles.csv"]),
        ("theory-delta", ["theory_delta.csv"]),
        ("rate-model", ["rate_model.csv", "rate_evolve.csv"]),
        ("kz", ["kz.csv", "kz_verdict.csv"]),
    ],
)
def test_subcommands_write_outputs(command, expected, cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main([command, "--config", cfg_file, "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for name in expected:
        assert (out / name).exists()
        assert name in manifest["outputs"]
    for name in manifest["outputs"]:
        assert_units_in_header(out / name)
    assert manifest["config_text"] == SMALL
    assert manifest["seeds"]["base_seed"] == 1
    assert {"code_version", "python", "numpy", "wall_time_s"} <= manifest.keys()
    printed = capsys.readouterr().out.split()
    assert f"{out}/{expected[0]}" in printed


def test_noise_sweep_table(cfg_file, tmp_path):
    out = tmp_path / "ns"
    main(["sweep-noise", "--config", cfg_file, "--out", str(out)])
    rows = read_csv(out / "noise_sweep.csv")
    assert len(rows) == 3
    assert [float(r[1]) for r in rows[1:]] == [0.0, 0.05]
    assert all(int(r[-1]) == 3 for r in rows[1:])


def test_theory_delta_table(cfg_file, tmp_path):
    out = tmp_path / "td"
    main(["theory-delta", "--config", cfg_file, "--out", str(out)])
    rows = read_csv(out / "theory_delta.csv")[1:]
    assert len(rows) == 4
    assert {(float(r[0]), float(r[1])) for r in rows} == {(2.0, -1.0), (2.0, 1.0), (20.0, -1.0), (20.0, 1.0)}


def test_trajectories_and_seed_overrides(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", cfg_file, "--out", str(out), "--trajectories", "2", "--seed", "17"]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["n_init"] == 2 and m["seeds"]["base_seed"] == 17
    assert len(m["seeds"]["trajectory_seeds"]) == 2
    assert main(["run", "--config", cfg_file, "--out", str(out), "--trajectories", "0"]) == 2


@pytest.mark.parametrize("command", ["run", "sweep-noise"])
def test_manifest_rerun_is_bitwise_identical(command, cfg_file, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main([command, "--config", cfg_file, "--out", str(a), "--seed", "5"])
    ma = json.loads((a / "manifest.json").read_text())
    mb = rerun_from_manifest(str(a / "manifest.json"), str(b))
    assert mb["outputs"] == ma["outputs"]
    assert main([command, "--config", str(a / "manifest.json"), "--out", str(c)]) == 0
    mc = json.loads((c / "manifest.json").read_text())
    assert mc["outputs"] == ma["outputs"]
    for name in ma["outputs"]:
        assert (a / name).read_bytes() == (c / name).read_bytes()


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL + "colour = blue\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "line 18" in capsys.readouterr().err
    empty = tmp_path / "empty.cfg"
    empty.write_text("")
    assert main(["run", "--config", str(empty)]) == 2
    assert "missing required keys" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert main(["presets", "fig99"]) == 2


def test_unwritable_output_exit_4_before_compute(cfg_file, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", cfg_file, "--out", str(blocker / "sub")]) == 4
    assert "I/O error" in capsys.readouterr().err


def test_convergence_error_exit_3(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text(SMALL.replace("T_grid = 2, 20", "T_grid = 20") + "tol = 1e-30\n")
    assert main(["theory-delta", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "convergence error" in capsys.readouterr().err


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    names = capsys.readouterr().out.split()
    assert {"fig2a", "fig3", "fig5", "fig6", "fig9"} <= set(names)
    assert main(["presets", "fig2a"]) == 0
    assert "N_tau = 101" in capsys.readouterr().out


def test_plot_emits_svg(cfg_file, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    assert main(["run", "--config", cfg_file, "--out", str(out), "--plot"]) == 0
    svgs = [f for f in os.listdir(out) if f.endswith(".svg")]
    assert svgs
    text = (out / svgs[0]).read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "demag.cli", "presets"], capture_output=True, text=True)
    assert r.returncode == 0 and "fig2a" in r.stdout
