"""Run configuration: a plain ``key = value`` text format with named presets.

Grammar: one ``key = value`` per line; ``#`` starts a comment; blank lines are
ignored; keys are case-sensitive; lists are comma separated; booleans are
``true``/``false``. Exactly one of ``p_err`` and ``eta_e`` must be present.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .evolve import NoiseSpec, SweepSpec
from .model import ModelError, ScheduleSpec, build_ising, exact_spectrum
from .protocol import ProtocolConfig


class ConfigError(ValueError):
    pass


REQUIRED = ("J", "h_x", "N", "T", "B_i", "B_f", "g_0", "N_tau", "N_c", "N_init")

# key -> (field name, parser name)
_KEYS = {
    "J": ("J", "float"),
    "h_x": ("h_x", "float"),
    "h_z": ("h_z", "float"),
    "J_x": ("J_x", "float"),
    "N": ("N", "int"),
    "boundary": ("boundary", "str"),
    "trap_bond": ("trap_bond", "int"),
    "J_trap": ("J_trap", "float"),
    "bath_mask": ("bath_mask", "mask"),
    "T": ("T", "float"),
    "B_i": ("B_i", "float"),
    "B_f": ("B_f", "float"),
    "g_0": ("g_0", "float"),
    "t_1": ("t_1", "float"),
    "t_2": ("t_2", "float"),
    "N_tau": ("N_tau", "int"),
    "dtau_mode": ("dtau_mode", "str"),
    "time_sampling": ("time_sampling", "str"),
    "trotter_splitting": ("trotter_splitting", "str"),
    "N_c": ("N_c", "int"),
    "N_init": ("N_init", "int"),
    "stopping_rule": ("stopping_rule", "bool"),
    "stop_k": ("stop_k", "int"),
    "initial_state": ("initial_state", "str"),
    "window_start": ("window_start", "int"),
    "p_err": ("p_err", "float"),
    "eta_e": ("eta_e", "float"),
    "seed": ("seed", "int"),
    "out": ("out", "str"),
    "eta_grid": ("eta_grid", "floats"),
    "size_grid": ("size_grid", "ints"),
    "omega": ("omega", "floats"),
    "T_grid": ("T_grid", "floats"),
    "ramp": ("ramp", "str"),
    "tol": ("tol", "float"),
    "gamma_noise": ("gamma_noise", "floats"),
    "gamma_c": ("gamma_c", "float"),
    "M": ("M", "int"),
    "V": ("V", "floats"),
    "d": ("d", "int"),
    "nu": ("nu", "float"),
    "z": ("z", "float"),
    "c": ("c", "float"),
    "n_0": ("n_0", "float"),
    "t_end": ("t_end", "float"),
    "dt": ("dt", "float"),
}


@dataclass(frozen=True)
class RunConfig:
    J: float
    h_x: float
    N: int
    T: float
    B_i: float
    B_f: float
    g_0: float
    N_tau: int
    N_c: int
    N_init: int
    h_z: float = 0.0
    J_x: float = 0.0
    boundary: str = "periodic"
    trap_bond: int | None = None
    J_trap: float | None = None
    bath_mask: tuple[bool, ...] | None = None
    t_1: float | None = None
    t_2: float | None = None
    dtau_mode: str = "tile"  # 'tile': T/N_tau, 'endpoint': T/(N_tau-1)
    time_sampling: str = "start"  # 'start': t_n = n dtau, 'midpoint': (n + 1/2) dtau
    trotter_splitting: str = "ordered"  # 'ordered': X then Y, 'symmetric': X/2 Y X/2
    stopping_rule: bool = True
    stop_k: int = 5
    initial_state: str = "basis"
    window_start: int | None = None  # steady-state window [window_start, N_c); default N_c // 2
    p_err: float | None = None
    eta_e: float | None = None
    seed: int = 1
    out: str = "out"
    # experiment axes
    eta_grid: tuple[float, ...] = (0.0, 2e-3, 1e-2, 2e-2)
    size_grid: tuple[int, ...] = (4, 6, 8, 10)
    omega: tuple[float, ...] = (1.0, 2.0)
    T_grid: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0)
    ramp: str = "protocol"  # 'protocol': B ramps over [0, t_2]; 'linear': B_i (1 - t/T) down to B_f over [0, T]
    tol: float = 1e-6
    gamma_noise: tuple[float, ...] = (1e-6, 1e-5, 1e-4, 1e-3)
    gamma_c: float = 1.0
    M: int = 2
    V: tuple[float, ...] = (4.0, 6.0, 8.0, 10.0)
    d: int = 1
    nu: float = 1.0
    z: float = 1.0
    c: float = 1.0
    n_0: float = 1.0
    t_end: float = 100.0
    dt: float = 0.01
    text: str = dataclasses.field(default="", compare=False, repr=False)

    def __post_init__(self):
        if (self.p_err is None) == (self.eta_e is None):
            raise ConfigError("exactly one of p_err and eta_e must be given")
        if self.N < 1 or self.N_tau < 1 or self.N_c < 1 or self.N_init < 1:
            raise ConfigError("N, N_tau, N_c and N_init must be positive")
        if self.dtau_mode not in ("tile", "endpoint"):
            raise ConfigError(f"dtau_mode must be 'tile' or 'endpoint', got {self.dtau_mode!r}")
        if self.time_sampling not in ("start", "midpoint"):
            raise ConfigError(f"time_sampling must be 'start' or 'midpoint', got {self.time_sampling!r}")
        if self.trotter_splitting not in ("ordered", "symmetric"):
            raise ConfigError(f"trotter_splitting must be 'ordered' or 'symmetric', got {self.trotter_splitting!r}")
        if self.dtau_mode == "endpoint" and self.N_tau < 2:
            raise ConfigError("dtau_mode 'endpoint' needs N_tau >= 2")
        if self.ramp not in ("protocol", "linear"):
            raise ConfigError(f"ramp must be 'protocol' or 'linear', got {self.ramp!r}")
        if (self.trap_bond is None) != (self.J_trap is None):
            raise ConfigError("trap_bond and J_trap must be given together")
        if self.window_start is not None and not 0 <= self.window_start < self.N_c:
            raise ConfigError("window_start must lie in [0, N_c)")
        if self.bath_mask is not None and len(self.bath_mask) != self.N:
            raise ConfigError(f"bath_mask has {len(self.bath_mask)} entries, expected N={self.N}")
        try:
            self.model()
            self.schedule()
            self.noise()
            self.protocol()
        except (ModelError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def noise_eta(self) -> float:
        return self.eta_e if self.eta_e is not None else 2 * self.N_tau * self.p_err

    @property
    def window(self) -> tuple[int, int]:
        lo = self.N_c // 2 if self.window_start is None else self.window_start
        return lo, self.N_c

    def model(self, N: int | None = None):
        trap = None if self.trap_bond is None else (self.trap_bond, self.J_trap)
        n = self.N if N is None else N
        mask = self.bath_mask if N is None else None
        return build_ising(n, self.J, self.h_x, self.h_z, self.J_x, self.boundary, trap, mask)

    def schedule(self) -> ScheduleSpec:
        return ScheduleSpec(self.T, self.g_0, self.B_i, self.B_f, self.t_1, self.t_2)

    def sweep(self) -> SweepSpec:
        n = self.N_tau if self.dtau_mode == "tile" else self.N_tau - 1
        return SweepSpec(self.N_tau, self.T / n, self.schedule(), self.time_sampling, self.trotter_splitting)

    def noise(self, eta_e: float | None = None) -> NoiseSpec:
        if eta_e is not None:
            return NoiseSpec.from_eta(eta_e, self.N_tau)
        if self.p_err is not None:
            return NoiseSpec(self.p_err)
        return NoiseSpec.from_eta(self.eta_e, self.N_tau)

    def protocol(self, N: int | None = None, eta_e: float | None = None) -> ProtocolConfig:
        return ProtocolConfig(
            model=self.model(N),
            sweep=self.sweep(),
            noise=self.noise(eta_e),
            n_cycles=self.N_c,
            stopping_rule=self.stopping_rule,
            stop_k=self.stop_k,
            initial_state=self.initial_state,
            occupation_window=self.N_c - self.window[0],
        )

    def spectrum(self, N: int | None = None):
        return exact_spectrum(self.model(N))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _parse_value(kind: str, raw: str):
    if kind == "float":
        return float(raw)
    if kind == "int":
        return int(raw)
    if kind == "str":
        return raw
    if kind == "bool":
        low = raw.lower()
        if low not in ("true", "false"):
            raise ValueError(f"expected true or false, got {raw!r}")
        return low == "true"
    if kind == "floats":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if kind == "ints":
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if kind == "mask":
        if set(raw) - {"0", "1"}:
            raise ValueError(f"bath_mask must be a string of 0/1, got {raw!r}")
        return tuple(ch == "1" for ch in raw)
    raise AssertionError(kind)


def parse_text(text: str) -> RunConfig:
    values: dict = {}
    where: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {where[key]})")
        name, kind = _KEYS[key]
        try:
            values[name] = _parse_value(kind, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        where[key] = lineno
    missing = [k for k in REQUIRED if k not in values]
    if "p_err" not in values and "eta_e" not in values:
        missing.append("p_err|eta_e")
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))
    if "p_err" in values and "eta_e" in values:
        raise ConfigError(
            f"line {max(where['p_err'], where['eta_e'])}: p_err (line {where['p_err']}) and "
            f"eta_e (line {where['eta_e']}) are mutually exclusive"
        )
    try:
        return RunConfig(**values, text=text)
    except ConfigError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def parse_config(source) -> RunConfig:
    """Parse a config file path, inline text, or a preset name prefixed with ``preset:``."""
    if isinstance(source, str) and source.startswith("preset:"):
        return preset(source[len("preset:"):])
    if isinstance(source, str) and ("=" in source or "\n" in source or not source.strip()):
        return parse_text(source)
    try:
        with open(source) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {source}: {exc}") from exc
    return parse_text(text)


_BASE = """\
N = 8
boundary = periodic
N_tau = 101
T = 6
B_i = 5
B_f = 0.7
g_0 = 0.5
N_c = 100
N_init = 1000
seed = 1
"""

PRESETS = {
    "fig2a": "J = 1\nh_x = 1\nh_z = 0.2\np_err = 0\n" + _BASE,
    "fig2b": "J = 1\nh_x = 1\nh_z = 0.2\neta_e = 0.02\n" + _BASE,
    "fig3": "J = 1\nh_x = 0.5\nh_z = 0\neta_e = 0.02\neta_grid = 0.002, 0.005, 0.01, 0.02\n" + _BASE,
    "fig3-pm": "J = 0.5\nh_x = 1\nh_z = 0\neta_e = 0.02\neta_grid = 0.002, 0.005, 0.01, 0.02\n" + _BASE,
    "fig3-ni": "J = 0.4\nh_x = 0.5\nh_z = 0.8\neta_e = 0.02\neta_grid = 0.002, 0.005, 0.01, 0.02\n" + _BASE,
    "fig4": "J = 1\nh_x = 0.5\nh_z = 0\neta_e = 0.01\nsize_grid = 4, 6, 8, 10\n" + _BASE,
    "fig4-pm": "J = 0.5\nh_x = 1\nh_z = 0\neta_e = 0.01\nsize_grid = 4, 6, 8, 10\n" + _BASE,
    "fig5": "J = 1\nh_x = 0.5\nh_z = 0\nboundary = open\ntrap_bond = 3\nJ_trap = 0.33\neta_e = 0.02\n"
    + _BASE.replace("boundary = periodic\n", ""),
    "fig6": "J = 0.5\nh_x = 1\nh_z = 0\neta_e = 0.2\n" + _BASE,
    "fig6-fm": "J = 1\nh_x = 0.5\nh_z = 0\neta_e = 0.2\n" + _BASE,
    "fig6-ni": "J = 1\nh_x = 1\nh_z = 0.2\neta_e = 0.2\n" + _BASE,
    "fig7": "J = 1\nh_x = 1\np_err = 0\nramp = protocol\nomega = -1\n"
    "T_grid = 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000\n"
    + _BASE.replace("B_i = 5\nB_f = 0.7\ng_0 = 0.5\n", "B_i = 1\nB_f = 0.001\ng_0 = 1\n"),
    "fig8": "J = 1\nh_x = 1\np_err = 0\nramp = linear\nomega = 1, 2\n"
    "T_grid = 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000\n"
    + _BASE.replace("B_f = 0.7\ng_0 = 0.5\n", "B_f = 0\ng_0 = 1\n"),
    "fig9": "J = 1\nh_x = 0.5\nh_z = 0\nJ_x = 0.2\neta_e = 0.02\neta_grid = 0.002, 0.005, 0.01, 0.02\n" + _BASE,
    "fig9c": "J = 0.4\nh_x = 0.7\nh_z = 0\nJ_x = 0.1\neta_e = 0.02\neta_grid = 0.002, 0.005, 0.01, 0.02\n" + _BASE,
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return parse_text(PRESETS[name])
