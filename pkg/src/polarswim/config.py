"""Run configuration: a sectioned ``key = value`` text format.

Sections and keys (``*`` marks required keys, everything else has the
default shown)::

    [model]        epsilon*  mu2=1  gamma2=0  lambda2=1  alpha=1  beta=0
                   kappa=0  strict=false
    [coupling]     mu1_tilde=1  gamma1_tilde=0  lambda1_tilde=1
    [grid]         n*  dim=3  box=6.283185307179586
    [time]         t_end=1  dt=(stable_dt estimate)  dt_max=0.001  sample_every=1
    [init]         seed=0  spectrum=power  amplitude=0.5  k0=1  slope=4
    [output]       dir=out  snapshots=true
    [diagnostics]  energy=true  apriori_check=true  gronwall_delta=0.1  gronwall_c=1

``n`` and ``box`` take one value or a comma separated list, one per axis.
Comments start with ``#``. The ``power`` spectrum is
``amplitude * (1 + (k/k0)^2)^(-slope/2)``, ``gauss`` is
``amplitude * exp(-(k/k0)^2 / 2)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np

from .params import BaseCoefficients, ModelParams, ParameterError, apply_coupling
from .spectral import Grid, random_solenoidal_field

__all__ = [
    "ConfigError",
    "InitSpectrum",
    "RunConfig",
    "parse_config",
    "load_config",
    "dump_config",
    "initial_field",
]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class InitSpectrum:
    kind: str = "power"
    amplitude: float = 0.5
    k0: float = 1.0
    slope: float = 4.0

    def __call__(self, k: np.ndarray) -> np.ndarray:
        x = np.asarray(k) / self.k0
        if self.kind == "power":
            return self.amplitude * (1.0 + x**2) ** (-0.5 * self.slope)
        return self.amplitude * np.exp(-0.5 * x**2)


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    dt: float
    t_end: float
    seed: int
    init_spectrum: InitSpectrum
    sample_every: int = 1
    dt_max: float = 1e-3
    dt_from_estimate: bool = False
    out_dir: str = "out"
    snapshots: bool = True
    energy: bool = True
    apriori_check: bool = True
    gronwall_delta: float = 0.1
    gronwall_c: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt!r}")
        if not self.t_end >= self.dt:
            raise ConfigError(f"t_end must be >= dt, got t_end={self.t_end!r}, dt={self.dt!r}")
        if self.sample_every < 1:
            raise ConfigError("sample_every must be >= 1")
        if not 0 < self.gronwall_delta <= 1:
            raise ConfigError("gronwall_delta must lie in (0, 1]")
        if not self.gronwall_c > 0:
            raise ConfigError("gronwall_c must be > 0")


_FLOAT = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_INT = re.compile(r"^[+-]?\d+$")


def _float(text: str, line: int) -> float:
    if not _FLOAT.match(text):
        raise ConfigError(f"expected a number, got {text!r}", line)
    return float(text)


def _int(text: str, line: int) -> int:
    if not _INT.match(text):
        raise ConfigError(f"expected an integer, got {text!r}", line)
    return int(text)


def _bool(text: str, line: int) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected true or false, got {text!r}", line)


def _float_or_auto(text: str, line: int):
    return "auto" if text.strip().lower() == "auto" else _float(text, line)


def _list(conv):
    def parse(text: str, line: int):
        return tuple(conv(part.strip(), line) for part in text.split(","))
    return parse


def _word(choices=None):
    def parse(text: str, line: int) -> str:
        if choices is not None and text not in choices:
            raise ConfigError(f"expected one of {sorted(choices)}, got {text!r}", line)
        return text
    return parse


# (section, key) -> (parser, default); default None marks a required key
_SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {
        "epsilon": (_float, None),
        "mu2": (_float, 1.0),
        "gamma2": (_float, 0.0),
        "lambda2": (_float, 1.0),
        "alpha": (_float, 1.0),
        "beta": (_float, 0.0),
        "kappa": (_float, 0.0),
        "strict": (_bool, False),
    },
    "coupling": {
        "mu1_tilde": (_float, 1.0),
        "gamma1_tilde": (_float, 0.0),
        "lambda1_tilde": (_float, 1.0),
    },
    "grid": {
        "dim": (_int, 3),
        "n": (_list(_int), None),
        "box": (_list(_float), (2 * math.pi,)),
    },
    "time": {
        "t_end": (_float, 1.0),
        "dt": (_float_or_auto, "auto"),
        "dt_max": (_float, 1e-3),
        "sample_every": (_int, 1),
    },
    "init": {
        "seed": (_int, 0),
        "spectrum": (_word({"power", "gauss"}), "power"),
        "amplitude": (_float, 0.5),
        "k0": (_float, 1.0),
        "slope": (_float, 4.0),
    },
    "output": {
        "dir": (_word(), "out"),
        "snapshots": (_bool, True),
    },
    "diagnostics": {
        "energy": (_bool, True),
        "apriori_check": (_bool, True),
        "gronwall_delta": (_float, 0.1),
        "gronwall_c": (_float, 1.0),
    },
}


def _read(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    raw: dict[str, dict[str, tuple[str, int]]] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            raw.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        if key in raw[section]:
            first = raw[section][key][1]
            raise ConfigError(
                f"duplicate key {key!r} in [{section}] (lines {first} and {lineno})", lineno
            )
        raw[section][key] = (value, lineno)
    return raw


def _values(raw) -> dict[str, dict[str, object]]:
    out: dict[str, dict[str, object]] = {}
    for section, schema in _SCHEMA.items():
        vals = {}
        given = raw.get(section, {})
        for key, (conv, default) in schema.items():
            if key in given:
                text, lineno = given[key]
                vals[key] = conv(text, lineno)
            elif default is None:
                raise ConfigError(f"missing required key {key!r} in [{section}]")
            else:
                vals[key] = default
        out[section] = vals
    return out


def parse_config(text: str, seed: int | None = None) -> tuple[RunConfig, ModelParams]:
    """Parse a configuration document; ``seed`` overrides ``[init] seed``."""
    v = _values(_read(text))
    m, cpl, g, tm, ini, outp, diag = (v[s] for s in (
        "model", "coupling", "grid", "time", "init", "output", "diagnostics"))
    try:
        base = BaseCoefficients(
            mu1_tilde=cpl["mu1_tilde"], gamma1_tilde=cpl["gamma1_tilde"],
            lambda1_tilde=cpl["lambda1_tilde"], mu2=m["mu2"], gamma2=m["gamma2"],
            lambda2=m["lambda2"], alpha=m["alpha"], beta=m["beta"], kappa=m["kappa"],
        )
        params = apply_coupling(base, m["epsilon"], strict=m["strict"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    dim = g["dim"]
    for key in ("n", "box"):
        if len(g[key]) not in (1, dim):
            raise ConfigError(f"[grid] {key} needs 1 or {dim} values, got {len(g[key])}")
    try:
        grid = Grid(dim, g["n"] if len(g["n"]) > 1 else g["n"][0],
                    g["box"] if len(g["box"]) > 1 else g["box"][0])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    spectrum = InitSpectrum(ini["spectrum"], ini["amplitude"], ini["k0"], ini["slope"])
    if not (spectrum.amplitude >= 0 and spectrum.k0 > 0):
        raise ConfigError("[init] needs amplitude >= 0 and k0 > 0")
    if not tm["dt_max"] > 0:
        raise ConfigError("dt_max must be > 0")
    cfg_seed = ini["seed"] if seed is None else int(seed)
    auto = tm["dt"] == "auto"
    cfg = RunConfig(
        grid=grid, dt=min(tm["dt_max"], tm["t_end"]) if auto else tm["dt"], t_end=tm["t_end"], seed=cfg_seed,
        init_spectrum=spectrum, sample_every=tm["sample_every"], dt_max=tm["dt_max"],
        dt_from_estimate=auto, out_dir=outp["dir"], snapshots=outp["snapshots"],
        energy=diag["energy"], apriori_check=diag["apriori_check"],
        gronwall_delta=diag["gronwall_delta"], gronwall_c=diag["gronwall_c"],
    )
    if auto:
        from .timestep import stable_dt

        dt = stable_dt(grid, params, initial_field(cfg), dt_max=tm["dt_max"])
        cfg = replace(cfg, dt=min(dt, cfg.t_end))
    return cfg, params


def load_config(path, seed: int | None = None) -> tuple[RunConfig, ModelParams]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), seed=seed)


def initial_field(cfg: RunConfig) -> np.ndarray:
    return random_solenoidal_field(cfg.grid, cfg.seed, cfg.init_spectrum)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: RunConfig, params: ModelParams) -> str:
    """Canonical text with every default materialised and keys sorted."""
    b = params.base
    sections = {
        "model": {
            "epsilon": params.epsilon, "mu2": b.mu2, "gamma2": b.gamma2,
            "lambda2": b.lambda2, "alpha": b.alpha, "beta": b.beta, "kappa": b.kappa,
            "strict": params.strict_analysis_mode,
        },
        "coupling": {
            "mu1_tilde": b.mu1_tilde, "gamma1_tilde": b.gamma1_tilde,
            "lambda1_tilde": b.lambda1_tilde,
        },
        "grid": {"dim": cfg.grid.dim, "n": cfg.grid.n, "box": cfg.grid.box},
        "time": {
            "t_end": cfg.t_end, "dt": cfg.dt, "dt_max": cfg.dt_max,
            "sample_every": cfg.sample_every,
        },
        "init": {
            "seed": cfg.seed, "spectrum": cfg.init_spectrum.kind,
            "amplitude": cfg.init_spectrum.amplitude, "k0": cfg.init_spectrum.k0,
            "slope": cfg.init_spectrum.slope,
        },
        "output": {"dir": cfg.out_dir, "snapshots": cfg.snapshots},
        "diagnostics": {
            "energy": cfg.energy, "apriori_check": cfg.apriori_check,
            "gronwall_delta": cfg.gronwall_delta, "gronwall_c": cfg.gronwall_c,
        },
    }
    lines = []
    for name in _SCHEMA:
        lines.append(f"[{name}]")
        for key in sorted(sections[name]):
            lines.append(f"{key} = {_fmt(sections[name][key])}")
        lines.append("")
    return "\n".join(lines)
