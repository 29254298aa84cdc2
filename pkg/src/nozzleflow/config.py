"""Run configuration: "key = value" lines grouped under "[section]" headers.

Keys before the first header belong to the top-level run block (mode, gamma,
t_end, seed). Every key is validated against SCHEMA; errors carry the line
number. The README lists every key with its default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from nozzleflow.errors import ConfigError

_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _float(v: str) -> float:
    return float(v)


def _int(v: str) -> int:
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _bool(v: str) -> bool:
    try:
        return _BOOL[v.lower()]
    except KeyError:
        raise ValueError(f"{v!r} is not a boolean") from None


def _floats(v: str) -> tuple:
    return tuple(float(s) for s in v.replace(",", " ").split())


def _str(v: str) -> str:
    return v.strip().strip('"')


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "mode": (_str, None),
        "gamma": (_float, None),
        "t_end": (_float, 1.0),
        "seed": (_int, 0),
    },
    "geometry": {
        "kind": (_str, "constant"),
        "x_min": (_float, -20.0),
        "x_max": (_float, 20.0),
        "area": (_float, 1.0),
        "kappa": (_float, 0.0),
        "x0": (_float, 0.0),
        "width": (_float, 1.0),
        "a_inf": (_float, 2.0),
        "depth": (_float, 0.5),
        "file": (_str, ""),
        "a0_l1_target": (_float, None),  # fit depth/kappa to this ||a0||_1
    },
    "initial": {
        "preset": (_str, "constant"),
        "density": (_float, 1.0),
        "velocity": (_float, 0.0),
        "density_left": (_float, 1.0),
        "velocity_left": (_float, 0.0),
        "density_right": (_float, 0.5),
        "velocity_right": (_float, 0.0),
        "peak_density": (_float, 2.0),
        "peak_velocity": (_float, 0.0),
        "center": (_float, 0.0),
        "width": (_float, 1.0),
        "x0": (_float, 0.0),
        "file": (_str, ""),
        "area_weighted": (_bool, False),
    },
    "solver": {
        "n_cells": (_int, 1024),
        "epsilon": (_float, 0.05),
        "delta": (_float, None),
        "cfl": (_float, 0.5),
        "diff_safety": (_float, 0.5),
        "snapshot_stride": (_int, 10),
        "snapshot_dt": (_float, None),
        "bc": (_str, "far_field"),
        "mollifier_width": (_float, None),
    },
    "controls": {
        "c0_margin": (_float, 1e-6),
        "a0_scale": (_float, 1.0),
        "admissibility_override": (_bool, False),
    },
    "outputs": {
        "directory": (_str, "out"),
        "formats": (_str, "csv,json"),
    },
    "entropy": {
        "family": (_str, "mechanical"),
        "xi": (_float, 0.1),
        "n_bumps": (_int, 20),
        "rx_min": (_float, 0.3),
        "rx_max": (_float, 1.5),
        "rt_min": (_float, 0.1),
        "rt_max": (_float, 0.5),
        "margin": (_float, 0.1),
    },
    "sweep": {
        "epsilons": (_floats, (0.1, 0.05, 0.025, 0.0125, 0.00625)),
        "cells_per_epsilon": (_float, 8.0),
        "fixed_grid": (_bool, False),
        "margin": (_float, 0.1),
    },
    "max_principle": {
        "corpus": (_str, "max_principle"),
    },
}


@dataclass
class RunConfig:
    sections: dict[str, dict[str, Any]]
    source: Path | None = None
    warnings: list = field(default_factory=list)

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    @property
    def mode(self) -> str:
        return self.sections["run"]["mode"]

    @property
    def gamma(self) -> float:
        return self.sections["run"]["gamma"]

    def to_dict(self) -> dict:
        return {k: dict(v) for k, v in self.sections.items()}

    def to_text(self) -> str:
        lines = []
        for sec, values in self.sections.items():
            if sec != "run":
                lines.append(f"\n[{sec}]")
            for k, v in values.items():
                if v is None:
                    continue
                if isinstance(v, tuple):
                    v = ", ".join(repr(x) for x in v)
                elif isinstance(v, bool):
                    v = str(v).lower()
                lines.append(f"{k} = {v}")
        return "\n".join(lines).lstrip() + "\n"


def parse_text(text: str, source=None) -> RunConfig:
    values: dict[str, dict[str, Any]] = {s: {} for s in SCHEMA}
    where: dict[tuple, int] = {}
    section = "run"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", line=lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line=lineno)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", line=lineno)
        parser = SCHEMA[section][key][0]
        try:
            values[section][key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}", line=lineno) from None
        where[(section, key)] = lineno

    for sec, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            values[sec].setdefault(key, default)

    cfg = RunConfig(values, Path(source) if source else None)
    _validate(cfg, where)
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_text(text, path)


def _validate(cfg: RunConfig, where: dict):
    def fail(section, key, msg):
        raise ConfigError(msg, line=where.get((section, key)))

    run = cfg["run"]
    if run["mode"] not in ("isentropic", "isothermal"):
        fail("run", "mode", f"mode must be 'isentropic' or 'isothermal', got {run['mode']!r}")
    gamma = run["gamma"]
    if run["mode"] == "isothermal":
        if gamma is None:
            run["gamma"] = 1.0
        elif gamma != 1.0:
            fail("run", "gamma", f"isothermal mode needs gamma = 1, got {gamma}")
    else:
        if gamma is None:
            fail("run", "mode", "isentropic mode needs gamma")
        if not 1.0 < gamma < 3.0:
            fail("run", "gamma", f"isentropic gamma must lie in the open range (1, 3), got {gamma}")
    if not run["t_end"] > 0:
        fail("run", "t_end", "t_end must be positive")

    sol = cfg["solver"]
    if sol["n_cells"] < 16:
        fail("solver", "n_cells", "n_cells must be >= 16")
    if not sol["epsilon"] > 0:
        fail("solver", "epsilon", "epsilon must be positive")
    for key in ("cfl", "diff_safety"):
        if not 0 < sol[key] <= 1:
            fail("solver", key, f"{key} must lie in (0, 1]")
    if sol["bc"] not in ("far_field", "zero_gradient"):
        fail("solver", "bc", "bc must be 'far_field' or 'zero_gradient'")
    if sol["delta"] is not None:
        if run["mode"] != "isothermal":
            fail("solver", "delta", "delta applies to isothermal mode only")
        if sol["delta"] < 0:
            fail("solver", "delta", "delta must be nonnegative")
        if not math.isclose(sol["delta"], sol["epsilon"] ** 3):
            cfg.warnings.append(f"delta = {sol['delta']} overrides the default "
                                f"epsilon^3 = {sol['epsilon'] ** 3:.6g}")

    geo = cfg["geometry"]
    if geo["kind"] not in ("constant", "expmonotone", "laval", "tabulated"):
        fail("geometry", "kind", f"unknown geometry kind {geo['kind']!r}")
    if not geo["x_max"] > geo["x_min"]:
        fail("geometry", "x_max", "x_max must exceed x_min")
    if geo["kind"] == "tabulated" and not geo["file"]:
        fail("geometry", "file", "tabulated geometry needs a file")
    if cfg["controls"]["a0_scale"] < 1.0:
        fail("controls", "a0_scale", "a0_scale must be >= 1")

    ini = cfg["initial"]
    if ini["preset"] not in ("constant", "riemann-step", "bump", "tabulated"):
        fail("initial", "preset", f"unknown initial preset {ini['preset']!r}")
    if ini["preset"] == "tabulated" and not ini["file"]:
        fail("initial", "file", "tabulated initial data needs a file")

    fam = cfg["entropy"]["family"]
    if fam not in ("mechanical", "xi"):
        fail("entropy", "family", "entropy family must be 'mechanical' or 'xi'")
    eps = cfg["sweep"]["epsilons"]
    if len(eps) < 3 or any(b >= a for a, b in zip(eps, eps[1:])):
        fail("sweep", "epsilons", "epsilons must be >= 3 strictly descending values")


def resolve_path(cfg: RunConfig, value: str) -> Path:
    p = Path(value)
    if not p.is_absolute() and cfg.source is not None:
        p = cfg.source.parent / p
    return p
