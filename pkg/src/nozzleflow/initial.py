"""Raw (unmollified) initial data presets on a grid.

Presets describe the conserved pair of the run's mode: (rho, m) for
isentropic gas, (n, J) for isothermal gas. `area_weighted=True` turns a
physical (rho, u) description into (n, J) = (A rho, A rho u).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nozzleflow.errors import ConfigError
from nozzleflow.fields import FieldState, Grid


def smooth_bump(r):
    """(1 - r^2)^3 on |r| < 1, zero outside; C2 with unit peak."""
    r = np.asarray(r, dtype=float)
    return np.where(np.abs(r) < 1.0, (1.0 - r * r) ** 3, 0.0)


def _state(grid: Grid, density, velocity, area=None) -> FieldState:
    density = np.broadcast_to(np.asarray(density, dtype=float), (grid.n_cells,)).copy()
    velocity = np.broadcast_to(np.asarray(velocity, dtype=float), (grid.n_cells,)).copy()
    if area is not None:
        density = density * area(grid.nodes)
    return FieldState(0.0, density, density * velocity)


def constant(grid: Grid, density: float = 1.0, velocity: float = 0.0, area=None) -> FieldState:
    return _state(grid, density, velocity, area)


def riemann_step(grid: Grid, left=(1.0, 0.0), right=(0.5, 0.0), x0: float = 0.0,
                 area=None) -> FieldState:
    """Piecewise constant (density, velocity) with the jump at x0."""
    x = grid.nodes
    on_left = x < x0
    density = np.where(on_left, left[0], right[0])
    velocity = np.where(on_left, left[1], right[1])
    return _state(grid, density, velocity, area)


def bump(grid: Grid, background=(1.0, 0.0), peak=(2.0, 0.0), center: float = 0.0,
         width: float = 1.0, area=None) -> FieldState:
    """Background (density, velocity) plus a smooth compact bump reaching `peak`."""
    s = smooth_bump((grid.nodes - center) / width)
    density = background[0] + (peak[0] - background[0]) * s
    velocity = background[1] + (peak[1] - background[1]) * s
    return _state(grid, density, velocity, area)


def tabulated(grid: Grid, x, density, velocity, area=None) -> FieldState:
    """Linear interpolation of sampled (density, velocity), held constant
    beyond the samples."""
    x = np.asarray(x, dtype=float)
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise ConfigError("tabulated initial data needs >= 2 ascending samples")
    nodes = grid.nodes
    return _state(grid, np.interp(nodes, x, density), np.interp(nodes, x, velocity), area)


def load_tabulated(path):
    """Three-column "x density velocity" text file, '#' comments."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 3:
        raise ConfigError(f"{path}: expected three columns 'x density velocity'")
    return data[:, 0], data[:, 1], data[:, 2]


@dataclass(frozen=True)
class InitialSpec:
    preset: str
    params: dict

    def build(self, grid: Grid, area=None) -> FieldState:
        p = dict(self.params)
        if self.preset == "constant":
            return constant(grid, p.get("density", 1.0), p.get("velocity", 0.0), area)
        if self.preset == "riemann-step":
            return riemann_step(grid, (p.get("density_left", 1.0), p.get("velocity_left", 0.0)),
                                (p.get("density_right", 0.5), p.get("velocity_right", 0.0)),
                                p.get("x0", 0.0), area)
        if self.preset == "bump":
            return bump(grid, (p.get("density", 1.0), p.get("velocity", 0.0)),
                        (p.get("peak_density", 2.0), p.get("peak_velocity", 0.0)),
                        p.get("center", 0.0), p.get("width", 1.0), area)
        if self.preset == "tabulated":
            x, d, v = load_tabulated(p["file"])
            return tabulated(grid, x, d, v, area)
        raise ConfigError(f"unknown initial preset {self.preset!r}")
