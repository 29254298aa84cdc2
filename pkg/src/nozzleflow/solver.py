"""Viscous approximations of nozzle flow: central differences + Heun stepping.

Isentropic (rho, m):
    rho_t + m_x       = a m                        + eps rho_xx
    m_t + (m^2/rho + p)_x = a m^2/rho              + eps m_xx - 2 eps b rho_x

Isothermal (n, J) = (A rho, A m) with density lift delta:
    n_t + (J - delta J/n)_x = eps n_xx
    J_t + (J^2/n - delta J^2/(2 n^2) + P_delta(n))_x
        = -a (n - delta) + 2 b delta J/n - 4 eps b n_x + eps J_xx
with P_delta(n) = (n - delta) - delta ln(n/delta).
"""
from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from nozzleflow.errors import (AdmissibilityError, BlowUpError, ConfigError, DomainError,
                               FloorViolationError, NumericError)
from nozzleflow.fields import FieldState, Grid, SolutionTrace
from nozzleflow.gas import GasModel, eigenvalues, eigenvalues_delta, to_riemann
from nozzleflow.geometry import NozzleGeometry, check_admissible

log = logging.getLogger(__name__)

Forcing = Callable[[np.ndarray, float], tuple]


class Boundary(str, enum.Enum):
    FAR_FIELD = "far_field"
    ZERO_GRADIENT = "zero_gradient"


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 0.05
    t_end: float = 1.0
    delta: Optional[float] = None  # isothermal only; None means epsilon**3
    cfl: float = 0.5
    diff_safety: float = 0.5
    snapshot_stride: int = 10
    snapshot_dt: Optional[float] = None  # if set, overrides the stride
    bc: Boundary = Boundary.FAR_FIELD

    def __post_init__(self):
        object.__setattr__(self, "bc", Boundary(self.bc))
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not 0 < self.cfl <= 1 or not 0 < self.diff_safety <= 1:
            raise ConfigError("cfl and diff_safety must lie in (0, 1]")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be a positive integer")
        if self.snapshot_dt is not None and not self.snapshot_dt > 0:
            raise ConfigError("snapshot_dt must be positive")
        if self.delta is not None and self.delta < 0:
            raise ConfigError("delta must be nonnegative")

    def delta_for(self, g: GasModel) -> float:
        if not g.is_isothermal:
            return 0.0
        return self.epsilon**3 if self.delta is None else float(self.delta)


# -- initial data -----------------------------------------------------------

@dataclass(frozen=True)
class MollifierSpec:
    """Standard bump exp(-1/(1-r^2)) scaled to [-width, width]; None -> epsilon."""

    width: Optional[float] = None

    def weights(self, dx: float, epsilon: float) -> np.ndarray:
        width = max(self.width if self.width is not None else epsilon, 2.0 * dx)
        half = int(math.floor(width / dx))
        k = np.arange(-half, half + 1) * dx / width
        w = np.zeros_like(k)
        inside = np.abs(k) < 1.0
        w[inside] = np.exp(-1.0 / (1.0 - k[inside] ** 2))
        return w / w.sum()


def mollify_initial(raw: FieldState, mollifier: MollifierSpec, g: GasModel,
                    cfg: SolverConfig, dx: float) -> FieldState:
    """((rho0 + eps) * j, m0 * j); the isothermal lift is delta instead of eps.
    The convolution extends the data by its end values."""
    if np.any(raw.density < 0):
        i = int(np.argmax(raw.density < 0))
        raise DomainError(f"negative raw density {raw.density[i]} at node {i}")
    lift = cfg.delta_for(g) if g.is_isothermal else cfg.epsilon
    w = mollifier.weights(dx, cfg.epsilon)
    half = w.size // 2

    def conv(f):
        return np.convolve(np.pad(f, half, mode="edge"), w, mode="valid")

    return FieldState(raw.t, conv(raw.density + lift), conv(raw.momentum))


# -- right-hand sides --------------------------------------------------------

def _nodes_values(f, grid: Grid) -> np.ndarray:
    if callable(f):
        return np.asarray(f(grid.nodes), dtype=float)
    if f is None:
        return np.zeros(grid.n_cells)
    out = np.asarray(f, dtype=float)
    return np.full(grid.n_cells, float(out)) if out.ndim == 0 else out


def _check_finite(state: FieldState):
    bad = ~(np.isfinite(state.density) & np.isfinite(state.momentum))
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericError(f"non-finite state at node {i} (t = {state.t:.6g}): "
                           f"density={state.density[i]!r}, momentum={state.momentum[i]!r}")


def _ddx(f, dx):
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    return out


def _lap(f, dx):
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dx**2
    return out


def P_delta(n, delta: float):
    """int_delta^n (t - delta)/t dt; reduces to n when delta = 0."""
    n = np.asarray(n, dtype=float)
    if delta == 0.0:
        return n.copy() if n.ndim else float(n)
    if delta < 0 or np.any(n <= 0):
        raise DomainError("P_delta needs delta >= 0 and n > 0")
    out = (n - delta) - delta * np.log(n / delta)
    return out if n.ndim else float(out)


def rhs_isentropic(state: FieldState, g: GasModel, grid: Grid, a, b, epsilon: float,
                   forcing: Optional[Forcing] = None):
    _check_finite(state)
    rho, m = state.density, state.momentum
    if np.any(rho <= 0):
        i = int(np.argmax(rho <= 0))
        raise FloorViolationError(f"density {rho[i]!r} <= 0", state.t, i)
    a = _nodes_values(a, grid)
    b = _nodes_values(b, grid)
    dx = grid.dx
    rho_x = _ddx(rho, dx)
    flux2 = m * m / rho + g.p0 * np.power(rho, g.gamma)
    drho = -_ddx(m, dx) + a * m + epsilon * _lap(rho, dx)
    dm = (-_ddx(flux2, dx) + a * m * m / rho + epsilon * _lap(m, dx)
          - 2.0 * epsilon * b * rho_x)
    drho[0] = drho[-1] = dm[0] = dm[-1] = 0.0
    if forcing is not None:
        fr, fm = forcing(grid.nodes, state.t)
        drho[1:-1] += np.asarray(fr)[1:-1]
        dm[1:-1] += np.asarray(fm)[1:-1]
    return drho, dm


def rhs_isothermal(state: FieldState, grid: Grid, a, b, epsilon: float, delta: float,
                   forcing: Optional[Forcing] = None):
    _check_finite(state)
    n, J = state.density, state.momentum
    if delta > 0:
        low = n < delta * (1.0 - 1e-10)
        if low.any():
            i = int(np.argmax(low))
            raise FloorViolationError(f"n = {n[i]!r} < delta = {delta!r}", state.t, i)
    elif np.any(n <= 0):
        i = int(np.argmax(n <= 0))
        raise FloorViolationError(f"n = {n[i]!r} <= 0", state.t, i)
    a = _nodes_values(a, grid)
    b = _nodes_values(b, grid)
    dx = grid.dx
    u = J / n
    flux1 = J - delta * u
    flux2 = J * u - 0.5 * delta * u * u + P_delta(n, delta)
    dn = -_ddx(flux1, dx) + epsilon * _lap(n, dx)
    dJ = (-_ddx(flux2, dx) - a * (n - delta) + 2.0 * b * delta * u
          - 4.0 * epsilon * b * _ddx(n, dx) + epsilon * _lap(J, dx))
    dn[0] = dn[-1] = dJ[0] = dJ[-1] = 0.0
    if forcing is not None:
        fn, fJ = forcing(grid.nodes, state.t)
        dn[1:-1] += np.asarray(fn)[1:-1]
        dJ[1:-1] += np.asarray(fJ)[1:-1]
    return dn, dJ


# -- time stepping -----------------------------------------------------------

def stable_dt(state: FieldState, g: GasModel, cfg: SolverConfig, dx: float,
              t_limit: Optional[float] = None) -> float:
    delta = cfg.delta_for(g)
    if g.is_isothermal and delta > 0:
        l1, l2 = eigenvalues_delta(state.density, state.momentum, delta)
    else:
        l1, l2 = eigenvalues(g, state.density, state.momentum)
    speed = float(max(np.max(np.abs(l1)), np.max(np.abs(l2))))
    if not math.isfinite(speed):
        raise NumericError("non-finite characteristic speed")
    dt = cfg.diff_safety * dx * dx / (2.0 * cfg.epsilon)
    if speed > 0:
        dt = min(dt, cfg.cfl * dx / speed)
    if t_limit is not None:
        dt = min(dt, t_limit - state.t)
    return dt


@dataclass
class ViscousSystem:
    """Everything the time stepper needs besides the state."""

    gas: GasModel
    grid: Grid
    a: np.ndarray
    b: np.ndarray
    epsilon: float
    delta: float = 0.0
    bc: Boundary = Boundary.FAR_FIELD
    forcing: Optional[Forcing] = None
    boundary_values: Optional[tuple] = None  # pinned (density, momentum) at both ends

    def rhs(self, state: FieldState):
        if self.gas.is_isothermal:
            return rhs_isothermal(state, self.grid, self.a, self.b, self.epsilon,
                                  self.delta, self.forcing)
        return rhs_isentropic(state, self.gas, self.grid, self.a, self.b, self.epsilon,
                              self.forcing)

    def apply_bc(self, density, momentum):
        if self.bc is Boundary.ZERO_GRADIENT:
            density[0], density[-1] = density[1], density[-2]
            momentum[0], momentum[-1] = momentum[1], momentum[-2]
        elif self.boundary_values is not None:
            (d0, d1), (m0, m1) = self.boundary_values
            density[0], density[-1] = d0, d1
            momentum[0], momentum[-1] = m0, m1
        return density, momentum

    def floor_check(self, state: FieldState):
        d = state.density
        bad = d < self.delta * (1.0 - 1e-10) if (self.gas.is_isothermal and self.delta > 0) \
            else ~(d > 0)
        if bad.any():
            i = int(np.argmax(bad))
            raise FloorViolationError(
                f"density {d[i]!r} fell below the floor at node {i}, t = {state.t:.6g}",
                state.t, i)


def advance(state: FieldState, dt: float, system: ViscousSystem) -> FieldState:
    """One Heun (explicit trapezoid) step."""
    k1r, k1m = system.rhs(state)
    mid = FieldState(state.t + dt, *system.apply_bc(state.density + dt * k1r,
                                                    state.momentum + dt * k1m))
    system.floor_check(mid)
    k2r, k2m = system.rhs(mid)
    density = state.density + 0.5 * dt * (k1r + k2r)
    momentum = state.momentum + 0.5 * dt * (k1m + k2m)
    out = FieldState(state.t + dt, *system.apply_bc(density, momentum))
    _check_finite(out)
    system.floor_check(out)
    return out


# -- driver -------------------------------------------------------------------

class SnapshotCSVWriter:
    """Incremental writer for the "t,x,density,momentum,w,z,phi,psi" schema."""

    HEADER = ("t", "x", "density", "momentum", "w", "z", "phi", "psi")

    def __init__(self, path, g: GasModel, grid: Grid, controls=None):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(self.HEADER)
        self.g, self.grid, self.controls = g, grid, controls

    def __call__(self, state: FieldState):
        w, z = to_riemann(self.g, state.density, state.momentum)
        if self.controls is not None:
            phi, psi = self.controls.phi(state.t), self.controls.psi(state.t)
        else:
            phi = psi = np.full_like(w, np.nan)
        t = np.full_like(w, state.t)
        rows = np.column_stack([t, self.grid.nodes, state.density, state.momentum, w, z, phi, psi])
        self._writer.writerows(rows.tolist())

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def padding_factor(initial: FieldState, system: ViscousSystem, t_end: float) -> float:
    """Distance from the disturbed region to the nearest boundary divided by
    the distance the fastest wave travels by t_end (> 1 means the far-field
    boundaries are never reached by the inviscid signal)."""
    x = system.grid.nodes
    d, m = initial.density, initial.momentum
    disturbed = ((np.abs(system.a) > 1e-12) | (np.abs(d - d[0]) > 1e-12) | (np.abs(m - m[0]) > 1e-12)) \
        & ((np.abs(system.a) > 1e-12) | (np.abs(d - d[-1]) > 1e-12) | (np.abs(m - m[-1]) > 1e-12))
    if not disturbed.any():
        return math.inf
    idx = np.flatnonzero(disturbed)
    gap = min(x[idx[0]] - system.grid.x_min, system.grid.x_max - x[idx[-1]])
    if system.gas.is_isothermal and system.delta > 0:
        l1, l2 = eigenvalues_delta(d, m, system.delta)
    else:
        l1, l2 = eigenvalues(system.gas, d, m)
    speed = float(max(np.max(np.abs(l1)), np.max(np.abs(l2))))
    return math.inf if speed == 0 else float(gap / (speed * t_end))


def monitor_tolerance(grid: Grid, dt_max: float) -> float:
    return 10.0 * (grid.dx + dt_max)


def run(initial: FieldState, g: GasModel, geom: NozzleGeometry, controls, cfg: SolverConfig,
        grid: Grid, *, override: bool = False, forcing: Optional[Forcing] = None,
        on_snapshot: Optional[Callable[[FieldState], None]] = None,
        monitor: bool = True) -> SolutionTrace:
    """Integrate from `initial` (already mollified) to cfg.t_end.

    `controls` is a ControlFunctionSet (its b enters the equations) or None,
    meaning b = 0 and no invariant-region monitoring.
    """
    from nozzleflow.monitor import check_bounds  # monitor imports fields only

    if not override and not check_admissible(geom, g).admissible:
        rep = check_admissible(geom, g)
        raise AdmissibilityError(f"||a0||_1 = {rep.a0_l1:.6g} exceeds the threshold "
                                 f"{rep.threshold:.6g} for gamma = {g.gamma}")
    if controls is not None:
        smallness = cfg.epsilon * controls.b_prime_sup * cfg.t_end
        if smallness > 1.0 and not override:
            raise AdmissibilityError(f"eps*|b'|_inf*T = {smallness:.4g} > 1")
        b = controls.b
    else:
        b = np.zeros(grid.n_cells)
    delta = cfg.delta_for(g)
    warnings = []
    if g.is_isothermal and cfg.delta is not None and not math.isclose(cfg.delta, cfg.epsilon**3):
        warnings.append(f"delta = {cfg.delta} overrides the default eps^3 = {cfg.epsilon**3}")

    system = ViscousSystem(
        gas=g, grid=grid, a=np.asarray(geom.a(grid.nodes), dtype=float), b=b,
        epsilon=cfg.epsilon, delta=delta, bc=cfg.bc, forcing=forcing,
        boundary_values=((initial.density[0], initial.density[-1]),
                         (initial.momentum[0], initial.momentum[-1])))
    state = FieldState(float(initial.t), initial.density.copy(), initial.momentum.copy())
    _check_finite(state)
    system.floor_check(state)

    dt_cap = cfg.diff_safety * grid.dx**2 / (2.0 * cfg.epsilon)
    tol = monitor_tolerance(grid, dt_cap)
    trace = SolutionTrace(grid, meta={
        "epsilon": cfg.epsilon, "delta": delta, "t_end": cfg.t_end, "dx": grid.dx,
        "tol": tol, "padding_factor": padding_factor(state, system, cfg.t_end),
        "warnings": warnings,
    })

    def record(s: FieldState):
        trace.snapshots.append(s)
        if monitor and controls is not None:
            trace.reports.append(check_bounds(s, controls, g, tol, delta))
        if on_snapshot is not None:
            on_snapshot(s)

    record(state)
    size0 = float(np.max(np.abs(state.density)) + np.max(np.abs(state.momentum)))
    last_size = size0
    t0, t_end = state.t, cfg.t_end
    k_snap = 1
    steps = 0
    dt_max = 0.0
    done = lambda t: t >= t_end * (1.0 - 1e-15)
    while not done(state.t):
        if cfg.snapshot_dt is not None:
            limit = min(t0 + k_snap * cfg.snapshot_dt, t_end)
        else:
            limit = t_end
        dt = stable_dt(state, g, cfg, grid.dx, t_limit=limit)
        dt_max = max(dt_max, dt)
        new = advance(state, dt, system)
        # land exactly on scheduled times so reruns share the step sequence
        t_new = limit if abs(new.t - limit) <= 1e-12 * max(1.0, abs(limit)) else new.t
        state = FieldState(t_new, new.density, new.momentum)
        steps += 1
        if cfg.snapshot_dt is not None:
            take = state.t >= limit
            if take:
                k_snap += 1
        else:
            take = steps % cfg.snapshot_stride == 0
        take = take or done(state.t)
        if take:
            size = float(np.max(np.abs(state.density)) + np.max(np.abs(state.momentum)))
            if size > 2.0 * last_size and size > 10.0 * size0:
                record(state)
                raise BlowUpError(f"|state| jumped from {last_size:.4g} to {size:.4g} "
                                  f"by t = {state.t:.6g}", trace)
            last_size = size
            record(state)

    realized = monitor_tolerance(grid, dt_max)
    if monitor and controls is not None and realized < tol:
        # re-grade with the tolerance of the step sizes actually taken
        trace.reports = [check_bounds(s, controls, g, realized, delta) for s in trace.snapshots]
    trace.meta.update(steps=steps, dt_max=dt_max, tol=min(tol, realized))
    return trace
