"""Control functions, modified Riemann invariants and invariant-region checks.

For the isentropic system the ceilings are

    phi = C0 + eps*|b'|_inf*t + int_{-inf}^x b,   psi = C0 + eps*|b'|_inf*t + int_x^inf b

with b = M0*a0 and M0 = C0*(3 theta^2 + theta)/(1 - theta). The isothermal
system uses M in place of C0, b = a0, and weight 2 on both the integral and
the time term. A solution stays in the region while w - phi <= 0 and
z + psi >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nozzleflow.errors import AdmissibilityError
from nozzleflow.fields import FieldState, Grid
from nozzleflow.gas import GasModel, Mode, to_riemann
from nozzleflow.geometry import NozzleGeometry

MAX_LISTED_VIOLATIONS = 20


@dataclass(frozen=True)
class ControlFunctionSet:
    mode: Mode
    grid: Grid
    b: np.ndarray
    b_left: np.ndarray  # int_{x_min}^x b, trapezoid
    b_l1: float
    b_prime_sup: float
    level: float  # C0 (isentropic) or M (isothermal)
    epsilon: float
    M0: float = float("nan")
    weight: float = 1.0
    constraints: dict = field(default_factory=dict)

    @property
    def C0(self) -> float:
        return self.level

    @property
    def M(self) -> float:
        return self.level

    @property
    def b_right(self) -> np.ndarray:
        return self.b_l1 - self.b_left

    @property
    def b_prime(self) -> np.ndarray:
        return np.gradient(self.b, self.grid.dx)

    def time_term(self, t: float) -> float:
        return self.weight * self.epsilon * self.b_prime_sup * t

    def phi(self, t: float, x=None) -> np.ndarray:
        left = self.b_left if x is None else np.interp(x, self.grid.nodes, self.b_left)
        return self.level + self.time_term(t) + self.weight * left

    def psi(self, t: float, x=None) -> np.ndarray:
        right = self.b_right if x is None else np.interp(x, self.grid.nodes, self.b_right)
        return self.level + self.time_term(t) + self.weight * right

    @property
    def ceiling(self) -> float:
        """Time-independent bound C with w <= C and z >= -C."""
        if self.mode is Mode.ISOTHERMAL:
            return self.level + 2.0 * self.b_l1 + 2.0
        return self.level + self.b_l1 + 1.0

    def to_dict(self):
        return {
            "mode": self.mode.value,
            "level": self.level,
            "M0": None if np.isnan(self.M0) else self.M0,
            "b_l1": self.b_l1,
            "b_prime_sup": self.b_prime_sup,
            "ceiling": self.ceiling,
            "constraints": self.constraints,
        }


def _cumulative(b: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(b)
    out[1:] = np.cumsum(0.5 * (b[1:] + b[:-1])) * dx
    return out


def _initial_level(g: GasModel, initial: FieldState, margin_rel: float, margin_abs: float):
    w, z = to_riemann(g, initial.density, initial.momentum)
    level = max(float(np.max(w)), float(-np.min(z)))
    return level + margin_rel * abs(level) + margin_abs


def constraint_set(theta: float, C0: float, M0: float, a0_l1: float) -> dict:
    """The three upper bounds on ||a0||_1 under which the coupling and
    source conditions of the maximum principle hold."""
    bounds = {
        "unit": 1.0,
        "source": 2.0 * theta * C0 / (theta * C0 + M0),
        "coupling": (1.0 - theta) / theta - (C0 + 1.0) / M0,
    }
    slack = 1e-12
    return {
        "a0_l1": a0_l1,
        "bounds": bounds,
        "satisfied": {k: bool(a0_l1 <= v * (1 + slack)) for k, v in bounds.items()},
    }


def minimal_c0(theta: float, a0_l1: float) -> float:
    """Smallest C0 for which the coupling bound admits a0_l1 when
    M0 = C0*(3 theta^2 + theta)/(1 - theta)."""
    k = (3.0 * theta**2 + theta) / (1.0 - theta)
    r = (1.0 - theta) / theta - a0_l1
    denom = k * r - 1.0
    if denom <= 0.0:
        return float("inf")
    return 1.0 / denom


def build_controls_isentropic(geom: NozzleGeometry, g: GasModel, initial: FieldState,
                              epsilon: float, grid: Grid, *, margin_rel: float = 1e-6,
                              margin_abs: float = 1e-6, lift_c0: bool = True,
                              override: bool = False) -> ControlFunctionSet:
    if g.mode is not Mode.ISENTROPIC:
        raise ValueError("isentropic controls need an isentropic gas")
    theta = g.theta
    C0 = _initial_level(g, initial, margin_rel, margin_abs)
    lifted = False
    if lift_c0:
        need = minimal_c0(theta, geom.a0_l1)
        if np.isfinite(need) and need > C0:
            C0 = need * (1.0 + 1e-9)
            lifted = True
    M0 = C0 * (3.0 * theta**2 + theta) / (1.0 - theta)
    cons = constraint_set(theta, C0, M0, geom.a0_l1)
    cons["c0_lifted"] = lifted
    failing = [k for k, ok in cons["satisfied"].items() if not ok]
    if failing and not override:
        raise AdmissibilityError(
            f"||a0||_1 = {geom.a0_l1:.6g} violates the {', '.join(failing)} bound(s) "
            f"{ {k: cons['bounds'][k] for k in failing} } at C0 = {C0:.6g}, M0 = {M0:.6g}")
    b = M0 * geom.a0(grid.nodes)
    return _assemble(Mode.ISENTROPIC, grid, b, C0, epsilon, M0=M0, weight=1.0,
                     constraints=cons)


def build_controls_isothermal(geom: NozzleGeometry, initial: FieldState, epsilon: float,
                              grid: Grid, *, margin_rel: float = 1e-6,
                              margin_abs: float = 1e-6,
                              override: bool = False) -> ControlFunctionSet:
    g = GasModel.isothermal()
    M = _initial_level(g, initial, margin_rel, margin_abs)
    if geom.a0_l1 > 0.5 and not override:
        raise AdmissibilityError(f"||b||_1 = ||a0||_1 = {geom.a0_l1:.6g} exceeds 1/2")
    b = geom.a0(grid.nodes)
    cons = {"a0_l1": geom.a0_l1, "bounds": {"half": 0.5},
            "satisfied": {"half": bool(geom.a0_l1 <= 0.5)}}
    return _assemble(Mode.ISOTHERMAL, grid, b, M, epsilon, weight=2.0, constraints=cons)


def build_controls(geom, g, initial, epsilon, grid, **kw) -> ControlFunctionSet:
    if g.is_isothermal:
        kw.pop("lift_c0", None)
        return build_controls_isothermal(geom, initial, epsilon, grid, **kw)
    return build_controls_isentropic(geom, g, initial, epsilon, grid, **kw)


def _assemble(mode, grid, b, level, epsilon, *, M0=float("nan"), weight, constraints):
    b = np.asarray(b, dtype=float)
    b_left = _cumulative(b, grid.dx)
    b_prime_sup = float(np.max(np.abs(np.gradient(b, grid.dx)))) if b.size > 1 else 0.0
    return ControlFunctionSet(mode, grid, b, b_left, float(b_left[-1]), b_prime_sup,
                              float(level), float(epsilon), float(M0), weight, constraints)


def modified_invariants(state: FieldState, c: ControlFunctionSet, g: GasModel):
    w, z = to_riemann(g, state.density, state.momentum)
    return w - c.phi(state.t), z + c.psi(state.t)


@dataclass
class BoundReport:
    t: float
    max_wbar: float
    min_zbar: float
    min_density: float
    max_abs_u: float
    max_w: float
    min_z: float
    ceiling: float
    tol: float
    floor_pass: bool
    passed: bool
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "t": self.t,
            "max_wbar": self.max_wbar,
            "min_zbar": self.min_zbar,
            "min_density": self.min_density,
            "max_abs_u": self.max_abs_u,
            "max_w": self.max_w,
            "min_z": self.min_z,
            "ceiling": self.ceiling,
            "tol": self.tol,
            "pass": self.passed,
            "violations": [list(v) for v in self.violations],
        }


def density_floor_check(density, mode: Mode, delta: float = 0.0):
    density = np.asarray(density, dtype=float)
    lo = float(np.min(density))
    if Mode(mode) is Mode.ISOTHERMAL and delta > 0.0:
        return lo, bool(lo >= delta * (1.0 - 1e-10))
    return lo, bool(lo > 0.0)


def check_bounds(state: FieldState, c: ControlFunctionSet, g: GasModel, tol: float,
                 delta: float = 0.0) -> BoundReport:
    min_density, floor_ok = density_floor_check(state.density, g.mode, delta)
    if not min_density > 0.0:
        i = int(np.argmin(state.density))
        return BoundReport(state.t, np.inf, -np.inf, min_density, np.inf, np.inf, -np.inf,
                           c.ceiling, tol, False, False, [(i, "density", min_density)])
    w, z = to_riemann(g, state.density, state.momentum)
    wbar = w - c.phi(state.t)
    zbar = z + c.psi(state.t)
    C = c.ceiling

    violations = []
    for name, bad, values in (
        ("wbar", wbar > tol, wbar),
        ("zbar", zbar < -tol, zbar),
        ("w_ceiling", w > C, w),
        ("z_ceiling", z < -C, z),
    ):
        for i in np.flatnonzero(bad)[:MAX_LISTED_VIOLATIONS]:
            violations.append((int(i), name, float(values[i])))
    if not floor_ok:
        i = int(np.argmin(state.density))
        violations.append((i, "density", min_density))

    return BoundReport(
        t=float(state.t),
        max_wbar=float(np.max(wbar)),
        min_zbar=float(np.min(zbar)),
        min_density=min_density,
        max_abs_u=float(np.max(np.abs(state.momentum / state.density))),
        max_w=float(np.max(w)),
        min_z=float(np.min(z)),
        ceiling=C,
        tol=tol,
        floor_pass=floor_ok,
        passed=not violations,
        violations=violations,
    )
