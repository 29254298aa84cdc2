"""Empirical maximum principle for weakly coupled parabolic systems

    p_t + mu1 p_x = eps p_xx + a11 p + a12 q + R1
    q_t + mu2 q_x = eps q_xx + a21 p + a22 q + R2

with p(., 0) <= 0 <= q(., 0). The sign pattern persists when
  (C1) a12 <= 0 on {p = 0, q >= 0} and a21 <= 0 on {q = 0, p <= 0};
  (C2) R1 <= 0 on {p = 0, q >= 0} and R2 >= 0 on {q = 0, p <= 0}.

Every coefficient is a callable f(x, t, p, q, px, qx) -> array. The isentropic
nozzle system is supplied by `rst_coefficients`, with p, q the modified
Riemann invariants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from nozzleflow.errors import BlowUpError, ConfigError, DomainError, NumericError
from nozzleflow.fields import FieldState, Grid
from nozzleflow.gas import GasModel, to_riemann

Coef = Callable[..., np.ndarray]


def zero(x, t, p, q, px, qx):
    return np.zeros(np.broadcast(x, p, q, px, qx).shape)


def const(c: float) -> Coef:
    def f(x, t, p, q, px, qx):
        return np.full(np.broadcast(x, p, q, px, qx).shape, float(c))
    return f


@dataclass
class ParabolicSystemSpec:
    name: str
    epsilon: float
    grid: Grid
    t_end: float
    p0: np.ndarray
    q0: np.ndarray
    mu1: Coef = zero
    mu2: Coef = zero
    a11: Coef = zero
    a12: Coef = zero
    a21: Coef = zero
    a22: Coef = zero
    R1: Coef = zero
    R2: Coef = zero
    # sampling ranges for the condition check: q in [0, q_max(x, t)] on p = 0,
    # p in [p_min(x, t), 0] on q = 0, gradients in [-grad_max, grad_max]
    q_max: Callable = lambda x, t: np.full_like(np.asarray(x, dtype=float), 1.0)
    p_min: Callable = lambda x, t: np.full_like(np.asarray(x, dtype=float), -1.0)
    grad_max: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        self.q0 = np.asarray(self.q0, dtype=float)
        if np.any(self.p0 > 0) or np.any(self.q0 < 0):
            raise ConfigError(f"{self.name}: initial data need p0 <= 0 <= q0 at every node")


@dataclass
class PQTrace:
    x: np.ndarray
    times: list = field(default_factory=list)
    p: list = field(default_factory=list)
    q: list = field(default_factory=list)


@dataclass
class SignReport:
    max_p: float
    min_q: float
    tol: float
    preserved: bool
    first_violation: Optional[tuple] = None  # (x, t, component)

    def to_dict(self):
        return {"max_p": self.max_p, "min_q": self.min_q, "tol": self.tol,
                "preserved": self.preserved,
                "first_violation": list(self.first_violation) if self.first_violation else None}


def _dx_neumann(f, dx):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    out[0] = out[-1] = 0.0
    return out


def _lap_neumann(f, dx):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dx**2
    out[0] = 2.0 * (f[1] - f[0]) / dx**2
    out[-1] = 2.0 * (f[-2] - f[-1]) / dx**2
    return out


def _rhs(spec: ParabolicSystemSpec, x, t, p, q):
    dx = spec.grid.dx
    px, qx = _dx_neumann(p, dx), _dx_neumann(q, dx)
    args = (x, t, p, q, px, qx)
    mu1, mu2 = spec.mu1(*args), spec.mu2(*args)
    dp = (-mu1 * px + spec.epsilon * _lap_neumann(p, dx) + spec.a11(*args) * p
          + spec.a12(*args) * q + spec.R1(*args))
    dq = (-mu2 * qx + spec.epsilon * _lap_neumann(q, dx) + spec.a21(*args) * p
          + spec.a22(*args) * q + spec.R2(*args))
    speed = float(max(np.max(np.abs(mu1)), np.max(np.abs(mu2))))
    return dp, dq, speed


def integrate_system(spec: ParabolicSystemSpec, cfl: float = 0.5, diff_safety: float = 0.5,
                     n_snapshots: int = 100, tol: Optional[float] = None):
    """Heun integration with Neumann (ghost = neighbour) ends; returns
    (PQTrace, SignReport)."""
    x = spec.grid.nodes
    dx = spec.grid.dx
    p, q = spec.p0.copy(), spec.q0.copy()
    trace = PQTrace(x)
    trace.times.append(0.0)
    trace.p.append(p.copy())
    trace.q.append(q.copy())
    scale = 1.0 + float(max(np.max(np.abs(p)), np.max(np.abs(q))))
    t, k = 0.0, 1
    snap_dt = spec.t_end / n_snapshots
    dt_diff = diff_safety * dx * dx / (2.0 * spec.epsilon)
    dt_max = 0.0
    while t < spec.t_end * (1 - 1e-15):
        target = min(k * snap_dt, spec.t_end)
        dp1, dq1, speed = _rhs(spec, x, t, p, q)
        dt = dt_diff if speed == 0 else min(dt_diff, cfl * dx / speed)
        dt = min(dt, target - t)
        dt_max = max(dt_max, dt)
        p1, q1 = p + dt * dp1, q + dt * dq1
        dp2, dq2, _ = _rhs(spec, x, t + dt, p1, q1)
        p = p + 0.5 * dt * (dp1 + dp2)
        q = q + 0.5 * dt * (dq1 + dq2)
        t = target if abs(t + dt - target) <= 1e-12 * max(1.0, target) else t + dt
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise NumericError(f"{spec.name}: non-finite values at t = {t:.6g}")
        if t >= target:
            trace.times.append(t)
            trace.p.append(p.copy())
            trace.q.append(q.copy())
            k += 1
            size = float(max(np.max(np.abs(p)), np.max(np.abs(q))))
            if size > 1e6 * scale:
                raise BlowUpError(f"{spec.name}: |p|,|q| reached {size:.3g} by t = {t:.6g}",
                                  trace)
    if tol is None:
        tol = 10.0 * (dx + dt_max)
    return trace, sign_report(trace, tol)


def sign_report(trace: PQTrace, tol: float) -> SignReport:
    P, Q = np.stack(trace.p), np.stack(trace.q)
    first = None
    for i, t in enumerate(trace.times):
        if P[i].max() > tol:
            first = (float(trace.x[int(np.argmax(P[i]))]), float(t), "p")
            break
        if Q[i].min() < -tol:
            first = (float(trace.x[int(np.argmin(Q[i]))]), float(t), "q")
            break
    return SignReport(float(P.max()), float(Q.min()), tol, first is None, first)


# -- condition sampling -----------------------------------------------------------

@dataclass
class ConditionReport:
    c1_pass: bool
    c2_pass: bool
    worst_c1: tuple  # (coefficient, x, t, p, q, value)
    worst_c2: tuple
    samples: int

    @property
    def passed(self) -> bool:
        return self.c1_pass and self.c2_pass

    def to_dict(self):
        return {"c1_pass": self.c1_pass, "c2_pass": self.c2_pass,
                "worst_c1": list(self.worst_c1), "worst_c2": list(self.worst_c2),
                "samples": self.samples}


def check_C1_C2(spec: ParabolicSystemSpec, nx: int = 64, nt: int = 9, nlevel: int = 9,
                ngrad: int = 5, tol: float = 1e-12) -> ConditionReport:
    """Sample a12, R1 on {p = 0, 0 <= q <= q_max} and a21, R2 on
    {q = 0, p_min <= p <= 0} over a tensor grid of (x, t, level, zeta, eta).
    Worst entries are the largest a12, a21, R1 and the smallest R2 (as
    signed violations: positive means the condition fails)."""
    xs = np.linspace(spec.grid.x_min, spec.grid.x_max, nx)
    ts = np.linspace(0.0, spec.t_end, nt)
    lv = np.linspace(0.0, 1.0, nlevel, endpoint=False)  # level 1 is vacuum
    gs = np.linspace(-spec.grad_max, spec.grad_max, ngrad)
    X, T, L, Z, E = np.meshgrid(xs, ts, lv, gs, gs, indexing="ij")
    X, T, L, Z, E = (a.ravel() for a in (X, T, L, Z, E))
    zeros = np.zeros_like(X)

    def batched(f, p, q):
        # coefficients take scalar t; evaluate per time slice
        out = np.empty_like(X)
        for t in ts:
            sel = T == t
            out[sel] = f(X[sel], t, p[sel], q[sel], Z[sel], E[sel])
        if not np.all(np.isfinite(out)):
            i = int(np.argmax(~np.isfinite(out)))
            raise NumericError(f"{spec.name}: non-finite coefficient at x = {X[i]}, t = {T[i]}")
        return out

    def q_level():
        out = np.empty_like(X)
        for t in ts:
            sel = T == t
            out[sel] = L[sel] * spec.q_max(X[sel], t)
        return out

    def p_level():
        out = np.empty_like(X)
        for t in ts:
            sel = T == t
            out[sel] = L[sel] * spec.p_min(X[sel], t)
        return out

    qv, pv = q_level(), p_level()
    checks = {
        "a12": (batched(spec.a12, zeros, qv), zeros, qv, 1.0),
        "a21": (batched(spec.a21, pv, zeros), pv, zeros, 1.0),
        "R1": (batched(spec.R1, zeros, qv), zeros, qv, 1.0),
        "R2": (batched(spec.R2, pv, zeros), pv, zeros, -1.0),
    }
    worst = {}
    for name, (vals, p, q, sign) in checks.items():
        s = sign * vals
        i = int(np.argmax(s))
        worst[name] = (name, float(X[i]), float(T[i]), float(p[i]), float(q[i]), float(vals[i]),
                       float(s[i]))

    def pick(a, b):
        return a if a[-1] >= b[-1] else b

    w1, w2 = pick(worst["a12"], worst["a21"]), pick(worst["R1"], worst["R2"])
    return ConditionReport(w1[-1] <= tol, w2[-1] <= tol, w1[:-1], w2[:-1], X.size)


# -- the transformed nozzle system -----------------------------------------------------

def rst_coefficients(state: FieldState, controls, g: GasModel, geom, epsilon: float,
                     t_end: float, name: str = "nozzle") -> ParabolicSystemSpec:
    """Modified-invariant system of the isentropic viscous nozzle equations.
    The density is reconstructed from (p, q) via rho^theta = (p - q + phi + psi)/2
    and its gradient via (rho^theta)_x = (p_x - q_x)/2."""
    if g.is_isothermal:
        raise DomainError("the transformed system is implemented for isentropic gas")
    grid = controls.grid
    th = g.theta
    nodes = grid.nodes
    b_nodes = controls.b
    bp_nodes = controls.b_prime
    a_nodes = np.asarray(geom.a(nodes), dtype=float)
    bl_nodes = controls.b_left
    weight, level = controls.weight, controls.level
    t_rate = controls.weight * epsilon * controls.b_prime_sup

    def fields(x, t):
        b = np.interp(x, nodes, b_nodes)
        bp = np.interp(x, nodes, bp_nodes)
        a = np.interp(x, nodes, a_nodes)
        left = np.interp(x, nodes, bl_nodes)
        phi = level + t_rate * t + weight * left
        psi = level + t_rate * t + weight * (controls.b_l1 - left)
        return a, b, bp, phi, psi

    def density_terms(x, t, p, q, px, qx):
        a, b, bp, phi, psi = fields(x, t)
        s = 0.5 * (p - q + phi + psi)  # rho^theta
        if np.any(s <= 0):
            raise DomainError("reconstructed density is not positive")
        s_x = 0.5 * (px - qx)
        rx_over_r = s_x / (th * s)  # rho_x / rho
        curv = epsilon * (th + 1.0) / th * s_x**2 / s  # eps th (th+1) rho^(th-2) rho_x^2
        w, z = p + phi, q - psi
        lam1 = 0.5 * (w + z) - th * 0.5 * (w - z)
        lam2 = 0.5 * (w + z) + th * 0.5 * (w - z)
        return dict(a=a, b=b, bp=bp, phi=phi, psi=psi, rx=rx_over_r, curv=curv,
                    lam1=lam1, lam2=lam2)

    def mu1(x, t, p, q, px, qx):
        d = density_terms(x, t, p, q, px, qx)
        return d["lam2"] - 2.0 * epsilon * d["rx"]

    def mu2(x, t, p, q, px, qx):
        d = density_terms(x, t, p, q, px, qx)
        return d["lam1"] - 2.0 * epsilon * d["rx"]

    def a11(x, t, p, q, px, qx):
        a, b, _, phi, _ = fields(x, t)
        return -((1 + th) / 2 * b - th * (p + 2 * phi) / 4 * a)

    def a12(x, t, p, q, px, qx):
        a, b, _, _, psi = fields(x, t)
        return -((1 - th) / 2 * b + th * (q - 2 * psi) / 4 * a)

    def a21(x, t, p, q, px, qx):
        a, b, _, phi, _ = fields(x, t)
        return (1 - th) / 2 * (-b) - th * (p + 2 * phi) / 4 * a

    def a22(x, t, p, q, px, qx):
        a, b, _, _, psi = fields(x, t)
        return (1 + th) / 2 * (-b) + th * (q - 2 * psi) / 4 * a

    def R1(x, t, p, q, px, qx):
        d = density_terms(x, t, p, q, px, qx)
        phi, psi, b = d["phi"], d["psi"], d["b"]
        return (epsilon * d["bp"] - t_rate - (1 + th) / 2 * phi * b + (1 - th) / 2 * psi * b
                - d["curv"] + th * (phi**2 - psi**2) / 4 * d["a"])

    def R2(x, t, p, q, px, qx):
        d = density_terms(x, t, p, q, px, qx)
        phi, psi, b = d["phi"], d["psi"], d["b"]
        return (epsilon * d["bp"] + t_rate - (1 - th) / 2 * phi * b + (1 + th) / 2 * psi * b
                + d["curv"] - th * (phi**2 - psi**2) / 4 * d["a"])

    w, z = to_riemann(g, state.density, state.momentum)
    p0 = w - controls.phi(state.t)
    q0 = z + controls.psi(state.t)
    s0 = np.exp(th * np.log(state.density))
    grad = float(np.max(np.abs(np.gradient(p0, grid.dx))) + np.max(np.abs(np.gradient(q0, grid.dx))))

    def q_max(x, t):  # z <= w, so q <= phi + psi when p = 0
        _, _, _, phi, psi = fields(x, t)
        return phi + psi

    def p_min(x, t):  # w >= z, so p >= -(phi + psi) when q = 0
        _, _, _, phi, psi = fields(x, t)
        return -(phi + psi)

    return ParabolicSystemSpec(
        name=name, epsilon=epsilon, grid=grid, t_end=t_end, p0=p0, q0=q0,
        mu1=mu1, mu2=mu2, a11=a11, a12=a12, a21=a21, a22=a22, R1=R1, R2=R2,
        q_max=q_max, p_min=p_min, grad_max=2.0 * max(grad, 1e-12),
        meta={"theta": th, "C0": controls.level, "M0": controls.M0,
              "a0_l1": controls.constraints.get("a0_l1"), "min_rho_theta": float(s0.min())},
    )


# -- barrier diagnostic ------------------------------------------------------------------

def barrier_lambda(spec: ParabolicSystemSpec, trace: PQTrace, n_samples: int = 2000,
                   seed: int = 0) -> dict:
    """Growth rate of the comparison function 2 M cosh(x)/cosh(N) e^(Lambda t)
    with M = sup|p| + sup|q|, N the domain half-width, and

    Lambda = 2 eps + sum sup|mu_i| + sum sup|a_ij| + C2 M (2e + 1) + 2 C3 M e

    where C2, C3 bound the p-minus-q directional derivatives of (a12, a21)
    and (R1, R2) on the box |p|, |q| <= M (1 + 4e). Sup-norms are measured
    on the trace and on random samples. Diagnostic only."""
    rng = np.random.default_rng(seed)
    P, Q = np.stack(trace.p), np.stack(trace.q)
    M = float(np.max(np.abs(P)) + np.max(np.abs(Q)))
    dx = spec.grid.dx
    x = trace.x
    sup = {k: 0.0 for k in ("mu1", "mu2", "a11", "a12", "a21", "a22")}
    for t, p, q in zip(trace.times, trace.p, trace.q):
        args = (x, t, p, q, _dx_neumann(p, dx), _dx_neumann(q, dx))
        for k in sup:
            sup[k] = max(sup[k], float(np.max(np.abs(getattr(spec, k)(*args)))))

    box = M * (1.0 + 4.0 * math.e)
    xs = rng.uniform(spec.grid.x_min, spec.grid.x_max, n_samples)
    t = float(rng.uniform(0.0, spec.t_end))
    ps, qs = rng.uniform(-box, box, n_samples), rng.uniform(-box, box, n_samples)
    zs = rng.uniform(-spec.grad_max, spec.grad_max, n_samples)
    es = rng.uniform(-spec.grad_max, spec.grad_max, n_samples)
    h = 1e-6 * max(1.0, box)

    def dir_derivative(f):
        try:
            fp = (f(xs, t, ps + h, qs, zs, es) - f(xs, t, ps - h, qs, zs, es)) / (2 * h)
            fq = (f(xs, t, ps, qs + h, zs, es) - f(xs, t, ps, qs - h, zs, es)) / (2 * h)
        except DomainError:
            return math.nan  # box leaves the physical state space
        return float(np.nanmax(np.abs(fp - fq)))

    C2 = max(dir_derivative(spec.a12), dir_derivative(spec.a21))
    C3 = max(dir_derivative(spec.R1), dir_derivative(spec.R2))
    lam = (2 * spec.epsilon + sup["mu1"] + sup["mu2"]
           + sup["a11"] + sup["a12"] + sup["a21"] + sup["a22"])
    if math.isfinite(C2) and math.isfinite(C3):
        lam += C2 * M * (2 * math.e + 1) + 2 * C3 * M * math.e
    N = 0.5 * (spec.grid.x_max - spec.grid.x_min)
    centre = 0.5 * (spec.grid.x_max + spec.grid.x_min)
    margin = math.inf
    for t, p, q in zip(trace.times, trace.p, trace.q):
        xi = 2 * M * np.cosh(x - centre) / math.cosh(N) * math.exp(lam * t)
        excursion = np.maximum(np.maximum(p, 0.0), np.maximum(-q, 0.0))
        margin = min(margin, float(np.min(xi - excursion)))
    return {"Lambda": lam, "M": M, "C2": C2, "C3": C3, "N": N, "margin": margin,
            "dominates": margin > 0}


# -- scenario corpus --------------------------------------------------------------------

def _bump(x, c=0.0, w=1.0):
    r = (x - c) / w
    return np.where(np.abs(r) < 1, (1 - r * r) ** 3, 0.0)


def synthetic_preset(preset: str, grid: Grid, epsilon: float = 0.1, t_end: float = 1.0,
                     **params) -> ParabolicSystemSpec:
    """Small library of hand-built systems. Names ending in a condition tag
    deliberately violate exactly that condition."""
    x = grid.nodes
    amp = params.get("amplitude", 1.0)
    dip, hill = -amp * _bump(x, -1.0, 2.0), amp * _bump(x, 1.0, 2.0)
    zeros = np.zeros_like(x)
    common = dict(name=preset, epsilon=epsilon, grid=grid, t_end=t_end)
    if preset == "heat":
        return ParabolicSystemSpec(p0=dip, q0=hill, **common)
    if preset == "transport":
        return ParabolicSystemSpec(p0=dip, q0=hill, mu1=const(1.0), mu2=const(-0.5),
                                   a11=const(-1.0), a22=const(0.5), **common)
    if preset == "coupled":
        return ParabolicSystemSpec(
            p0=dip, q0=hill, a12=const(-1.0), a21=const(-0.5),
            R1=lambda x, t, p, q, px, qx: -px**2 - 0.1 / (1 + x * x),
            R2=lambda x, t, p, q, px, qx: qx**2 + 0.1 / (1 + x * x), **common)
    if preset == "nonlinear":
        return ParabolicSystemSpec(
            p0=dip, q0=hill,
            mu1=lambda x, t, p, q, px, qx: q, mu2=lambda x, t, p, q, px, qx: p,
            a11=lambda x, t, p, q, px, qx: np.sin(x + t),
            a12=lambda x, t, p, q, px, qx: -0.5 - 1.0 / (1.0 + q * q),
            a21=lambda x, t, p, q, px, qx: -np.exp(-p * p),
            a22=lambda x, t, p, q, px, qx: np.cos(x - t),
            R1=lambda x, t, p, q, px, qx: -q * q / (1 + q * q) * _bump(x, 0.0, 3.0),
            R2=lambda x, t, p, q, px, qx: p * p / (1 + p * p) * _bump(x, 0.0, 3.0), **common)
    # violators
    if preset == "violate-R1":
        return ParabolicSystemSpec(p0=zeros, q0=hill, R1=const(1.0), **common)
    if preset == "violate-R2":
        return ParabolicSystemSpec(p0=dip, q0=zeros, R2=const(-1.0), **common)
    if preset == "violate-a12":
        return ParabolicSystemSpec(p0=zeros, q0=amp + zeros, a12=const(1.0), **common)
    if preset == "violate-a21":
        return ParabolicSystemSpec(p0=-amp + zeros, q0=zeros, a21=const(1.0), **common)
    raise ConfigError(f"unknown synthetic preset {preset!r}")


SYNTHETIC_PASSING = ("heat", "transport", "coupled", "nonlinear")
VIOLATORS = ("violate-R1", "violate-R2", "violate-a12", "violate-a21")


def nozzle_preset(gamma: float, geometry: str, a0_fraction: float = 0.8,
                  epsilon: float = 0.05, t_end: float = 1.0, n_cells: int = 576,
                  domain=(-18.0, 18.0), a0_scale_factor: float = 1.0,
                  peak_w: float = 2.0) -> ParabolicSystemSpec:
    """Transformed system from a mollified bump state on a nozzle whose
    ||a0||_1 is a0_fraction of the admissibility threshold (fractions above 1
    exercise the conditions past the threshold). a0_scale_factor inflates the
    envelope a0 alone after fitting, leaving a unchanged."""
    from nozzleflow import initial
    from nozzleflow.geometry import (admissibility_threshold, derive_a,
                                     expmonotone_with_a0_l1, laval_with_a0_l1)
    from nozzleflow.monitor import build_controls_isentropic
    from nozzleflow.solver import MollifierSpec, SolverConfig, mollify_initial

    g = GasModel.isentropic(gamma)
    target = a0_fraction * admissibility_threshold(g)
    if geometry == "laval":
        geom = laval_with_a0_l1(target, domain)
    elif geometry == "expmonotone":
        geom = expmonotone_with_a0_l1(target, domain)
    else:
        raise ConfigError(f"unknown nozzle geometry {geometry!r}")
    if a0_scale_factor != 1.0:
        geom = derive_a(geom.spec, domain, a0_scale=a0_scale_factor)
    grid = Grid(domain[0], domain[1], n_cells)
    raw = initial.bump(grid, (1.0, 0.0), (peak_w ** (1 / g.theta), 0.0), 0.0, 2.0)
    cfg = SolverConfig(epsilon=epsilon, t_end=t_end)
    init = mollify_initial(raw, MollifierSpec(), g, cfg, grid.dx)
    # past the threshold the constraint set fails by construction; build anyway
    controls = build_controls_isentropic(geom, g, init, epsilon, grid,
                                         override=a0_scale_factor != 1.0 or a0_fraction > 1.0)
    spec = rst_coefficients(init, controls, g, geom, epsilon, t_end,
                            name=f"nozzle-{geometry}-g{gamma:.4g}")
    spec.meta.update(gamma=gamma, geometry=geometry, a0_fraction=a0_fraction,
                     a0_scale_factor=a0_scale_factor)
    return spec


# Scenario files: "key = value" lines. Keys:
#   kind = synthetic | nozzle
#   preset (synthetic) | gamma, geometry, a0_fraction (nozzle)
#   expect = preserve | violate
#   epsilon, t_end, n_cells, x_min, x_max (optional)

def parse_scenario(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    for key in ("kind", "expect"):
        if key not in out:
            raise ConfigError(f"{path}: missing key {key!r}")
    if out["expect"] not in ("preserve", "violate"):
        raise ConfigError(f"{path}: expect must be 'preserve' or 'violate'")
    return out


def build_scenario(sc: dict) -> ParabolicSystemSpec:
    eps = float(sc.get("epsilon", 0.1 if sc["kind"] == "synthetic" else 0.05))
    t_end = float(sc.get("t_end", 1.0))
    if sc["kind"] == "synthetic":
        grid = Grid(float(sc.get("x_min", -6.0)), float(sc.get("x_max", 6.0)),
                    int(sc.get("n_cells", 256)))
        return synthetic_preset(sc["preset"], grid, eps, t_end)
    if sc["kind"] == "nozzle":
        return nozzle_preset(float(sc["gamma"]), sc["geometry"],
                             float(sc.get("a0_fraction", 0.8)), eps, t_end,
                             int(sc.get("n_cells", 576)),
                             (float(sc.get("x_min", -18.0)), float(sc.get("x_max", 18.0))))
    raise ConfigError(f"unknown scenario kind {sc['kind']!r}")


@dataclass
class ScenarioResult:
    name: str
    expect: str
    conditions: ConditionReport
    signs: SignReport

    @property
    def ok(self) -> bool:
        if self.expect == "preserve":
            return self.conditions.passed and self.signs.preserved
        # a violator must be caught by both routes, each with a location
        return (not self.conditions.passed and not self.signs.preserved
                and self.signs.first_violation is not None)

    def to_dict(self):
        return {"name": self.name, "expect": self.expect, "ok": self.ok,
                "conditions": self.conditions.to_dict(), "signs": self.signs.to_dict()}


def run_scenario(sc: dict, name: str = "") -> ScenarioResult:
    spec = build_scenario(sc)
    cond = check_C1_C2(spec)
    _, signs = integrate_system(spec)
    return ScenarioResult(name or spec.name, sc["expect"], cond, signs)


def run_corpus(directory) -> list[ScenarioResult]:
    files = sorted(Path(directory).glob("*.scn"))
    if not files:
        raise ConfigError(f"no *.scn scenarios in {directory}")
    return [run_scenario(parse_scenario(f), f.stem) for f in files]
