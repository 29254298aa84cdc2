"""Entropy pairs and the two entropy functionals evaluated on solution traces.

Families:
  * mechanical energy (isentropic and isothermal);
  * kinetic weak entropies  eta = rho * int chi(u + rho^theta s) (1 - s^2)^lam ds,
    lam = (3 - gamma) / (2 (gamma - 1)), evaluated by Gauss-Jacobi quadrature;
  * isothermal xi-entropies eta = n^k exp(k xi u), k = 1/(1 - xi^2), q = (u + xi) eta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, roots_jacobi

from nozzleflow.errors import DomainError, NumericError, RangeError
from nozzleflow.fields import SolutionTrace
from nozzleflow.gas import GasModel

QUAD_RTOL = 1e-8
C1_BUMP = 6.0 / math.sqrt(5.0) * 0.8**2  # max |d/dr (1 - r^2)^3| = 1.7173


@dataclass
class EntropyPairValues:
    eta: np.ndarray
    q: np.ndarray
    eta_rho: np.ndarray  # d eta / d(rho or n)
    eta_m: np.ndarray  # d eta / d(m or J)
    q_rho: Optional[np.ndarray] = None
    q_m: Optional[np.ndarray] = None


@dataclass
class Hessian:
    rr: np.ndarray
    rm: np.ndarray
    mm: np.ndarray

    def form(self, dr, dm):
        return self.rr * dr * dr + 2.0 * self.rm * dr * dm + self.mm * dm * dm

    @property
    def det(self):
        return self.rr * self.mm - self.rm**2


def _positive(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError(f"{name} must be positive")
    return x


# -- mechanical pairs ---------------------------------------------------------

def mechanical_pair_isentropic(g: GasModel, rho, m) -> EntropyPairValues:
    rho = _positive(rho, "density")
    m = np.asarray(m, dtype=float)
    gam, p0 = g.gamma, g.p0
    u = m / rho
    r_gm1 = np.power(rho, gam - 1.0)
    eta = 0.5 * m * u + p0 * rho * r_gm1 / (gam - 1.0)
    q = 0.5 * m * u * u + gam * p0 * r_gm1 * m / (gam - 1.0)
    eta_rho = -0.5 * u * u + gam * p0 * r_gm1 / (gam - 1.0)
    q_rho = -u**3 + gam * p0 * r_gm1 * u
    q_m = 1.5 * u * u + gam * p0 * r_gm1 / (gam - 1.0)
    return EntropyPairValues(eta, q, eta_rho, u, q_rho, q_m)


def mechanical_hessian_isentropic(g: GasModel, rho, m) -> Hessian:
    rho = _positive(rho, "density")
    u = np.asarray(m, dtype=float) / rho
    return Hessian(u * u / rho + g.gamma * g.p0 * np.power(rho, g.gamma - 2.0),
                   -u / rho, 1.0 / rho)


def mechanical_pair_isothermal(n, J) -> EntropyPairValues:
    """eta = J^2/(2n) + n ln n with its compatible flux
    q = J^3/(2n^2) + J ln n + J (flux of (J, J^2/n + n))."""
    n = _positive(n, "n")
    J = np.asarray(J, dtype=float)
    u = J / n
    ln = np.log(n)
    eta = 0.5 * J * u + n * ln
    q = 0.5 * J * u * u + J * ln + J
    eta_n = -0.5 * u * u + ln + 1.0
    q_n = -u**3 + u
    q_J = 1.5 * u * u + ln + 1.0
    return EntropyPairValues(eta, q, eta_n, u, q_n, q_J)


def mechanical_hessian_isothermal(n, J) -> Hessian:
    n = _positive(n, "n")
    u = np.asarray(J, dtype=float) / n
    return Hessian(u * u / n + 1.0 / n, -u / n, 1.0 / n)


# -- weak entropies -----------------------------------------------------------

def kernel_lambda(gamma: float) -> float:
    return (3.0 - gamma) / (2.0 * (gamma - 1.0))


def kernel_mass(lam: float) -> float:
    """K = int_{-1}^{1} (1 - s^2)^lam ds = sqrt(pi) Gamma(lam+1) / Gamma(lam+3/2)."""
    return math.sqrt(math.pi) * math.exp(gammaln(lam + 1.0) - gammaln(lam + 1.5))


@dataclass(frozen=True)
class WeakEntropySpec:
    chi: Callable
    dchi: Callable
    d2chi: Optional[Callable] = None
    quad_nodes: int = 64

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], quad_nodes: int = 64) -> "WeakEntropySpec":
        """chi(xi) = sum_k coeffs[k] xi^k."""
        p = np.polynomial.Polynomial(coeffs)
        d1, d2 = p.deriv(1), p.deriv(2)
        return cls(p, d1, d2, quad_nodes)


def _jacobi(n: int, lam: float):
    s, w = roots_jacobi(n, lam, lam)
    return s, w


MIN_WEAK_GAMMA = 1.05


def _weak_integrals(spec: WeakEntropySpec, g: GasModel, rho, m, n_nodes: int, hessian: bool):
    lam = kernel_lambda(g.gamma)
    s, w = _jacobi(n_nodes, lam)
    rho = np.asarray(rho, dtype=float)[..., None]
    u = np.asarray(m, dtype=float)[..., None] / rho
    th = g.theta
    rt = np.exp(th * np.log(rho))
    xi = u + rt * s
    chi, dchi = spec.chi(xi), spec.dchi(xi)
    r = rho[..., 0]

    def I(f):
        return np.sum(f * w, axis=-1)

    vel = u + th * rt * s
    out = {
        "eta": r * I(chi),
        "q": r * I(vel * chi),
        "eta_m": I(dchi),
        "eta_rho": I(chi) + I(dchi * (th * rt * s - u)),
        "q_m": I(chi + vel * dchi),
        "q_rho": I(th * (1.0 + th) * rt * s * chi) + I((th * th * rt * rt * s * s - u * u) * dchi),
    }
    if hessian:
        if spec.d2chi is None:
            raise ValueError("Hessian needs d2chi")
        d2 = spec.d2chi(xi)
        c = th * rt * s - u
        out["h_mm"] = I(d2) / r
        out["h_rm"] = I(d2 * c) / r
        out["h_rr"] = (I(dchi * th * (1.0 + th) * rt * s) + I(d2 * c * c)) / r
    return out


def _checked(spec, g, rho, m, hessian):
    if g.is_isothermal or g.gamma < MIN_WEAK_GAMMA:
        raise DomainError(f"kinetic weak entropies need gamma >= {MIN_WEAK_GAMMA}")
    _positive(rho, "density")
    lo = _weak_integrals(spec, g, rho, m, spec.quad_nodes, hessian)
    hi = _weak_integrals(spec, g, rho, m, 2 * spec.quad_nodes, hessian)
    for key in lo:
        scale = np.maximum(np.abs(hi[key]), 1e-300)
        diff = np.abs(hi[key] - lo[key])
        bad = diff > QUAD_RTOL * scale + 1e-14
        if np.any(bad):
            raise NumericError(f"weak-entropy quadrature for {key} changed by "
                               f"{float(np.max(diff / scale)):.3e} relative on doubling nodes")
    return hi


def weak_entropy_pair(spec: WeakEntropySpec, g: GasModel, rho, m) -> EntropyPairValues:
    v = _checked(spec, g, rho, m, hessian=False)
    return EntropyPairValues(v["eta"], v["q"], v["eta_rho"], v["eta_m"], v["q_rho"], v["q_m"])


def weak_entropy_hessian(spec: WeakEntropySpec, g: GasModel, rho, m) -> Hessian:
    v = _checked(spec, g, rho, m, hessian=True)
    return Hessian(v["h_rr"], v["h_rm"], v["h_mm"])


# chi with |chi''| <= 1 used to probe how far weak-entropy Hessians stray from the mechanical one
UNIT_CURVATURE_CHIS = {
    "xi^2/2": WeakEntropySpec.polynomial([0.0, 0.0, 0.5]),
    "cos": WeakEntropySpec(np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
    "sin": WeakEntropySpec(np.sin, np.cos, lambda x: -np.sin(x)),
    "-cos": WeakEntropySpec(lambda x: -np.cos(x), np.sin, np.cos),
}


def domination_constant(g: GasModel, rng: np.random.Generator, n_states: int = 200,
                        rho_range=(0.1, 5.0), u_range=(-3.0, 3.0), chis=None) -> dict:
    """Measured sup of (d, H_weak d) / (d, H_mech d) over random states and
    directions, per chi; "c" is the max over the chi family."""
    chis = UNIT_CURVATURE_CHIS if chis is None else chis
    rho = rng.uniform(*rho_range, n_states)
    m = rho * rng.uniform(*u_range, n_states)
    ang = rng.uniform(0.0, 2.0 * np.pi, n_states)
    dr, dm = np.cos(ang), np.sin(ang)
    mech = mechanical_hessian_isentropic(g, rho, m).form(dr, dm)
    per = {name: float(np.max(weak_entropy_hessian(spec, g, rho, m).form(dr, dm) / mech))
           for name, spec in chis.items()}
    return {"gamma": g.gamma, "per_chi": per, "c": max(per.values())}


# -- xi-entropies ---------------------------------------------------------------

@dataclass(frozen=True)
class XiEntropySpec:
    xi: float

    def __post_init__(self):
        if not -1.0 < self.xi < 1.0:
            raise DomainError(f"xi must lie in (-1, 1), got {self.xi}")

    @property
    def k(self) -> float:
        return 1.0 / (1.0 - self.xi**2)


def xi_entropy_pair(spec: XiEntropySpec, n, J) -> EntropyPairValues:
    n = _positive(n, "n")
    xi, k = spec.xi, spec.k
    u = np.asarray(J, dtype=float) / n
    eta = np.exp(k * (np.log(n) + xi * u))
    eta_n = eta * k * (1.0 - xi * u) / n
    eta_J = eta * k * xi / n
    q = (u + xi) * eta
    q_n = eta_n * (u + xi) - eta * u / n
    q_J = eta_J * (u + xi) + eta / n
    return EntropyPairValues(eta, q, eta_n, eta_J, q_n, q_J)


def xi_entropy_hessian(spec: XiEntropySpec, n, J) -> Hessian:
    n = _positive(n, "n")
    xi, k = spec.xi, spec.k
    u = np.asarray(J, dtype=float) / n
    eta = np.exp(k * (np.log(n) + xi * u))
    # factored so every entry carries xi^2 explicitly (no O(1) - O(1) cancellation)
    s = eta * (k * xi) ** 2 / n**2
    v = u - xi
    return Hessian(s * (v * v + 1.0 - xi * xi), -s * v, s)


def xi_hessian_det_closed_form(xi: float, n, J):
    n = np.asarray(n, dtype=float)
    u = np.asarray(J, dtype=float) / n
    c = 1.0 - xi * xi
    return xi**4 / c**3 * n ** (2.0 * xi * xi / c - 2.0) * np.exp(2.0 * xi * u / c)


# -- space-time functionals -------------------------------------------------------

@dataclass(frozen=True)
class Window:
    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if not (self.x_hi > self.x_lo and self.t_hi > self.t_lo):
            raise RangeError("empty window")

    @property
    def measure(self) -> float:
        return (self.x_hi - self.x_lo) * (self.t_hi - self.t_lo)


MIN_TIME_SAMPLES = 50


def _window_slices(trace: SolutionTrace, K: Window, min_times: int = 2):
    x, t = trace.grid.nodes, trace.times
    if K.x_lo < x[0] or K.x_hi > x[-1] or K.t_lo < t[0] or K.t_hi > t[-1] * (1 + 1e-12):
        raise RangeError(f"window {K} is outside the trace "
                         f"[{x[0]}, {x[-1]}] x [{t[0]}, {t[-1]}]")
    ix = np.flatnonzero((x >= K.x_lo) & (x <= K.x_hi))
    it = np.flatnonzero((t >= K.t_lo - 1e-12) & (t <= K.t_hi + 1e-12))
    if ix.size < 2 or it.size < min_times:
        raise RangeError(f"window {K} holds {ix.size} nodes and {it.size} snapshots "
                         f"(need >= 2 and >= {min_times})")
    return ix, it


def _trapz2(f, x, t):
    return float(np.trapezoid(np.trapezoid(f, x, axis=1), t))


def dissipation_integral(trace: SolutionTrace, g: GasModel, K: Window, epsilon: float,
                         xi: Optional[float] = None) -> float:
    """eps * int_K of the entropy-Hessian quadratic form of the gradients:
    isentropic  p0 gamma rho^(gamma-2) rho_x^2 + rho u_x^2   (mechanical energy)
    isothermal  eta/n^2 n_x^2 + eta u_x^2                    (xi-entropy, xi default 0.1)."""
    ix, it = _window_slices(trace, K, MIN_TIME_SAMPLES)
    dx = trace.grid.dx
    d = trace.density[it]
    m = trace.momentum[it]
    u = m / d
    d_x = np.gradient(d, dx, axis=1)[:, ix]
    u_x = np.gradient(u, dx, axis=1)[:, ix]
    d, u = d[:, ix], u[:, ix]
    if g.is_isothermal:
        eta = xi_entropy_pair(XiEntropySpec(0.1 if xi is None else xi), d, d * u).eta
        f = eta / d**2 * d_x**2 + eta * u_x**2
    else:
        f = g.p0 * g.gamma * np.power(d, g.gamma - 2.0) * d_x**2 + d * u_x**2
    return epsilon * _trapz2(f, trace.grid.nodes[ix], trace.times[it])


@dataclass(frozen=True)
class TestBump:
    """phi = B((x - xc)/rx) B((t - tc)/rt) with B(r) = (1 - r^2)^3 on |r| < 1."""

    xc: float
    tc: float
    rx: float
    rt: float

    __test__ = False  # not a pytest class

    @staticmethod
    def _b(r):
        return np.where(np.abs(r) < 1.0, (1.0 - r * r) ** 3, 0.0)

    @staticmethod
    def _db(r):
        return np.where(np.abs(r) < 1.0, -6.0 * r * (1.0 - r * r) ** 2, 0.0)

    def values(self, x, t):
        X, T = np.meshgrid(x, t)
        rx, rt = (X - self.xc) / self.rx, (T - self.tc) / self.rt
        bx, bt = self._b(rx), self._b(rt)
        return bx * bt, self._db(rx) / self.rx * bt, bx * self._db(rt) / self.rt

    @property
    def c1_norm(self) -> float:
        return 1.0 + C1_BUMP / self.rx + C1_BUMP / self.rt

    @property
    def support(self) -> Window:
        return Window(self.xc - self.rx, self.xc + self.rx, self.tc - self.rt, self.tc + self.rt)


def _source(g: GasModel, a, density, momentum):
    if g.is_isothermal:
        return np.zeros_like(density), -a * density
    return a * momentum, a * momentum**2 / density


def pair_family(name: str, g: GasModel, xi: Optional[float] = None,
                spec: Optional[WeakEntropySpec] = None) -> Callable:
    """Resolve a family name to a callable (density, momentum) -> EntropyPairValues."""
    if name == "mechanical":
        if g.is_isothermal:
            return mechanical_pair_isothermal
        return lambda d, m: mechanical_pair_isentropic(g, d, m)
    if name == "xi":
        return lambda d, m: xi_entropy_pair(XiEntropySpec(xi), d, m)
    if name == "weak":
        return lambda d, m: weak_entropy_pair(spec, g, d, m)
    raise ValueError(f"unknown entropy family {name!r}")


def entropy_residual(trace: SolutionTrace, pair: Callable, g: GasModel, geom,
                     bumps: Sequence[TestBump]) -> list[float]:
    """R(phi) = iint eta phi_t + q phi_x + grad(eta) . g(x, U) phi, one value per bump.
    Admissible (entropy) solutions have R(phi) >= 0 for every phi >= 0."""
    x, t = trace.grid.nodes, trace.times
    a = geom.a(x)
    out = []
    for bump in bumps:
        ix, it = _window_slices(trace, bump.support)
        # widen to the cells bracketing the support so the trapezoid sees phi -> 0
        ix = np.arange(max(ix[0] - 1, 0), min(ix[-1] + 2, x.size))
        it = np.arange(max(it[0] - 1, 0), min(it[-1] + 2, t.size))
        d = trace.density[np.ix_(it, ix)]
        m = trace.momentum[np.ix_(it, ix)]
        v = pair(d, m)
        g1, g2 = _source(g, a[ix], d, m)
        phi, phi_x, phi_t = bump.values(x[ix], t[it])
        f = v.eta * phi_t + v.q * phi_x + (v.eta_rho * g1 + v.eta_m * g2) * phi
        out.append(_trapz2(f, x[ix], t[it]))
    return out


def random_bumps(rng: np.random.Generator, K: Window, count: int, rx_range, rt_range):
    """Bumps with supports inside K, centers uniform, radii uniform in the ranges
    (upper ends clipped to half the window so every draw fits)."""
    half_x, half_t = 0.5 * (K.x_hi - K.x_lo), 0.5 * (K.t_hi - K.t_lo)
    if rx_range[0] > half_x or rt_range[0] > half_t:
        raise RangeError(f"minimum bump radii {rx_range[0]}, {rt_range[0]} do not fit in {K}")
    rx_hi, rt_hi = min(rx_range[1], half_x), min(rt_range[1], half_t)
    bumps = []
    for _ in range(count):
        rx = rng.uniform(rx_range[0], rx_hi)
        rt = rng.uniform(rt_range[0], rt_hi)
        xc = rng.uniform(K.x_lo + rx, K.x_hi - rx)
        tc = rng.uniform(K.t_lo + rt, K.t_hi - rt)
        bumps.append(TestBump(xc, tc, rx, rt))
    return bumps
