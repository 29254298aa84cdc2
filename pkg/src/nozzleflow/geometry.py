"""Nozzle cross-section A(x), the source coefficient a = -A'/A and its envelope a0.

The envelope a0 must dominate |a| pointwise and its L1 norm decides whether a
geometry is admissible for a given gas. By default a0 is |a| smoothed by one
pass of a discrete bump kernel (half-width two sample cells), then maxed
against |a| so the domination holds everywhere, not only on samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

from nozzleflow.errors import GeometryError, NumericError
from nozzleflow.gas import GasModel

ZERO_TAIL = 1e-12
TAIL_FRACTION = 0.05


@dataclass(frozen=True)
class Constant:
    area: float = 1.0

    def __post_init__(self):
        if not self.area > 0:
            raise GeometryError("constant area must be positive")

    def A(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.area)

    def dA(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ExpMonotone:
    """A = exp(kappa * S((x - x0) / width)) with S(y) = (1 + tanh y) / 2."""

    kappa: float
    x0: float = 0.0
    width: float = 1.0

    def A(self, x):
        y = (np.asarray(x, dtype=float) - self.x0) / self.width
        return np.exp(self.kappa * 0.5 * (1.0 + np.tanh(y)))

    def dA(self, x):
        y = (np.asarray(x, dtype=float) - self.x0) / self.width
        sech2 = 1.0 / np.cosh(y) ** 2
        return self.A(x) * self.kappa * 0.5 * sech2 / self.width


@dataclass(frozen=True)
class LavalBump:
    """A = a_inf - depth * exp(-(x / width)**2); throat at x = 0."""

    a_inf: float
    depth: float
    width: float = 1.0

    def __post_init__(self):
        if not self.a_inf > self.depth > 0:
            raise GeometryError("LavalBump needs a_inf > depth > 0")

    def A(self, x):
        x = np.asarray(x, dtype=float)
        return self.a_inf - self.depth * np.exp(-((x / self.width) ** 2))

    def dA(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.depth * x / self.width**2 * np.exp(-((x / self.width) ** 2))


@dataclass(frozen=True)
class Tabulated:
    """Sampled area, interpolated by a C2 cubic spline with zero end slopes."""

    x: tuple
    area: tuple
    _spline: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        area = np.asarray(self.area, dtype=float)
        if x.ndim != 1 or x.shape != area.shape or x.size < 4:
            raise GeometryError("tabulated geometry needs >= 4 (x, A) samples")
        if np.any(np.diff(x) <= 0):
            raise GeometryError("tabulated x must be strictly ascending")
        if np.any(area <= 0):
            i = int(np.argmax(area <= 0))
            raise GeometryError(f"nonpositive area sample A({x[i]}) = {area[i]}")
        object.__setattr__(self, "x", tuple(x))
        object.__setattr__(self, "area", tuple(area))
        object.__setattr__(self, "_spline", CubicSpline(x, area, bc_type="clamped"))

    def A(self, x):
        return self._spline(np.asarray(x, dtype=float))

    def dA(self, x):
        return self._spline(np.asarray(x, dtype=float), 1)


GeometrySpec = Union[Constant, ExpMonotone, LavalBump, Tabulated]


def load_tabulated(path) -> Tabulated:
    """Read a two-column "x A" text file; '#' starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GeometryError(f"{path}:{lineno}: expected two columns 'x A'")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise GeometryError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise GeometryError(f"{path}: no samples")
    xs, areas = zip(*rows)
    return Tabulated(xs, areas)


def adaptive_simpson(f: Callable, lo: float, hi: float, rtol: float = 1e-10,
                     n_initial: int = 128, max_depth: int = 60) -> float:
    """Adaptive composite Simpson rule, refined panel-wise until the
    Richardson error estimate meets rtol relative to the integral."""
    if hi <= lo:
        raise ValueError("need lo < hi")
    edges = np.linspace(lo, hi, n_initial + 1)
    a, b = edges[:-1], edges[1:]
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    scale = abs(whole.sum())
    tol_density = max(rtol * scale, 1e-300) / (hi - lo)

    total = 0.0
    for _ in range(max_depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        ok = np.abs(err) <= 15.0 * tol_density * (b - a)
        total += float(np.sum((left + right + err / 15.0)[ok]))
        bad = ~ok
        if not bad.any():
            return total
        a, m, b = a[bad], m[bad], b[bad]
        fa, fm, fb = fa[bad], fm[bad], fb[bad]
        lm, rm, flm, frm = lm[bad], rm[bad], flm[bad], frm[bad]
        left, right = left[bad], right[bad]
        a, m, b, whole = (np.concatenate([a, m]), np.concatenate([lm, rm]),
                          np.concatenate([m, b]), np.concatenate([left, right]))
        fa, fm, fb = (np.concatenate([fa, fm]), np.concatenate([flm, frm]),
                      np.concatenate([fm, fb]))
    raise NumericError(f"adaptive Simpson did not converge on [{lo}, {hi}] "
                       f"after {max_depth} refinements")


def _bump_weights(half_width_cells: int) -> np.ndarray:
    k = np.arange(-half_width_cells, half_width_cells + 1, dtype=float)
    r = k / half_width_cells
    w = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    w[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return w / w.sum()


@dataclass(frozen=True)
class NozzleGeometry:
    spec: GeometrySpec
    x_min: float
    x_max: float
    a: Callable
    a0: Callable
    a0_l1: float
    a_l1: float
    a0_scale: float = 1.0
    n_knots: int = 4097  # envelope spline knots; quadrature panels align with them

    @property
    def domain(self):
        return (self.x_min, self.x_max)

    def area(self, x):
        return self.spec.A(x)


def derive_a(spec: GeometrySpec, domain, n_samples: int = 4097,
             a0_scale: float = 1.0, check_tails: bool = True) -> NozzleGeometry:
    x_min, x_max = map(float, domain)
    if not x_max > x_min:
        raise GeometryError("empty domain")
    if a0_scale < 1.0:
        raise GeometryError("a0_scale < 1 would break |a| <= a0")
    if isinstance(spec, Tabulated) and (x_min < spec.x[0] or x_max > spec.x[-1]):
        raise GeometryError("domain extends beyond the tabulated samples")

    xs = np.linspace(x_min, x_max, n_samples)
    areas = spec.A(xs)
    if np.any(areas <= 0):
        i = int(np.argmax(areas <= 0))
        raise GeometryError(f"A({xs[i]}) = {areas[i]} is not positive")

    def a(x):
        return -spec.dA(x) / spec.A(x)

    if check_tails:
        tail = TAIL_FRACTION * (x_max - x_min)
        probe = np.concatenate([np.linspace(x_min, x_min + tail, 257),
                                np.linspace(x_max - tail, x_max, 257)])
        worst = float(np.max(np.abs(a(probe))))
        if worst >= ZERO_TAIL:
            raise GeometryError(
                f"|a| reaches {worst:.3e} within {TAIL_FRACTION:.0%} of the domain edge; "
                "the domain is narrower than the geometry's support")

    abs_a = np.abs(a(xs))
    padded = np.pad(abs_a, 2, mode="edge")
    smooth = np.convolve(padded, _bump_weights(2), mode="valid")
    envelope = PchipInterpolator(xs, np.maximum(smooth, abs_a))

    def a0(x):
        x = np.asarray(x, dtype=float)
        return a0_scale * np.maximum(np.abs(a(x)), envelope(x))

    # panels straddling spline knots hide the f'' jumps from the error estimate
    panels = n_samples - 1
    a0_l1 = adaptive_simpson(a0, x_min, x_max, n_initial=panels)
    a_l1 = adaptive_simpson(lambda x: np.abs(a(x)), x_min, x_max, n_initial=panels)
    return NozzleGeometry(spec, x_min, x_max, a, a0, a0_l1, a_l1, a0_scale, n_samples)


def l1_norm_a0(geom: NozzleGeometry, rtol: float = 1e-10) -> float:
    return adaptive_simpson(geom.a0, geom.x_min, geom.x_max, rtol=rtol,
                            n_initial=geom.n_knots - 1)


def admissibility_threshold(g: GasModel) -> float:
    if g.is_isothermal:
        return 0.5
    return (1.0 - g.theta) / (1.0 + g.theta)


@dataclass(frozen=True)
class AdmissibilityReport:
    gamma: float
    threshold: float
    a0_l1: float
    a_l1: float
    admissible: bool
    area_ratio_bound: float

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "threshold": self.threshold,
            "a0_l1": self.a0_l1,
            "a_l1": self.a_l1,
            "admissible": self.admissible,
            "area_ratio_bound": self.area_ratio_bound,
        }


def check_admissible(geom: NozzleGeometry, g: GasModel) -> AdmissibilityReport:
    threshold = admissibility_threshold(g)
    return AdmissibilityReport(
        gamma=g.gamma,
        threshold=threshold,
        a0_l1=geom.a0_l1,
        a_l1=geom.a_l1,
        admissible=bool(geom.a0_l1 <= threshold),
        area_ratio_bound=math.exp(geom.a0_l1),
    )


def _fit(make, target, lo, hi, domain, **kw):
    # quadrature noise is ~1e-10 relative; aim just below the target so the
    # result lands on the admissible side of a boundary case
    aim = target * (1.0 - 1e-9)

    def gap(p):
        return derive_a(make(p), domain, **kw).a0_l1 - aim

    p = brentq(gap, lo, hi, xtol=1e-15, rtol=1e-12)
    geom = derive_a(make(p), domain, **kw)
    for _ in range(50):
        if geom.a0_l1 <= target:
            return geom
        p *= 1.0 - 1e-9
        geom = derive_a(make(p), domain, **kw)
    raise NumericError(f"could not fit ||a0||_1 = {target}")


def laval_with_a0_l1(target, domain, a_inf=2.0, width=1.0, **kw) -> NozzleGeometry:
    """LavalBump whose depth is tuned so that ||a0||_1 equals target."""
    return _fit(lambda d: LavalBump(a_inf, d, width), target,
                1e-6 * a_inf, 0.99 * a_inf, domain, **kw)


def expmonotone_with_a0_l1(target, domain, x0=0.0, width=1.0, increasing=True,
                           **kw) -> NozzleGeometry:
    """ExpMonotone whose kappa is tuned so that ||a0||_1 equals target."""
    sign = 1.0 if increasing else -1.0
    return _fit(lambda k: ExpMonotone(sign * k, x0, width), target,
                1e-6, 10.0 * max(target, 1e-3), domain, **kw)
