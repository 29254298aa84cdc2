"""Vanishing-viscosity sweeps: run a scenario at decreasing eps and measure
how fast consecutive solutions approach each other on a compact window."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from nozzleflow.entropy import Window, dissipation_integral
from nozzleflow.errors import NozzleError, RangeError, SweepError
from nozzleflow.fields import FieldState, Grid, SolutionTrace
from nozzleflow.gas import GasModel, to_riemann
from nozzleflow.geometry import NozzleGeometry
from nozzleflow.monitor import build_controls
from nozzleflow.solver import MollifierSpec, SolverConfig, mollify_initial, run

CONTRACTION = 0.95


def _interp_time_space(trace: SolutionTrace, x, t, which: str) -> np.ndarray:
    """Bilinear interpolation of a trace field onto the tensor grid t x x."""
    data = getattr(trace, which)
    xs, ts = trace.grid.nodes, trace.times
    in_space = np.stack([np.interp(x, xs, row) for row in data])
    j = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 2)
    w = np.clip((t - ts[j]) / (ts[j + 1] - ts[j]), 0.0, 1.0)[:, None]
    return (1.0 - w) * in_space[j] + w * in_space[j + 1]


def _covers(trace: SolutionTrace, K: Window) -> bool:
    x, t = trace.grid.nodes, trace.times
    return x[0] <= K.x_lo and x[-1] >= K.x_hi and t[0] <= K.t_lo and t[-1] >= K.t_hi * (1 - 1e-12)


def lp_local_distance(a: SolutionTrace, b: SolutionTrace, K: Window, p: int = 1) -> float:
    """(iint_K |rho_a - rho_b|^p + |m_a - m_b|^p)^(1/p), trapezoid on the finer
    trace's nodes and snapshot times inside K plus the window edges; both traces
    are interpolated there (exactly, for the finer one at its own samples)."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    for tr in (a, b):
        if not _covers(tr, K):
            raise RangeError(f"trace does not cover the window {K}")
    fine = a if a.grid.dx <= b.grid.dx else b
    x, t = fine.grid.nodes, fine.times
    xk = np.unique(np.concatenate(([K.x_lo], x[(x > K.x_lo) & (x < K.x_hi)], [K.x_hi])))
    tk = np.unique(np.concatenate(([K.t_lo], t[(t > K.t_lo) & (t < K.t_hi)], [K.t_hi])))
    total = np.zeros((tk.size, xk.size))
    for which in ("density", "momentum"):
        total += np.abs(_interp_time_space(a, xk, tk, which)
                        - _interp_time_space(b, xk, tk, which)) ** p
    integral = float(np.trapezoid(np.trapezoid(total, xk, axis=1), tk))
    return integral ** (1.0 / p)


@dataclass(frozen=True)
class SweepConfig:
    gas: GasModel
    geometry: NozzleGeometry
    initial: Callable[[Grid], FieldState]  # raw data on a grid
    t_end: float
    epsilons: Sequence[float] = (0.1, 0.05, 0.025, 0.0125, 0.00625)
    cells_per_epsilon: float = 8.0  # dx = eps / cells_per_epsilon
    n_cells: Optional[int] = None  # fixed grid instead of dx proportional to eps
    margin: float = 0.1
    snapshot_dt: Optional[float] = None
    xi: Optional[float] = None
    workers: Optional[int] = None

    def __post_init__(self):
        eps = list(self.epsilons)
        if len(eps) < 3 or any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise ValueError("epsilons must be a strictly descending list of >= 3 values")

    def grid_for(self, eps: float) -> Grid:
        lo, hi = self.geometry.domain
        if self.n_cells is not None:
            return Grid(lo, hi, self.n_cells)
        return Grid(lo, hi, int(np.ceil((hi - lo) * self.cells_per_epsilon / eps)))

    @property
    def window(self) -> Window:
        lo, hi = self.geometry.domain
        L = hi - lo
        return Window(lo + self.margin * L, hi - self.margin * L,
                      self.margin * self.t_end, (1.0 - self.margin) * self.t_end)

    def solver_config(self, eps: float) -> SolverConfig:
        snap = self.snapshot_dt if self.snapshot_dt is not None else self.t_end / 100.0
        return SolverConfig(epsilon=eps, t_end=self.t_end, snapshot_dt=snap)


@dataclass
class SweepReport:
    epsilons: list
    distances_l1: list
    distances_l2: list
    ratios: list
    bounds: list
    dissipation: list
    monitors_pass: list
    verdict: str
    traces: list = field(default_factory=list, repr=False)

    @property
    def converging(self) -> bool:
        return self.verdict == "converging"

    def bound_spread(self, key: str) -> float:
        vals = np.array([b[key] for b in self.bounds])
        return float((vals.max() - vals.min()) / np.max(np.abs(vals)))

    def to_dict(self):
        return {
            "epsilons": list(self.epsilons),
            "distances_l1": self.distances_l1,
            "distances_l2": self.distances_l2,
            "ratios": self.ratios,
            "bounds": self.bounds,
            "dissipation": self.dissipation,
            "monitors_pass": self.monitors_pass,
            "verdict": self.verdict,
        }


def run_member(cfg: SweepConfig, eps: float) -> SolutionTrace:
    g = cfg.gas
    grid = cfg.grid_for(eps)
    scfg = cfg.solver_config(eps)
    init = mollify_initial(cfg.initial(grid), MollifierSpec(), g, scfg, grid.dx)
    controls = build_controls(cfg.geometry, g, init, eps, grid)
    return run(init, g, cfg.geometry, controls, scfg, grid)


def _window_bounds(trace: SolutionTrace, g: GasModel, K: Window) -> dict:
    x, t = trace.grid.nodes, trace.times
    ix = (x >= K.x_lo) & (x <= K.x_hi)
    it = (t >= K.t_lo - 1e-12) & (t <= K.t_hi + 1e-12)
    w, z = to_riemann(g, trace.density[np.ix_(it, ix)], trace.momentum[np.ix_(it, ix)])
    return {"max_w": float(w.max()), "neg_min_z": float(-z.min()),
            "min_density": float(trace.density[np.ix_(it, ix)].min())}


def _workers(requested: Optional[int]) -> int:
    cap = int(os.environ.get("NOZZLE_THREADS", "0") or 0)
    n = requested or cap or 1
    return max(1, min(n, cap) if cap else n)


def epsilon_sweep(cfg: SweepConfig, keep_traces: bool = False) -> SweepReport:
    eps = list(cfg.epsilons)
    K = cfg.window

    def member(e):
        try:
            return run_member(cfg, e)
        except NozzleError as exc:
            raise SweepError(f"sweep member eps = {e} aborted: {exc}") from exc

    with ThreadPoolExecutor(max_workers=_workers(cfg.workers)) as pool:
        traces = list(pool.map(member, eps))

    d1 = [lp_local_distance(a, b, K, 1) for a, b in zip(traces, traces[1:])]
    d2 = [lp_local_distance(a, b, K, 2) for a, b in zip(traces, traces[1:])]
    ratios = [(b / a if a > 0 else 0.0) for a, b in zip(d1, d1[1:])]
    bounds = [_window_bounds(tr, cfg.gas, K) for tr in traces]
    diss = [dissipation_integral(tr, cfg.gas, K, e, cfg.xi) for tr, e in zip(traces, eps)]
    monitors = [tr.passed for tr in traces]
    steady = all(d == 0.0 for d in d1)
    ok = steady or (all(r <= CONTRACTION for r in ratios) and all(monitors))
    return SweepReport(eps, d1, d2, ratios, bounds, diss, monitors,
                       "converging" if ok else "inconclusive",
                       traces if keep_traces else [])
