"""Grid, field snapshots and solution traces shared by the solver and the checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("grid needs x_max > x_min")
        if self.n_cells < 16:
            raise ValueError("grid needs at least 16 cells")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class FieldState:
    """Conserved variables at one instant: (rho, m) or, isothermal, (n, J)."""

    t: float
    density: np.ndarray
    momentum: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "density", np.asarray(self.density, dtype=float))
        object.__setattr__(self, "momentum", np.asarray(self.momentum, dtype=float))
        if self.density.shape != self.momentum.shape:
            raise ValueError("density and momentum must have the same shape")

    @property
    def velocity(self) -> np.ndarray:
        return self.momentum / self.density


@dataclass
class SolutionTrace:
    grid: Grid
    snapshots: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def density(self) -> np.ndarray:
        return np.stack([s.density for s in self.snapshots])

    @property
    def momentum(self) -> np.ndarray:
        return np.stack([s.momentum for s in self.snapshots])

    @property
    def final(self) -> FieldState:
        return self.snapshots[-1]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def until(self, t_max: float) -> "SolutionTrace":
        """Prefix of the trace with snapshot times <= t_max."""
        keep = [i for i, s in enumerate(self.snapshots) if s.t <= t_max]
        return SolutionTrace(
            self.grid,
            [self.snapshots[i] for i in keep],
            [self.reports[i] for i in keep if i < len(self.reports)],
            dict(self.meta),
        )
