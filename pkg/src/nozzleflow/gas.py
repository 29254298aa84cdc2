"""gamma-law gas: pressure, characteristic speeds and Riemann invariants.

Isentropic gas uses p = p0 * rho**gamma with p0 = theta**2 / gamma and
theta = (gamma - 1) / 2, so the sound speed is theta * rho**theta.
Isothermal gas (gamma = 1) uses p = rho and works in the area-weighted
variables (n, J) = (A rho, A m).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from nozzleflow.errors import DomainError, VacuumError


class Mode(str, enum.Enum):
    ISENTROPIC = "isentropic"
    ISOTHERMAL = "isothermal"


@dataclass(frozen=True)
class GasModel:
    gamma: float
    mode: Mode

    def __post_init__(self):
        mode = Mode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode is Mode.ISENTROPIC and not 1.0 < self.gamma < 3.0:
            raise DomainError(f"isentropic gas needs 1 < gamma < 3, got {self.gamma}")
        if mode is Mode.ISOTHERMAL and self.gamma != 1.0:
            raise DomainError(f"isothermal gas needs gamma = 1, got {self.gamma}")

    @classmethod
    def isentropic(cls, gamma: float) -> "GasModel":
        return cls(float(gamma), Mode.ISENTROPIC)

    @classmethod
    def isothermal(cls) -> "GasModel":
        return cls(1.0, Mode.ISOTHERMAL)

    @property
    def is_isothermal(self) -> bool:
        return self.mode is Mode.ISOTHERMAL

    @property
    def theta(self) -> float:
        return (self.gamma - 1.0) / 2.0

    @property
    def p0(self) -> float:
        return self.theta**2 / self.gamma


class ConservedPair(NamedTuple):
    density: np.ndarray
    momentum: np.ndarray


class InvariantPair(NamedTuple):
    w: np.ndarray
    z: np.ndarray


def _positive(density, what="density"):
    density = np.asarray(density, dtype=float)
    if np.any(~(density > 0.0)):
        raise VacuumError(f"{what} must be > 0 (min {np.min(density)!r})")
    return density


def rho_theta(g: GasModel, density):
    """rho**theta evaluated as exp(theta * log rho); 0 at vacuum."""
    density = np.asarray(density, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.exp(g.theta * np.log(density))
    return out


def pressure(g: GasModel, density):
    density = np.asarray(density, dtype=float)
    if np.any(density < 0.0):
        raise DomainError("pressure of negative density")
    if g.is_isothermal:
        return density.copy() if density.ndim else float(density)
    out = g.p0 * np.power(density, g.gamma)
    return out if density.ndim else float(out)


def sound_speed(g: GasModel, density):
    if g.is_isothermal:
        return np.ones_like(np.asarray(density, dtype=float))
    return g.theta * rho_theta(g, density)


def eigenvalues(g: GasModel, density, momentum):
    """(lambda_1, lambda_2) with lambda_1 <= lambda_2."""
    density = _positive(density)
    u = np.asarray(momentum, dtype=float) / density
    c = sound_speed(g, density)
    return u - c, u + c


def eigenvalues_delta(n, J, delta):
    """Characteristic speeds of the isothermal system with density lift delta."""
    n = np.asarray(n, dtype=float)
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    if np.any(n < delta):
        raise DomainError(f"n must be >= delta = {delta}")
    u = np.asarray(J, dtype=float) / n
    c = (n - delta) / n
    return u - c, u + c


def to_riemann(g: GasModel, density, momentum) -> InvariantPair:
    density = _positive(density)
    u = np.asarray(momentum, dtype=float) / density
    s = np.log(density) if g.is_isothermal else rho_theta(g, density)
    return InvariantPair(u + s, u - s)


def from_riemann(g: GasModel, w, z) -> ConservedPair:
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    half = 0.5 * (w - z)
    u = 0.5 * (w + z)
    if g.is_isothermal:
        density = np.exp(half)
    else:
        if np.any(half < 0.0):
            raise DomainError("isentropic invariants need w >= z")
        with np.errstate(divide="ignore"):
            density = np.where(half > 0.0, np.exp(np.log(np.where(half > 0, half, 1.0)) / g.theta), 0.0)
    return ConservedPair(density, density * u)
