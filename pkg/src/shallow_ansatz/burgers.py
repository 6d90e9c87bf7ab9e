"""Viscous Burgers' equation on the periodic unit interval.

    u_t = nu * u_xx - (u**2 / 2)_x

Method of lines: flux-form convection, second-order diffusion, classical RK4
in time.  Targets are computed on a 4x finer grid and subsampled.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .simulator import StateVector

GAUSSIAN = "gaussian"
SIN = "sin"
CENTRAL = "conservative-central"
UPWIND = "upwind"
SAFETY = 0.5
REFINE = 4


class BurgersError(ValueError):
    pass


@dataclass(frozen=True)
class BurgersConfig:
    nu: float
    t_final: float
    qubits: int = 4
    init: str = GAUSSIAN
    center: float = 0.5
    width: float = 0.1
    amplitude: float = 1.0
    wavenumber: int = 1
    scheme: str = CENTRAL
    dt: float | None = None
    refine: int = REFINE

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise BurgersError("viscosity must be positive")
        if self.t_final < 0:
            raise BurgersError("final time must be non-negative")
        if self.qubits < 1:
            raise BurgersError("need at least one qubit")
        if self.init not in (GAUSSIAN, SIN):
            raise BurgersError(f"unknown initial profile {self.init!r}")
        if self.scheme not in (CENTRAL, UPWIND):
            raise BurgersError(f"unknown scheme {self.scheme!r}")
        if self.width <= 0 or self.refine < 1:
            raise BurgersError("width and refinement must be positive")

    @property
    def points(self) -> int:
        return 2**self.qubits


@dataclass(frozen=True)
class GridField:
    values: np.ndarray
    time: float

    def __post_init__(self) -> None:
        n = len(self.values)
        if n & (n - 1) or n == 0:
            raise BurgersError(f"grid length must be a power of two, got {n}")
        if not np.all(np.isfinite(self.values)):
            raise BurgersError("field contains non-finite values")

    @property
    def x(self) -> np.ndarray:
        return np.arange(len(self.values)) / len(self.values)


# laminar state 1 and the two turbulent states of the benchmark
PAPER_CONFIGS: dict[str, BurgersConfig] = {
    "state1": BurgersConfig(nu=10.0, t_final=0.083, init=GAUSSIAN),
    "state2": BurgersConfig(nu=1e-3, t_final=0.83, init=GAUSSIAN),
    "state3": BurgersConfig(nu=1e-3, t_final=0.83, init=SIN),
}


def initial_profile(config: BurgersConfig, x: np.ndarray) -> np.ndarray:
    if config.init == SIN:
        return config.amplitude * np.sin(2 * np.pi * config.wavenumber * x)
    # sum of periodic images keeps the profile smooth across the boundary
    d = (x - config.center + 0.5) % 1.0 - 0.5
    shifts = np.arange(-3, 4)[:, None]
    return config.amplitude * np.exp(-0.5 * ((d + shifts) / config.width) ** 2).sum(axis=0)


def _flux_divergence(u: np.ndarray, dx: float, scheme: str) -> np.ndarray:
    f = 0.5 * u * u
    if scheme == CENTRAL:
        return (np.roll(f, -1) - np.roll(f, 1)) / (2 * dx)
    # Engquist-Osher interface flux between cells i and i+1
    up, dn = np.maximum(u, 0.0), np.minimum(u, 0.0)
    face = 0.5 * up**2 + 0.5 * np.roll(dn, -1) ** 2
    return (face - np.roll(face, 1)) / dx


def rhs(u: np.ndarray, dx: float, nu: float, scheme: str = CENTRAL) -> np.ndarray:
    lap = (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / (dx * dx)
    return nu * lap - _flux_divergence(u, dx, scheme)


def stable_dt(u: np.ndarray, dx: float, nu: float) -> float:
    umax = float(np.max(np.abs(u)))
    limit = dx * dx / (2 * nu)
    if umax > 0:
        limit = min(limit, dx / umax)
    return SAFETY * limit


def integrate(
    u0: np.ndarray,
    nu: float,
    t_final: float,
    scheme: str = CENTRAL,
    dt: float | None = None,
    observer: Callable[[float, np.ndarray], None] | None = None,
) -> np.ndarray:
    """RK4 on a periodic grid of ``len(u0)`` points; steps evenly divide ``t_final``.

    ``observer(t, u)`` is called after every step.
    """
    u = np.array(u0, dtype=float)
    dx = 1.0 / len(u)
    limit = stable_dt(u, dx, nu)
    if dt is None:
        dt = limit
    elif dt > limit * (1 + 1e-12):
        raise BurgersError(f"time step {dt:g} exceeds the stability limit {limit:g}")
    if t_final == 0:
        return u
    steps = math.ceil(t_final / dt)
    h = t_final / steps
    for k in range(steps):
        k1 = rhs(u, dx, nu, scheme)
        k2 = rhs(u + 0.5 * h * k1, dx, nu, scheme)
        k3 = rhs(u + 0.5 * h * k2, dx, nu, scheme)
        k4 = rhs(u + h * k3, dx, nu, scheme)
        u = u + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise BurgersError(f"solution blew up at step {k + 1} (t={(k + 1) * h:g}, dt={h:g})")
        if observer is not None:
            observer((k + 1) * h, u)
    return u


def evolve(config: BurgersConfig) -> GridField:
    """u(., t_final) at the 2**qubits target points."""
    fine = config.points * config.refine
    x = np.arange(fine) / fine
    u = integrate(initial_profile(config, x), config.nu, config.t_final, config.scheme, config.dt)
    return GridField(u[:: config.refine].copy(), config.t_final)


def encode_state(field: GridField | np.ndarray) -> StateVector:
    """Amplitude encoding: grid index i becomes basis state |bin(i)>."""
    u = np.asarray(field.values if isinstance(field, GridField) else field, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm == 0:
        raise BurgersError("cannot encode an all-zero field")
    n = len(u).bit_length() - 1
    if 2**n != len(u):
        raise BurgersError(f"field length {len(u)} is not a power of two")
    return StateVector((u / norm).astype(complex))


def convergence_order(config: BurgersConfig, levels: int = 3) -> tuple[float, list[float]]:
    """Observed order from grids of 2**q, 2**(q+1), ... points against a 4x-refined oracle.

    Every level is sampled at the coarsest grid's points; dt follows the
    stability limit, so it halves (or quarters) with dx.
    """
    base = config.points
    finest = base * 2 ** (levels - 1)
    x_fine = np.arange(REFINE * finest) / (REFINE * finest)
    oracle = integrate(initial_profile(config, x_fine), config.nu, config.t_final, config.scheme)
    ref = oracle[:: REFINE * finest // base]
    errors = []
    for lv in range(levels):
        m = base * 2**lv
        x = np.arange(m) / m
        u = integrate(initial_profile(config, x), config.nu, config.t_final, config.scheme)
        errors.append(float(np.max(np.abs(u[:: 2**lv] - ref))))
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    return min(orders), errors


