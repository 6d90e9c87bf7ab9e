"""Variational state preparation: fit ansatz angles to a target state.

Non-unitary ansatzes are run collapse-free, following the all-zeros
measurement branch.  Every branch yields the same register state, so this is
exact and keeps the cost deterministic.  Gradients use the two-term
parameter-shift rule, evaluated as one batched simulation.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzSpec, build_ansatz
from .circuit import Measure
from .simulator import StateVector, branch_batch

LBFGS = "lbfgs"
MOMENTUM = "momentum"
OPTIMIZERS = (LBFGS, MOMENTUM)


class TrainingError(ValueError):
    pass


def infidelity(simulated: StateVector | np.ndarray, target: StateVector | np.ndarray) -> float:
    a = simulated.amplitudes if isinstance(simulated, StateVector) else np.asarray(simulated, dtype=complex)
    b = target.amplitudes if isinstance(target, StateVector) else np.asarray(target, dtype=complex)
    if a.shape != b.shape:
        raise TrainingError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(min(1.0, max(0.0, 1.0 - abs(np.vdot(b, a)) ** 2)))


@dataclass(frozen=True)
class TrainConfig:
    ansatz: AnsatzSpec
    target: StateVector
    max_iterations: int = 10_000
    restarts: int = 5
    seed: int | None = 0
    optimizer: str = LBFGS
    init_range: tuple[float, float] = (-math.pi, math.pi)
    learning_rate: float = 0.1
    momentum: float = 0.9
    clip: float = 1.0

    def __post_init__(self) -> None:
        if self.target.amplitudes.size != 2**self.ansatz.n:
            raise TrainingError(
                f"target has {self.target.amplitudes.size} amplitudes, ansatz register needs {2**self.ansatz.n}"
            )
        if self.optimizer not in OPTIMIZERS:
            raise TrainingError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.restarts < 1 or self.max_iterations < 1:
            raise TrainingError("restarts and max_iterations must be positive")


@dataclass
class TrainResult:
    best_params: np.ndarray
    final_infidelity: float
    history: list[float] = field(default_factory=list)
    restart_infidelities: list[float] = field(default_factory=list)
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "best_params": [float(x) for x in self.best_params],
            "final_infidelity": self.final_infidelity,
            "history": list(self.history),
            "restart_infidelities": list(self.restart_infidelities),
            "iterations": self.iterations,
        }


class Objective:
    """Infidelity of the collapse-free ansatz output against a fixed target."""

    def __init__(self, spec: AnsatzSpec, target: StateVector) -> None:
        self.circuit = build_ansatz(spec)
        self.target = np.asarray(target.amplitudes, dtype=complex)
        self.outcomes = [0] * self.circuit.count(Measure)
        self.start = StateVector.zero(spec.n).amplitudes
        self.n_params = self.circuit.n_params

    def states(self, angles: np.ndarray) -> np.ndarray:
        """Output register states, one column per column of ``angles``."""
        _, psi = branch_batch(self.circuit, angles, self.start, self.outcomes)
        return psi

    def values(self, angles: np.ndarray) -> np.ndarray:
        psi = self.states(angles)
        overlap = self.target.conj() @ psi
        return 1.0 - np.abs(overlap) ** 2

    def __call__(self, params) -> float:
        return float(self.values(np.asarray(params, dtype=float)[:, None])[0])

    def value_and_grad(self, params) -> tuple[float, np.ndarray]:
        theta = np.asarray(params, dtype=float)
        p = theta.size
        shift = 0.5 * math.pi * np.eye(p)
        cols = np.concatenate([theta[:, None], theta[:, None] + shift, theta[:, None] - shift], axis=1)
        v = self.values(cols)
        return float(v[0]), 0.5 * (v[1 : p + 1] - v[p + 1 :])


def gradient(config: TrainConfig, params) -> np.ndarray:
    return Objective(config.ansatz, config.target).value_and_grad(params)[1]


def _lbfgs(obj: Objective, x0: np.ndarray, maxiter: int) -> tuple[np.ndarray, float, list[float], int]:
    history: list[float] = []

    def record(xk) -> None:
        history.append(min(obj(xk), history[-1]) if history else obj(xk))

    res = minimize(
        obj.value_and_grad,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": maxiter, "ftol": 1e-300, "gtol": 1e-13, "maxcor": 30},
    )
    return res.x, float(res.fun), history, int(res.nit)


def _momentum(obj: Objective, x0: np.ndarray, cfg: TrainConfig) -> tuple[np.ndarray, float, list[float], int]:
    x, v = x0.copy(), np.zeros_like(x0)
    best_x, best = x.copy(), math.inf
    history: list[float] = []
    for it in range(cfg.max_iterations):
        f, g = obj.value_and_grad(x)
        if f < best:
            best, best_x = f, x.copy()
        history.append(best)
        norm = float(np.linalg.norm(g))
        if norm < 1e-13:
            break
        if norm > cfg.clip:
            g = g * (cfg.clip / norm)
        v = cfg.momentum * v - cfg.learning_rate * g
        x = x + v
    return best_x, best, history, it + 1


def train(config: TrainConfig) -> TrainResult:
    """Best of ``restarts`` independent runs from uniform random angles."""
    obj = Objective(config.ansatz, config.target)
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best: TrainResult | None = None
    finals: list[float] = []
    lo, hi = config.init_range
    for ss in seeds:
        x0 = np.random.default_rng(ss).uniform(lo, hi, obj.n_params)
        if config.optimizer == LBFGS:
            x, f, hist, nit = _lbfgs(obj, x0, config.max_iterations)
        else:
            x, f, hist, nit = _momentum(obj, x0, config)
        f = max(0.0, f)
        finals.append(f)
        if best is None or f < best.final_infidelity:
            best = TrainResult(x, f, hist, iterations=nit)
    assert best is not None
    best.restart_infidelities = finals
    return best


def layer_sweep(config: TrainConfig, layers: Iterable[int]) -> list[tuple[int, float]]:
    out = []
    for L in layers:
        spec = AnsatzSpec(config.ansatz.n, L, config.ansatz.core, config.ansatz.rotation, config.ansatz.form)
        out.append((L, train(replace(config, ansatz=spec)).final_infidelity))
    return out
