"""Pauli-noise error budgets and process-fidelity lower bounds.

Each error element with probability ``p`` maps to a decoherence parameter
``lam = -ln(1 - 2p) / 2``; a circuit's total is the budget-weighted sum and
``exp(-lam_total)`` lower-bounds its process fidelity.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .ansatz import CoreKind
from .circuit import CX, Circuit, Conditional, Gate1, Init, Instruction, Measure, count_idle, schedule_asap
from .simulator import StateVector, haar_product_state, run

UNITARY = "unitary"
NONUNITARY = "nonunitary"


class NoiseError(ValueError):
    pass


def p_to_lambda(p: float) -> float:
    if not 0.0 <= p < 0.5:
        raise NoiseError(f"error probability must lie in [0, 1/2), got {p}")
    return -0.5 * math.log1p(-2.0 * p)


def lambda_to_p(lam: float) -> float:
    if lam < 0:
        raise NoiseError(f"decoherence parameter must be non-negative, got {lam}")
    return -0.5 * math.expm1(-2.0 * lam)


@dataclass(frozen=True)
class NoiseParams:
    """Per-element error probabilities.

    ``p_con=None`` selects the averaged convention for conditional gates,
    ``lam_con = (lam_idle + lam_x) / 2``, since they only fire on some runs.
    """

    p_idle: float
    p_cx: float
    p_meas: float = 0.0
    p_in: float = 0.0
    p_x: float = 0.0
    p_con: float | None = None

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not 0.0 <= v < 0.5:
                raise NoiseError(f"{f.name} must lie in [0, 1/2), got {v}")

    @classmethod
    def paper_convention(cls, p_idle: float, p_cx: float) -> NoiseParams:
        """Measurement, init and single-qubit X errors one order below ``p_cx``."""
        return cls(p_idle, p_cx, p_cx / 10, p_cx / 10, p_cx / 10)

    @property
    def lam_idle(self) -> float:
        return p_to_lambda(self.p_idle)

    @property
    def lam_cx(self) -> float:
        return p_to_lambda(self.p_cx)

    @property
    def lam_meas(self) -> float:
        return p_to_lambda(self.p_meas)

    @property
    def lam_in(self) -> float:
        return p_to_lambda(self.p_in)

    @property
    def lam_x(self) -> float:
        return p_to_lambda(self.p_x)

    @property
    def lam_con(self) -> float:
        if self.p_con is None:
            return 0.5 * (self.lam_idle + self.lam_x)
        return p_to_lambda(self.p_con)

    @property
    def effective_p_con(self) -> float:
        return lambda_to_p(self.lam_con)


@dataclass(frozen=True)
class ErrorBudget:
    cx_depth: int = 0
    t_idle: int = 0
    n_cx: int = 0
    n_meas: int = 0
    n_in: int = 0
    n_con: int = 0

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def budget_closed_form(core: CoreKind | int | str, form: str, n: int) -> ErrorBudget:
    """Closed-form error budget of a full core on ``n`` register qubits."""
    core = CoreKind.parse(core)
    if n < 4:
        raise NoiseError(f"closed-form budgets need n >= 4, got {n}")
    if form == UNITARY:
        if core is CoreKind.CORE1:
            return ErrorBudget(n - 1, n * n - 3 * n + 2, n - 1)
        if core is CoreKind.CORE2:
            return ErrorBudget(n, n * n - 2 * n, n)
        return ErrorBudget(2 * n - 2, 2 * n * n - 6 * n + 4, 2 * n - 2)
    if form == NONUNITARY:
        if core is CoreKind.CORE1:
            return ErrorBudget(2, 4, 2 * n - 4, n - 3, n - 3, n - 2)
        if core is CoreKind.CORE2:
            return ErrorBudget(2, 2 * n - 2, 2 * n - 3, n - 3, n - 3, n - 2)
        return ErrorBudget(4, n + 8, 4 * n - 8, 2 * n - 6, 2 * n - 6, 2 * n - 4)
    raise NoiseError(f"form must be {UNITARY!r} or {NONUNITARY!r}, got {form!r}")


def budget_from_schedule(circuit: Circuit) -> ErrorBudget:
    """Count idle slots and elements of an explicit circuit."""
    sched = schedule_asap(circuit)
    return ErrorBudget(
        sched.cx_depth,
        count_idle(sched),
        circuit.count(CX),
        circuit.count(Measure),
        circuit.count(Init),
        circuit.count(Conditional),
    )


def lambda_total(budget: ErrorBudget, noise: NoiseParams) -> float:
    return (
        budget.t_idle * noise.lam_idle
        + budget.n_cx * noise.lam_cx
        + budget.n_meas * noise.lam_meas
        + budget.n_in * noise.lam_in
        + budget.n_con * noise.lam_con
    )


def fidelity_lower_bound(lam_total: float) -> float:
    if lam_total < 0:
        raise NoiseError(f"lambda_total must be non-negative, got {lam_total}")
    return math.exp(-lam_total)


def aux_count(core: CoreKind | int | str, n: int) -> int:
    core = CoreKind.parse(core)
    return 2 * n - 6 if core is CoreKind.CORE3 else n - 3


def bounds(core, n: int, noise: NoiseParams) -> tuple[float, float]:
    """(unitary, non-unitary) fidelity lower bounds of a core at width ``n``."""
    f_u = fidelity_lower_bound(lambda_total(budget_closed_form(core, UNITARY, n), noise))
    f_nu = fidelity_lower_bound(lambda_total(budget_closed_form(core, NONUNITARY, n), noise))
    return f_u, f_nu


# -- sweeps ---------------------------------------------------------------

P_IDLE_RANGE = (1e-5, 1e-3)
P_CX_RANGE = (1e-4, 1e-2)
# 3 x 3 decades spanning both ranges
DEFAULT_PAIRS: tuple[tuple[float, float], ...] = tuple(
    itertools.product((1e-5, 1e-4, 1e-3), (1e-4, 1e-3, 1e-2))
)


@dataclass(frozen=True)
class GridSweep:
    core: CoreKind
    n: int
    p_idle: np.ndarray
    p_cx: np.ndarray
    f_unitary: np.ndarray  # [i_idle, j_cx]
    f_nonunitary: np.ndarray

    @property
    def delta_f(self) -> np.ndarray:
        return self.f_unitary - self.f_nonunitary

    def rows(self) -> Iterable[tuple[float, float, float, float, float]]:
        d = self.delta_f
        for i, pi in enumerate(self.p_idle):
            for j, pc in enumerate(self.p_cx):
                yield float(pi), float(pc), float(self.f_unitary[i, j]), float(self.f_nonunitary[i, j]), float(d[i, j])

    def write_csv(self, path: str | Path) -> None:
        write_rows(path, ("p_idle", "p_cx", "f_unitary", "f_nonunitary", "delta_f"), self.rows())


def _log_range(bounds_: Sequence[float], resolution: int) -> np.ndarray:
    lo, hi = bounds_
    if resolution < 1 or lo <= 0 or hi <= 0 or hi < lo:
        raise NoiseError(f"invalid probability range {bounds_} at resolution {resolution}")
    if resolution == 1:
        return np.array([lo])
    return np.logspace(math.log10(lo), math.log10(hi), resolution)


def sweep_grid(
    core,
    n: int = 50,
    p_idle_range: Sequence[float] = P_IDLE_RANGE,
    p_cx_range: Sequence[float] = P_CX_RANGE,
    resolution: int = 21,
) -> GridSweep:
    """Log-spaced grid of fidelity bounds; ``delta_f > 0`` favours the unitary core."""
    core = CoreKind.parse(core)
    pi = _log_range(p_idle_range, resolution)
    pc = _log_range(p_cx_range, resolution)
    f_u = np.empty((pi.size, pc.size))
    f_nu = np.empty_like(f_u)
    for i, a in enumerate(pi):
        for j, b in enumerate(pc):
            f_u[i, j], f_nu[i, j] = bounds(core, n, NoiseParams.paper_convention(a, b))
    return GridSweep(core, n, pi, pc, f_u, f_nu)


@dataclass(frozen=True)
class LineSweep:
    p_idle: float
    p_cx: float
    n: np.ndarray
    delta_f: np.ndarray
    n_aux: np.ndarray


def sweep_lines(
    core,
    n_max: int = 200,
    pairs: Sequence[tuple[float, float]] = DEFAULT_PAIRS,
    n_min: int = 4,
) -> list[LineSweep]:
    core = CoreKind.parse(core)
    if n_max < n_min:
        raise NoiseError(f"empty width range [{n_min}, {n_max}]")
    ns = np.arange(n_min, n_max + 1)
    out = []
    for p_idle, p_cx in pairs:
        noise = NoiseParams.paper_convention(p_idle, p_cx)
        delta = np.array([np.subtract(*bounds(core, int(n), noise)) for n in ns])
        out.append(LineSweep(p_idle, p_cx, ns, delta, np.array([aux_count(core, int(n)) for n in ns])))
    return out


def write_lines_csv(path: str | Path, lines: Sequence[LineSweep]) -> None:
    rows = (
        (ln.p_idle, ln.p_cx, int(n), float(d), int(a))
        for ln in lines
        for n, d, a in zip(ln.n, ln.delta_f, ln.n_aux)
    )
    write_rows(path, ("p_idle", "p_cx", "n", "delta_f", "n_aux"), rows)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


# -- Monte Carlo validation ---------------------------------------------------

_PAULI1 = ("X", "Y", "Z")
_PAULI2 = tuple(a + b for a, b in itertools.product("IXYZ", repeat=2) if a + b != "II")


@dataclass(frozen=True)
class PauliChannelSpec:
    """Error probability per circuit element; each draws uniformly from its Pauli set."""

    idle: float = 0.0
    cx: float = 0.0
    meas: float = 0.0
    init: float = 0.0
    con: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if not 0.0 <= getattr(self, f.name) < 0.5:
                raise NoiseError(f"{f.name} probability must lie in [0, 1/2)")

    @classmethod
    def from_noise(cls, noise: NoiseParams) -> PauliChannelSpec:
        return cls(noise.p_idle, noise.p_cx, noise.p_meas, noise.p_in, noise.effective_p_con)

    def to_noise(self) -> NoiseParams:
        return NoiseParams(self.idle, self.cx, self.meas, self.init, 0.0, self.con)


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    sigma: float
    bound: float
    lambda_total: float
    shots: int

    @property
    def passed(self) -> bool:
        return self.estimate >= self.bound - 3 * self.sigma


def _pauli_gates(label: str, qubits: Sequence[int]) -> list[Instruction]:
    out: list[Instruction] = []
    for p, q in zip(label, qubits):
        if p in "XY":
            out.append(Gate1("X", q))
        if p in "ZY":
            out.append(Gate1("Z", q))
    return out


def _error_sites(circuit: Circuit, channel: PauliChannelSpec) -> list[tuple[int, float, tuple[str, ...], tuple[int, ...]]]:
    """(insert-after index, probability, Pauli set, qubits) for every error location.

    Index -1 means before the first instruction.  Idle slots sit right after
    the idle qubit's latest earlier CX (or its init / the circuit start).
    """
    sched = schedule_asap(circuit)
    ins = circuit.instructions
    sites: list[tuple[int, float, tuple[str, ...], tuple[int, ...]]] = []
    step_of: dict[int, int] = {}
    for s, idxs in enumerate(sched.cx_steps, start=1):
        for i in idxs:
            step_of[i] = s
    for i, op in enumerate(ins):
        if isinstance(op, CX):
            sites.append((i, channel.cx, _PAULI2, op.qubits))
        elif isinstance(op, Init):
            sites.append((i, channel.init, _PAULI1, op.qubits))
        elif isinstance(op, Measure):
            sites.append((i - 1, channel.meas, _PAULI1, op.qubits))
        elif isinstance(op, Conditional):
            sites.append((i, channel.con, _PAULI1, op.qubits))
    anchor_init = {op.qubit: i for i, op in enumerate(ins) if isinstance(op, Init)}
    for s, used in enumerate(sched.busy, start=1):
        for q, life in sched.lifetimes.items():
            if life is None or not life[0] <= s <= life[1] or q in used:
                continue
            earlier = [i for i, st in step_of.items() if st < s and q in ins[i].qubits]
            pos = max(earlier) if earlier else anchor_init.get(q, -1)
            sites.append((pos, channel.idle, _PAULI1, (q,)))
    if sched.conditional_step is not None:
        for q in range(circuit.n_register):
            if q not in sched.conditional_qubits:
                sites.append((len(ins) - 1, channel.idle, _PAULI1, (q,)))
    return sites


def monte_carlo_bound_check(
    circuit: Circuit,
    params=None,
    noise: PauliChannelSpec | NoiseParams | None = None,
    shots: int = 10_000,
    seed: int | None = 0,
    state: StateVector | np.ndarray | None = None,
) -> MonteCarloResult:
    """Trajectory estimate of the output state fidelity under Pauli noise.

    Trajectories without any error have fidelity 1 and are not simulated.
    """
    if circuit.n_qubits > 12:
        raise NoiseError(f"Monte Carlo check is capped at 12 qubits, circuit has {circuit.n_qubits}")
    if shots < 100:
        raise NoiseError("Monte Carlo check needs at least 100 shots")
    if noise is None:
        noise = PauliChannelSpec()
    channel = PauliChannelSpec.from_noise(noise) if isinstance(noise, NoiseParams) else noise
    rng = np.random.default_rng(seed)
    if state is None:
        state = haar_product_state(circuit.n_register, rng)
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    ideal = run(circuit, params, psi, mode="sample", seed=rng).state.amplitudes

    sites = _error_sites(circuit, channel)
    probs = np.array([s[1] for s in sites])
    fids = np.ones(shots)
    hits = rng.random((shots, len(sites))) < probs
    for k in np.flatnonzero(hits.any(axis=1)):
        inserts: dict[int, list[Instruction]] = {}
        for j in np.flatnonzero(hits[k]):
            pos, _, paulis, qubits = sites[j]
            label = paulis[rng.integers(len(paulis))]
            inserts.setdefault(pos, []).extend(_pauli_gates(label, qubits))
        body: list[Instruction] = list(inserts.get(-1, []))
        for i, op in enumerate(circuit.instructions):
            body.append(op)
            body.extend(inserts.get(i, []))
        noisy = circuit.with_instructions(body)
        out = run(noisy, params, psi, mode="sample", seed=rng).state.amplitudes
        fids[k] = abs(np.vdot(ideal, out)) ** 2
    lam = lambda_total(budget_from_schedule(circuit), channel.to_noise())
    return MonteCarloResult(
        float(fids.mean()), float(fids.std(ddof=1) / math.sqrt(shots)), fidelity_lower_bound(lam), lam, shots
    )
