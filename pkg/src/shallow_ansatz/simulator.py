"""Dense statevector simulation of dynamic circuits.

States are kept as tensors of shape ``(2,) * m + (B,)``: one axis per live
qubit plus a trailing batch axis, so many input states (or many parameter
settings) run through a circuit at once.  Auxiliary qubits get an axis at
their ``Init`` and lose it at their ``Measure``; after projection the
measured qubit is in a product state, so dropping the axis is exact.

Basis convention: qubit 0 is the most significant bit, so index ``i`` of a
register state is ``|bin_n(i)>`` read left to right from qubit 0.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from .circuit import CX, Circuit, Conditional, Gate1, Init, Measure, Rotation

PRUNE = 1e-14

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_FIXED = {"H": _H, "X": _X, "Z": _Z}
_INIT = {
    "zero": np.array([1, 0], dtype=complex),
    "plus": np.array([1, 1], dtype=complex) / np.sqrt(2),
}


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    qubits: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        m = amps.size.bit_length() - 1
        if amps.size != 1 << m:
            raise SimulationError(f"state length {amps.size} is not a power of two")
        object.__setattr__(self, "amplitudes", amps)
        if not self.qubits:
            object.__setattr__(self, "qubits", tuple(range(m)))

    @property
    def n(self) -> int:
        return len(self.qubits)

    @classmethod
    def zero(cls, n: int) -> StateVector:
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_dict(self) -> dict:
        return {"n": self.n, "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes]}

    @classmethod
    def from_dict(cls, data: dict) -> StateVector:
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        state = cls(amps)
        if state.n != int(data["n"]):
            raise SimulationError(f"state declares n={data['n']} but has {amps.size} amplitudes")
        return state


@dataclass(frozen=True)
class Branch:
    outcomes: tuple[int, ...]
    probability: float
    state: StateVector


def fidelity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise |<a|b>|^2 for normalised states (1-D or (dim, B))."""
    return np.abs(np.sum(np.conj(a) * b, axis=0)) ** 2


# -- tensor kernels ----------------------------------------------------------


def _rotation(axis: str, theta: np.ndarray) -> np.ndarray:
    """2x2 rotation matrix, or (2, 2, B) for a vector of angles."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if axis == "Y":
        m = np.array([[c, -s], [s, c]], dtype=complex)
    elif axis == "X":
        m = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    else:
        e = np.exp(-0.5j * theta)
        zero = np.zeros_like(e)
        m = np.array([[e, zero], [zero, np.conj(e)]], dtype=complex)
    return m


def _apply_1q(t: np.ndarray, ax: int, m: np.ndarray) -> np.ndarray:
    if m.ndim == 2:
        return np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    moved = np.moveaxis(t, ax, 0)
    return np.moveaxis(np.einsum("ijb,j...b->i...b", m, moved), 0, ax)


def _apply_x(t: np.ndarray, ax: int) -> np.ndarray:
    return np.flip(t, axis=ax).copy()


def _apply_z(t: np.ndarray, ax: int) -> np.ndarray:
    out = t.copy()
    idx = [slice(None)] * t.ndim
    idx[ax] = 1
    out[tuple(idx)] *= -1
    return out


def _apply_cx(t: np.ndarray, c: int, tg: int) -> np.ndarray:
    out = t.copy()
    idx = [slice(None)] * t.ndim
    idx[c] = 1
    sub = t[tuple(idx)]
    out[tuple(idx)] = np.flip(sub, axis=tg if tg < c else tg - 1)
    return out


def _angle_table(circuit: Circuit, params: Sequence[float] | np.ndarray | None) -> np.ndarray:
    if params is None:
        params = np.zeros(0)
    angles = np.asarray(params, dtype=float)
    if angles.shape[0] != circuit.n_params:
        raise SimulationError(f"circuit has {circuit.n_params} parameters, got {angles.shape[0]}")
    return angles


def _prepare(circuit: Circuit, states: np.ndarray) -> tuple[np.ndarray, list[int]]:
    n = circuit.n_register
    states = np.asarray(states, dtype=complex)
    if states.ndim == 1:
        states = states[:, None]
    if states.shape[0] != 1 << n:
        raise SimulationError(f"input dimension {states.shape[0]} does not match {n} register qubits")
    return states.reshape((2,) * n + (states.shape[1],)), list(range(n))


def _finish(circuit: Circuit, t: np.ndarray, labels: list[int]) -> np.ndarray:
    n = circuit.n_register
    if sorted(labels) != list(range(n)):
        live = [q for q in labels if q >= n]
        raise SimulationError(f"auxiliary qubits {live} are never measured")
    order = [labels.index(q) for q in range(n)] + [len(labels)]
    return np.transpose(t, order).reshape(1 << n, -1)


def _walk(
    circuit: Circuit,
    angles: np.ndarray,
    states: np.ndarray,
    choose,
) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
    """Depth-first traversal of measurement outcomes.

    ``choose(probs0, probs1)`` returns which outcomes to follow at each
    measurement.  Yields (outcomes, unnormalised register states) per leaf.
    """
    ins = circuit.instructions
    t0, labels0 = _prepare(circuit, states)

    def go(
        i: int, t: np.ndarray, labels: list[int], bits: dict[int, int], outs: tuple[int, ...]
    ) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
        while i < len(ins):
            op = ins[i]
            if isinstance(op, CX):
                t = _apply_cx(t, labels.index(op.control), labels.index(op.target))
            elif isinstance(op, Rotation):
                t = _apply_1q(t, labels.index(op.qubit), _rotation(op.axis, angles[op.param]))
            elif isinstance(op, Conditional):
                if sum(bits[b] for b in op.bits) % 2:
                    ax = labels.index(op.qubit)
                    t = _apply_x(t, ax) if op.pauli == "X" else _apply_z(t, ax)
            elif isinstance(op, Gate1):
                t = _apply_1q(t, labels.index(op.qubit), _FIXED[op.name])
            elif isinstance(op, Init):
                t = t[..., None, :] * _INIT[op.state][:, None]
                labels = labels + [op.qubit]
            elif isinstance(op, Measure):
                ax = labels.index(op.qubit)
                if op.basis == "X":
                    t = _apply_1q(t, ax, _H)
                parts = [np.take(t, m, axis=ax) for m in (0, 1)]
                axes = tuple(range(parts[0].ndim - 1))
                probs = [np.sum(np.abs(p) ** 2, axis=axes) for p in parts]
                rest = labels[:ax] + labels[ax + 1 :]
                for m in choose(probs[0], probs[1]):
                    yield from go(i + 1, parts[m], rest, {**bits, op.bit: m}, outs + (m,))
                return
            i += 1
        yield outs, _finish(circuit, t, labels)

    yield from go(0, t0, labels0, {}, ())


def iter_branches(
    circuit: Circuit, params, states: np.ndarray
) -> Iterator[tuple[tuple[int, ...], np.ndarray, np.ndarray]]:
    """All outcome branches for a batch of inputs (columns of ``states``).

    Returns (outcomes, probabilities per column, normalised outputs).
    Branches with probability below ``PRUNE`` for every column are dropped.
    """
    angles = _angle_table(circuit, params)

    def both(p0, p1):
        return [m for m, p in enumerate((p0, p1)) if np.max(p) > PRUNE]

    for outs, psi in _walk(circuit, angles, states, both):
        probs = np.sum(np.abs(psi) ** 2, axis=0)
        safe = np.where(probs > PRUNE, np.sqrt(np.maximum(probs, PRUNE)), 1.0)
        yield outs, probs, psi / safe


def enumerate_batch(circuit: Circuit, params, states: np.ndarray) -> list[tuple[tuple[int, ...], np.ndarray, np.ndarray]]:
    return list(iter_branches(circuit, params, states))


def branch_batch(circuit: Circuit, angles: np.ndarray, states: np.ndarray, outcomes: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Follow one fixed outcome sequence; ``angles`` may be (P,) or (P, B).

    Returns (probabilities, normalised outputs) per column.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.shape[0] != circuit.n_params:
        raise SimulationError(f"circuit has {circuit.n_params} parameters, got {angles.shape[0]}")
    states = np.asarray(states, dtype=complex)
    if states.ndim == 1:
        states = states[:, None]
    if angles.ndim == 2 and states.shape[1] == 1:
        states = np.repeat(states, angles.shape[1], axis=1)
    want = list(outcomes)
    n_meas = circuit.count(Measure)
    if len(want) != n_meas:
        raise SimulationError(f"circuit has {n_meas} measurements, got {len(want)} outcomes")
    cursor = iter(want)

    def forced(p0, p1):
        m = next(cursor)
        p = p1 if m else p0
        if np.max(p) <= PRUNE:
            raise SimulationError("forced measurement outcome has zero probability")
        return [m]

    (_, psi), = _walk(circuit, angles, states, forced)
    probs = np.sum(np.abs(psi) ** 2, axis=0)
    return probs, psi / np.sqrt(probs)


def _as_input(circuit: Circuit, state) -> np.ndarray:
    if state is None:
        return StateVector.zero(circuit.n_register).amplitudes
    if isinstance(state, StateVector):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


def run(
    circuit: Circuit,
    params=None,
    state=None,
    *,
    mode: str = "enumerate",
    seed: int | np.random.Generator | None = None,
    outcomes: Sequence[int] | None = None,
) -> Branch | list[Branch]:
    """Simulate ``circuit`` on one register input.

    ``mode="enumerate"`` returns every non-zero branch; ``"sample"`` draws
    one branch with ``seed``; ``"branch"`` follows ``outcomes``.
    """
    psi = _as_input(circuit, state)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise SimulationError(f"input state is not normalised (norm {norm})")
    n = circuit.n_register
    if mode == "enumerate":
        return [
            Branch(outs, float(p[0]), StateVector(out[:, 0]))
            for outs, p, out in enumerate_batch(circuit, params, psi)
        ]
    angles = _angle_table(circuit, params)
    if mode == "branch":
        if outcomes is None:
            raise SimulationError("branch mode needs an outcome sequence")
        p, out = branch_batch(circuit, angles, psi, outcomes)
        return Branch(tuple(outcomes), float(p[0]), StateVector(out[:, 0]))
    if mode == "sample":
        rng = np.random.default_rng(seed)

        def draw(p0, p1):
            total = float(p0[0] + p1[0])
            return [int(rng.random() * total >= float(p0[0]))]

        (outs, out), = _walk(circuit, angles, psi, draw)
        p = float(np.sum(np.abs(out) ** 2))
        return Branch(outs, p, StateVector(out[:, 0] / np.sqrt(p)))
    raise SimulationError(f"unknown mode {mode!r}")


# -- equivalence oracle ------------------------------------------------------


def haar_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def haar_product_state(n: int, rng: np.random.Generator) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for _ in range(n):
        out = np.kron(out, haar_state(1, rng))
    return out


def test_inputs(n: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Every basis state followed by ``trials`` random states (product, entangled alternating)."""
    cols = [np.eye(1 << n, dtype=complex)]
    randoms = [haar_product_state(n, rng) if k % 2 == 0 else haar_state(n, rng) for k in range(trials)]
    if randoms:
        cols.append(np.stack(randoms, axis=1))
    return np.concatenate(cols, axis=1)


test_inputs.__test__ = False  # keep pytest from collecting the helper


@dataclass(frozen=True)
class EquivalenceReport:
    equivalent: bool
    worst_infidelity: float
    n_inputs: int
    branches_a: int
    branches_b: int

    def to_dict(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "worst_infidelity": self.worst_infidelity,
            "n_inputs": self.n_inputs,
            "branches_a": self.branches_a,
            "branches_b": self.branches_b,
        }


def channel_equivalent(
    a: Circuit,
    b: Circuit,
    trials: int = 100,
    seed: int | None = 0,
    *,
    params=None,
    tol: float = 1e-10,
) -> EquivalenceReport:
    """Compare the register action of two dynamic circuits branch by branch.

    Every branch of both circuits is compared with the first branch of ``a``
    on all basis inputs and ``trials`` random inputs; the worst
    ``1 - |<ref|out>|^2`` decides.  Parameterised circuits share one random
    angle vector unless ``params`` is given.
    """
    if a.n_register != b.n_register:
        raise SimulationError(f"register counts differ: {a.n_register} vs {b.n_register}")
    if a.n_params != b.n_params:
        raise SimulationError(f"parameter counts differ: {a.n_params} vs {b.n_params}")
    rng = np.random.default_rng(seed)
    if params is None:
        params = rng.uniform(-np.pi, np.pi, size=a.n_params)
    inputs = test_inputs(a.n_register, trials, rng)
    ref = p_ref = None
    worst = 0.0
    counts = []
    for circuit in (a, b):
        count = 0
        for _, probs, out in iter_branches(circuit, params, inputs):
            count += 1
            if ref is None:
                p_ref, ref = probs, out
            live = (probs > PRUNE) & (p_ref > PRUNE)
            if np.any(live):
                worst = max(worst, float(np.max(1.0 - fidelity(ref[:, live], out[:, live]))))
        counts.append(count)
    worst = max(worst, 0.0)
    return EquivalenceReport(worst < tol, worst, inputs.shape[1], counts[0], counts[1])
