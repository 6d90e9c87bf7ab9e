"""Dynamic-circuit IR, validation, ASAP scheduling and JSON round-tripping.

Qubits ``0 .. n_register-1`` are register qubits; auxiliary qubits always
follow them.  Rotations carry parameter ids, not values.  A conditional Pauli
fires when the parity (XOR) of its classical bits is 1.
"""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any, Union

SCHEMA_VERSION = 1

REGISTER = "register"
AUXILIARY = "auxiliary"


class CircuitError(ValueError):
    """Raised for malformed circuits or circuit files."""


@dataclass(frozen=True)
class QubitRef:
    index: int
    role: str = REGISTER


@dataclass(frozen=True)
class Rotation:
    axis: str
    qubit: int
    param: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Gate1:
    name: str
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class CX:
    control: int
    target: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class Init:
    state: str
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Measure:
    basis: str
    qubit: int
    bit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Conditional:
    """Pauli on ``qubit`` applied iff XOR of ``bits`` is 1.

    ``classical`` marks a correction that may equally be applied in
    post-processing (the deferred-measurement form emits these).
    """

    pauli: str
    qubit: int
    bits: tuple[int, ...]
    classical: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", tuple(sorted(self.bits)))

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


Instruction = Union[Rotation, Gate1, CX, Init, Measure, Conditional]

_AXES = {"X", "Y", "Z"}
_GATES = {"X", "Z", "H"}
_INIT_STATES = {"zero", "plus"}
_BASES = {"Z", "X"}
_PAULIS = {"X", "Z"}


@dataclass(frozen=True)
class Circuit:
    qubits: tuple[QubitRef, ...]
    n_cbits: int = 0
    instructions: tuple[Instruction, ...] = ()
    n_params: int = 0

    @classmethod
    def create(
        cls,
        n_register: int,
        instructions: Iterable[Instruction] = (),
        *,
        n_aux: int = 0,
        n_cbits: int = 0,
        n_params: int = 0,
    ) -> Circuit:
        qubits = tuple(QubitRef(i, REGISTER) for i in range(n_register)) + tuple(
            QubitRef(n_register + i, AUXILIARY) for i in range(n_aux)
        )
        return cls(qubits, n_cbits, tuple(instructions), n_params)

    @property
    def n_register(self) -> int:
        return sum(1 for q in self.qubits if q.role == REGISTER)

    @property
    def n_aux(self) -> int:
        return len(self.qubits) - self.n_register

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def count(self, kind: type) -> int:
        return sum(1 for ins in self.instructions if isinstance(ins, kind))

    def with_instructions(self, instructions: Iterable[Instruction]) -> Circuit:
        return Circuit(self.qubits, self.n_cbits, tuple(instructions), self.n_params)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    index: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate(circuit: Circuit) -> ValidationReport:
    """Check structural invariants; report the first violation found."""
    n_reg = circuit.n_register
    for pos, q in enumerate(circuit.qubits):
        if q.index != pos:
            return ValidationReport(False, None, f"qubit index {q.index} at position {pos}")
        if q.role not in (REGISTER, AUXILIARY):
            return ValidationReport(False, None, f"unknown qubit role {q.role!r}")
        if q.role == REGISTER and pos >= n_reg:
            return ValidationReport(False, None, "register qubits must precede auxiliary qubits")

    n_q = circuit.n_qubits
    written: set[int] = set()
    dead: set[int] = set()
    initialised: set[int] = set()
    aux_used: set[int] = set()
    for i, ins in enumerate(circuit.instructions):
        for q in ins.qubits:
            if not 0 <= q < n_q:
                return ValidationReport(False, i, f"qubit {q} out of range")
            if q in dead:
                return ValidationReport(False, i, f"qubit {q} used after measurement")
        if isinstance(ins, Rotation):
            if ins.axis not in _AXES:
                return ValidationReport(False, i, f"bad rotation axis {ins.axis!r}")
            if not 0 <= ins.param < circuit.n_params:
                return ValidationReport(False, i, f"parameter id {ins.param} out of range")
        elif isinstance(ins, Gate1):
            if ins.name not in _GATES:
                return ValidationReport(False, i, f"bad gate {ins.name!r}")
        elif isinstance(ins, CX):
            if ins.control == ins.target:
                return ValidationReport(False, i, "self-loop")
        elif isinstance(ins, Init):
            if ins.state not in _INIT_STATES:
                return ValidationReport(False, i, f"bad init state {ins.state!r}")
            if ins.qubit < n_reg:
                return ValidationReport(False, i, "init on a register qubit")
            if ins.qubit in initialised or ins.qubit in aux_used:
                return ValidationReport(False, i, f"qubit {ins.qubit} initialised twice or after use")
            initialised.add(ins.qubit)
        elif isinstance(ins, Measure):
            if ins.basis not in _BASES:
                return ValidationReport(False, i, f"bad measurement basis {ins.basis!r}")
            if not 0 <= ins.bit < circuit.n_cbits:
                return ValidationReport(False, i, f"bit {ins.bit} out of range")
            if ins.bit in written:
                return ValidationReport(False, i, f"bit {ins.bit} written twice")
            written.add(ins.bit)
        elif isinstance(ins, Conditional):
            if ins.pauli not in _PAULIS:
                return ValidationReport(False, i, f"bad conditional Pauli {ins.pauli!r}")
            if not ins.bits:
                return ValidationReport(False, i, "conditional without bits")
            for b in ins.bits:
                if b not in written:
                    return ValidationReport(False, i, "read-before-write")
        else:
            return ValidationReport(False, i, f"unknown instruction {ins!r}")
        for q in ins.qubits:
            if q >= n_reg and q not in initialised:
                return ValidationReport(False, i, f"auxiliary qubit {q} used before init")
            if q >= n_reg:
                aux_used.add(q)
        if isinstance(ins, Measure):
            dead.add(ins.qubit)
    return ValidationReport(True)


@dataclass(frozen=True)
class Schedule:
    """CX layering plus the terminal conditional step.

    ``cx_steps`` hold instruction indices; steps are numbered from 1.
    ``lifetimes`` maps each qubit to its inclusive (first, last) live step,
    or ``None`` if it never spans a CX step.
    """

    cx_steps: tuple[tuple[int, ...], ...]
    conditional_step: tuple[int, ...] | None
    lifetimes: dict[int, tuple[int, int] | None] = field(hash=False)
    n_register: int = 0
    busy: tuple[frozenset[int], ...] = ()
    conditional_qubits: frozenset[int] = frozenset()

    @property
    def cx_depth(self) -> int:
        return len(self.cx_steps)


def schedule_asap(circuit: Circuit) -> Schedule:
    """Greedy ASAP CX layering.

    Only CX gates take time.  Rotations, fixed gates, inits and measurements
    are zero-duration but still order later CX gates on the same qubit.  All
    conditionals are gathered into a single terminal step.
    """
    ready = [0] * circuit.n_qubits
    steps: list[list[int]] = []
    busy: list[set[int]] = []
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    measured: set[int] = set()
    conditionals: list[int] = []
    for i, ins in enumerate(circuit.instructions):
        if isinstance(ins, CX):
            s = max(ready[ins.control], ready[ins.target]) + 1
            if s > len(steps):
                steps.append([])
                busy.append(set())
            steps[s - 1].append(i)
            busy[s - 1].update(ins.qubits)
            for q in ins.qubits:
                ready[q] = s
                first.setdefault(q, s)
                last[q] = s
        elif isinstance(ins, Conditional):
            conditionals.append(i)
        elif isinstance(ins, Measure):
            measured.add(ins.qubit)

    depth = len(steps)
    lifetimes: dict[int, tuple[int, int] | None] = {}
    for q in circuit.qubits:
        idx = q.index
        if idx in measured:
            end = last.get(idx)
        else:
            end = depth if (idx in first or q.role == REGISTER) else None
        start = 1 if q.role == REGISTER else first.get(idx)
        if start is None or end is None or depth == 0 or end < start:
            lifetimes[idx] = None
        else:
            lifetimes[idx] = (start, end)
    cond_qubits = frozenset(circuit.instructions[i].qubit for i in conditionals)
    return Schedule(
        cx_steps=tuple(tuple(s) for s in steps),
        conditional_step=tuple(conditionals) if conditionals else None,
        lifetimes=lifetimes,
        n_register=circuit.n_register,
        busy=tuple(frozenset(b) for b in busy),
        conditional_qubits=cond_qubits,
    )


def count_idle(schedule: Schedule) -> int:
    """Idle qubit-slots: live-but-unused qubits per CX step, plus register
    qubits untouched by the terminal conditional step."""
    idle = 0
    for s, used in enumerate(schedule.busy, start=1):
        for q, life in schedule.lifetimes.items():
            if life is not None and life[0] <= s <= life[1] and q not in used:
                idle += 1
    if schedule.conditional_step is not None:
        idle += sum(
            1 for q in range(schedule.n_register) if q not in schedule.conditional_qubits
        )
    return idle


# -- JSON ------------------------------------------------------------------


def _instruction_to_dict(ins: Instruction) -> dict[str, Any]:
    if isinstance(ins, Rotation):
        return {"kind": "rotation", "axis": ins.axis, "qubit": ins.qubit, "param": ins.param}
    if isinstance(ins, Gate1):
        return {"kind": "gate", "name": ins.name, "qubit": ins.qubit}
    if isinstance(ins, CX):
        return {"kind": "cx", "control": ins.control, "target": ins.target}
    if isinstance(ins, Init):
        return {"kind": "init", "state": ins.state, "qubit": ins.qubit}
    if isinstance(ins, Measure):
        return {"kind": "measure", "basis": ins.basis, "qubit": ins.qubit, "bit": ins.bit}
    if isinstance(ins, Conditional):
        d: dict[str, Any] = {
            "kind": "conditional",
            "pauli": ins.pauli,
            "qubit": ins.qubit,
            "bits": list(ins.bits),
        }
        if ins.classical:
            d["classical"] = True
        return d
    raise CircuitError(f"cannot serialise {ins!r}")


def _instruction_from_dict(d: dict[str, Any]) -> Instruction:
    try:
        kind = d["kind"]
        if kind == "rotation":
            return Rotation(d["axis"], int(d["qubit"]), int(d["param"]))
        if kind == "gate":
            return Gate1(d["name"], int(d["qubit"]))
        if kind == "cx":
            return CX(int(d["control"]), int(d["target"]))
        if kind == "init":
            return Init(d["state"], int(d["qubit"]))
        if kind == "measure":
            return Measure(d["basis"], int(d["qubit"]), int(d["bit"]))
        if kind == "conditional":
            return Conditional(
                d["pauli"], int(d["qubit"]), tuple(int(b) for b in d["bits"]), bool(d.get("classical", False))
            )
    except (KeyError, TypeError) as exc:
        raise CircuitError(f"malformed instruction {d!r}") from exc
    raise CircuitError(f"unknown instruction kind {kind!r}")


def to_dict(circuit: Circuit) -> dict[str, Any]:
    return {
        "version": SCHEMA_VERSION,
        "qubits": [{"index": q.index, "role": q.role} for q in circuit.qubits],
        "cbits": circuit.n_cbits,
        "parameters": circuit.n_params,
        "instructions": [_instruction_to_dict(i) for i in circuit.instructions],
    }


def from_dict(data: dict[str, Any]) -> Circuit:
    if data.get("version") != SCHEMA_VERSION:
        raise CircuitError(f"unsupported circuit schema version {data.get('version')!r}")
    try:
        qubits = tuple(QubitRef(int(q["index"]), q["role"]) for q in data["qubits"])
        return Circuit(
            qubits,
            int(data.get("cbits", 0)),
            tuple(_instruction_from_dict(i) for i in data["instructions"]),
            int(data.get("parameters", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise CircuitError("malformed circuit document") from exc


def dumps(circuit: Circuit) -> str:
    return json.dumps(to_dict(circuit), indent=1)


def loads(text: str) -> Circuit:
    return from_dict(json.loads(text))


def cx_gates(instructions: Sequence[Instruction]) -> list[CX]:
    return [ins for ins in instructions if isinstance(ins, CX)]


def replace_qubits(
    instructions: Iterable[Instruction], n_register: int, aux_offset: int, bit_offset: int
) -> list[Instruction]:
    """Shift auxiliary-qubit indices by ``aux_offset`` and bits by ``bit_offset``."""

    def q(i: int) -> int:
        return i + aux_offset if i >= n_register else i

    out: list[Instruction] = []
    for ins in instructions:
        if isinstance(ins, (Rotation, Gate1, Init)):
            out.append(dataclasses.replace(ins, qubit=q(ins.qubit)))
        elif isinstance(ins, CX):
            out.append(CX(q(ins.control), q(ins.target)))
        elif isinstance(ins, Measure):
            out.append(Measure(ins.basis, q(ins.qubit), ins.bit + bit_offset))
        elif isinstance(ins, Conditional):
            out.append(
                Conditional(ins.pauli, q(ins.qubit), tuple(b + bit_offset for b in ins.bits), ins.classical)
            )
    return out
