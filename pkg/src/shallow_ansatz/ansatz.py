"""Layered ansatz and the three CX core circuits."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .circuit import (
    AUXILIARY,
    CX,
    Circuit,
    Conditional,
    Init,
    Instruction,
    Measure,
    QubitRef,
    Rotation,
    replace_qubits,
)
from .rewrite import rewrite_deferred, rewrite_ladder

UNITARY = "unitary"
NONUNITARY = "nonunitary"
DEFERRED = "deferred"
FORMS = (UNITARY, NONUNITARY, DEFERRED)


class CoreKind(IntEnum):
    CORE1 = 1
    CORE2 = 2
    CORE3 = 3

    @classmethod
    def parse(cls, value: int | str | CoreKind) -> CoreKind:
        if isinstance(value, str):
            value = value.lower().removeprefix("core")
        try:
            return cls(int(value))
        except ValueError as exc:
            raise ValueError(f"unknown core {value!r}; expected 1, 2 or 3") from exc


def core_gates(kind: CoreKind | int, n: int) -> list[CX]:
    kind = CoreKind.parse(kind)
    if n < 3:
        raise ValueError(f"core width must be at least 3, got {n}")
    down = [CX(i, i + 1) for i in range(n - 1)]
    if kind is CoreKind.CORE1:
        return down
    if kind is CoreKind.CORE2:
        return down + [CX(n - 1, 0)]
    # second ladder keeps the orientation and runs back up
    return down + down[::-1]


def build_core(kind: CoreKind | int, n: int) -> Circuit:
    """Unitary core: 1 = CX ladder, 2 = ladder plus wrap gate, 3 = ladder down and back up."""
    return Circuit.create(n, core_gates(kind, n))


@dataclass(frozen=True)
class AnsatzSpec:
    n: int
    layers: int
    core: CoreKind = CoreKind.CORE1
    rotation: str = "Y"
    form: str = UNITARY

    def __post_init__(self) -> None:
        object.__setattr__(self, "core", CoreKind.parse(self.core))
        if self.rotation not in ("Y", "XYZ"):
            raise ValueError(f"rotation must be 'Y' or 'XYZ', got {self.rotation!r}")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.layers < 0:
            raise ValueError("layers must be non-negative")
        if self.n < 3:
            raise ValueError(f"ansatz width must be at least 3, got {self.n}")

    @property
    def axes(self) -> str:
        return self.rotation

    @property
    def n_params(self) -> int:
        return self.n * len(self.axes) * (self.layers + 1)


def rewritten_core(kind: CoreKind | int, n: int, form: str) -> Circuit:
    core = build_core(kind, n)
    if form == UNITARY:
        return core
    core, _ = rewrite_ladder(core)
    if form == DEFERRED:
        core, _ = rewrite_deferred(core)
    return core


def build_ansatz(spec: AnsatzSpec) -> Circuit:
    """``layers`` x (rotation layer, core) followed by a final rotation layer.

    Parameter ids run layer-major, then qubit, then axis.
    """
    n = spec.n
    core = rewritten_core(spec.core, n, spec.form)
    k_aux = core.n_aux
    per_layer = n * len(spec.axes)
    body: list[Instruction] = []
    qubits = [QubitRef(i) for i in range(n)]

    def rotations(layer: int) -> None:
        for q in range(n):
            for a, axis in enumerate(spec.axes):
                body.append(Rotation(axis, q, layer * per_layer + q * len(spec.axes) + a))

    for layer in range(spec.layers):
        rotations(layer)
        aux_offset, bit_offset = layer * k_aux, layer * core.n_cbits
        body.extend(replace_qubits(core.instructions, n, aux_offset, bit_offset))
        qubits.extend(QubitRef(n + aux_offset + j, AUXILIARY) for j in range(k_aux))
    rotations(spec.layers)
    return Circuit(tuple(qubits), spec.layers * core.n_cbits, tuple(body), spec.n_params)


def ansatz_counts(circuit: Circuit) -> dict[str, int]:
    return {
        "params": circuit.n_params,
        "cx": circuit.count(CX),
        "measure": circuit.count(Measure),
        "init": circuit.count(Init),
        "conditional": circuit.count(Conditional),
    }
