"""Measurement-based CX substitution and conditional-Pauli commutation.

The commutation pass is a Pauli-frame sweep: pending conditional Paulis are
carried forward through the circuit, spread by CX gates, and flushed just
before any instruction they cannot pass.  Conditionals on the same qubit and
Pauli merge by XOR-ing their bit sets, so two identical ones cancel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .circuit import (
    AUXILIARY,
    CX,
    Circuit,
    Conditional,
    Gate1,
    Init,
    Instruction,
    Measure,
    QubitRef,
    schedule_asap,
)

PLUS_X = "plus_x"
ZERO_Z = "zero_z"
VARIANTS = (PLUS_X, ZERO_Z)


class RewriteError(ValueError):
    pass


class StructureError(RewriteError):
    """The CX sequence is not ladder-structured (too dense to rewrite)."""


@dataclass
class RewriteReport:
    substituted: list[int] = field(default_factory=list)
    added_aux: int = 0
    added_conditionals: int = 0
    events: list[dict[str, Any]] = field(default_factory=list)
    variants: list[str] = field(default_factory=list)
    cx_depth: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "substituted": list(self.substituted),
            "added_aux": self.added_aux,
            "added_conditionals": self.added_conditionals,
            "events": list(self.events),
            "variants": list(self.variants),
            "cx_depth": self.cx_depth,
        }


def primitive(control: int, target: int, aux: int, bit: int, variant: str = PLUS_X) -> list[Instruction]:
    """Five-instruction measurement-based CX on (control, target) via ``aux``."""
    if variant == PLUS_X:
        return [
            Init("plus", aux),
            CX(aux, target),
            CX(control, aux),
            Measure("Z", aux, bit),
            Conditional("X", target, (bit,)),
        ]
    if variant == ZERO_Z:
        return [
            Init("zero", aux),
            CX(control, aux),
            CX(aux, target),
            Measure("X", aux, bit),
            Conditional("Z", control, (bit,)),
        ]
    raise RewriteError(f"unknown primitive variant {variant!r}")


def substitute_cx(circuit: Circuit, index: int, variant: str = PLUS_X) -> tuple[Circuit, RewriteReport]:
    if not 0 <= index < len(circuit.instructions):
        raise RewriteError(f"instruction index {index} out of range")
    gate = circuit.instructions[index]
    if not isinstance(gate, CX):
        raise RewriteError(f"instruction {index} is not a CX")
    aux = circuit.n_qubits
    bit = circuit.n_cbits
    body = primitive(gate.control, gate.target, aux, bit, variant)
    ins = circuit.instructions
    out = Circuit(
        circuit.qubits + (QubitRef(aux, AUXILIARY),),
        circuit.n_cbits + 1,
        ins[:index] + tuple(body) + ins[index + 1 :],
        circuit.n_params,
    )
    return out, RewriteReport(substituted=[index], added_aux=1, added_conditionals=1, variants=[variant])


def _xor(a: frozenset[int], b: frozenset[int]) -> frozenset[int]:
    return a ^ b


def commute_conditionals(
    circuit: Circuit, *, through_measurements: bool = False, classical: bool = False
) -> tuple[Circuit, RewriteReport]:
    """Push every conditional Pauli as far towards the end as it can go.

    Propagation through CX: X on control spreads to the target, Z on target
    spreads to the control; the other two cases pass unchanged.  H swaps X
    and Z; fixed X/Z gates pass (a branch-global sign).  Rotations block.

    With ``through_measurements`` a pending flip before a measurement is
    folded into the measured bit (later readers of that bit get the flip's
    parity XOR-ed in) and a pending phase before it is dropped.
    """
    frame: dict[tuple[int, str], frozenset[int]] = {}
    alias: dict[int, frozenset[int]] = {}
    out: list[Instruction] = []
    events: list[dict[str, Any]] = []
    before = circuit.count(Conditional)

    def flush(qubit: int) -> None:
        for p in ("X", "Z"):
            bits = frame.pop((qubit, p), frozenset())
            if bits:
                out.append(Conditional(p, qubit, tuple(bits), classical))

    for i, ins in enumerate(circuit.instructions):
        if isinstance(ins, Conditional):
            bits: frozenset[int] = frozenset()
            for b in ins.bits:
                bits = _xor(bits, frozenset((b,)) ^ alias.get(b, frozenset()))
            key = (ins.qubit, ins.pauli)
            frame[key] = _xor(frame.get(key, frozenset()), bits)
            continue
        if isinstance(ins, CX):
            c, t = ins.control, ins.target
            xs = frame.get((c, "X"))
            if xs:
                frame[(t, "X")] = _xor(frame.get((t, "X"), frozenset()), xs)
                events.append({"index": i, "pauli": "X", "from": c, "to": t})
            zs = frame.get((t, "Z"))
            if zs:
                frame[(c, "Z")] = _xor(frame.get((c, "Z"), frozenset()), zs)
                events.append({"index": i, "pauli": "Z", "from": t, "to": c})
            out.append(ins)
            continue
        if isinstance(ins, Gate1):
            if ins.name == "H":
                q = ins.qubit
                xs, zs = frame.pop((q, "X"), None), frame.pop((q, "Z"), None)
                if xs:
                    frame[(q, "Z")] = xs
                if zs:
                    frame[(q, "X")] = zs
            out.append(ins)
            continue
        if isinstance(ins, Measure) and through_measurements:
            flip, phase = ("X", "Z") if ins.basis == "Z" else ("Z", "X")
            flipped = frame.pop((ins.qubit, flip), frozenset())
            frame.pop((ins.qubit, phase), None)
            if flipped:
                alias[ins.bit] = flipped
                events.append({"index": i, "pauli": flip, "from": ins.qubit, "into_bit": ins.bit})
            out.append(ins)
            continue
        # rotations, inits, measurements: flush what sits on the touched qubit
        for q in ins.qubits:
            flush(q)
        out.append(ins)

    for q, p in sorted(frame):
        bits = frame[(q, p)]
        if bits:
            out.append(Conditional(p, q, tuple(bits), classical))

    result = circuit.with_instructions(out)
    return result, RewriteReport(added_conditionals=result.count(Conditional) - before, events=events)


# -- ladder rewriting -------------------------------------------------------


@dataclass
class _Segment:
    indices: list[int]
    direction: str | None  # "forward": control follows previous target


def _segments(circuit: Circuit, block: list[int]) -> list[_Segment]:
    """Split a run of CX gates into simple-path ladder segments.

    A segment ends where the chain closes a cycle (core 2's wrap gate) or
    turns back on the same qubit pair (core 3's turning point).  Any other
    break means the block is not a ladder.
    """
    ins = circuit.instructions
    segs: list[_Segment] = []
    cur = _Segment([block[0]], None)
    visited = set(ins[block[0]].qubits)
    for idx in block[1:]:
        g, prev = ins[idx], ins[cur.indices[-1]]
        if g.control == prev.target and cur.direction in (None, "forward"):
            fresh, direction = g.target, "forward"
        elif g.target == prev.control and cur.direction in (None, "backward"):
            fresh, direction = g.control, "backward"
        else:
            fresh, direction = None, None
        if direction is not None and fresh not in visited:
            cur.indices.append(idx)
            cur.direction = direction
            visited.add(fresh)
            continue
        closes_cycle = direction is not None
        turns_back = set(g.qubits) == set(prev.qubits)
        if not (closes_cycle or turns_back):
            raise StructureError(
                f"CX at instruction {idx} does not continue the ladder (too dense to rewrite)"
            )
        segs.append(cur)
        cur = _Segment([idx], None)
        visited = set(g.qubits)
    segs.append(cur)
    return segs


def _cx_blocks(circuit: Circuit) -> list[list[int]]:
    blocks: list[list[int]] = []
    cur: list[int] = []
    for i, ins in enumerate(circuit.instructions):
        if isinstance(ins, CX):
            cur.append(i)
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    return blocks


def _auto_variant(direction: str | None) -> str:
    return ZERO_Z if direction == "backward" else PLUS_X


def rewrite_ladder(
    circuit: Circuit, variant: str | None = None, keep_ends: bool = True
) -> tuple[Circuit, RewriteReport]:
    """Replace interior ladder CX gates by measurement-based primitives.

    Every maximal run of CX gates is split into ladder segments.  Within a
    segment the interior gates (all gates if ``keep_ends`` is false) are
    substituted one at a time, front to back, and the new conditional is
    commuted to the end of the segment before the next substitution.
    ``variant=None`` picks ``plus_x`` for forward (control-chained) segments
    and ``zero_z`` for backward (target-chained) ones; both give CX depth 2
    per segment.
    """
    if variant is not None and variant not in VARIANTS:
        raise RewriteError(f"unknown primitive variant {variant!r}")
    if circuit.count(Measure) or circuit.count(Conditional) or circuit.count(Init):
        raise StructureError("ladder rewriting expects a unitary input circuit")

    report = RewriteReport()
    plan: dict[int, _Segment] = {}
    for block in _cx_blocks(circuit):
        for seg in _segments(circuit, block):
            plan[seg.indices[0]] = seg

    qubits = circuit.qubits
    n_cbits = circuit.n_cbits
    out: list[Instruction] = []
    before = circuit.count(Conditional)
    i = 0
    ins = circuit.instructions
    while i < len(ins):
        seg = plan.get(i)
        if seg is None:
            out.append(ins[i])
            i += 1
            continue
        chosen = variant or _auto_variant(seg.direction)
        targets = seg.indices if not keep_ends else seg.indices[1:-1]
        work = Circuit(qubits, n_cbits, tuple(ins[j] for j in seg.indices), circuit.n_params)
        for j in targets:
            # gates of a simple-path segment are pairwise distinct
            work, _ = substitute_cx(work, work.instructions.index(ins[j]), chosen)
            work, rep = commute_conditionals(work)
            for ev in rep.events:
                report.events.append({**ev, "segment": seg.indices[0]})
            report.substituted.append(j)
            report.variants.append(chosen)
        qubits, n_cbits = work.qubits, work.n_cbits
        out.extend(work.instructions)
        i = seg.indices[-1] + 1

    result = Circuit(qubits, n_cbits, tuple(out), circuit.n_params)
    report.added_aux = result.n_qubits - circuit.n_qubits
    report.added_conditionals = result.count(Conditional) - before
    report.cx_depth = schedule_asap(result).cx_depth
    return result, report


def rewrite_deferred(circuit: Circuit) -> tuple[Circuit, RewriteReport]:
    """Move every measurement to the end of the circuit.

    Conditionals are first carried through everything, measurements
    included, so they all end up terminal and are flagged ``classical``;
    the measurements can then be postponed freely.  An input without
    measurements is returned unchanged.
    """
    if not circuit.count(Measure):
        return circuit, RewriteReport(cx_depth=schedule_asap(circuit).cx_depth)
    moved, rep = commute_conditionals(circuit, through_measurements=True, classical=True)
    body = list(moved.instructions)
    tail_start = len(body)
    while tail_start > 0 and isinstance(body[tail_start - 1], Conditional):
        tail_start -= 1
    if any(isinstance(x, Conditional) for x in body[:tail_start]):
        raise RewriteError("a conditional cannot be carried to the end of the circuit")
    measures = [x for x in body[:tail_start] if isinstance(x, Measure)]
    others = [x for x in body[:tail_start] if not isinstance(x, Measure)]
    result = moved.with_instructions(others + measures + body[tail_start:])
    rep.cx_depth = schedule_asap(result).cx_depth
    return result, rep
