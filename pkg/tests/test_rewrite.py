import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shallow_ansatz.ansatz import build_core
from shallow_ansatz.circuit import CX, Circuit, Conditional, Gate1, Init, Measure, Rotation, validate
from shallow_ansatz.rewrite import (
    PLUS_X,
    ZERO_Z,
    RewriteError,
    StructureError,
    commute_conditionals,
    primitive,
    rewrite_deferred,
    rewrite_ladder,
    substitute_cx,
)
from shallow_ansatz.simulator import channel_equivalent


def test_plus_x_primitive_layout():
    out, rep = substitute_cx(Circuit.create(3, [CX(1, 2)]), 0, PLUS_X)
    a = 3
    assert out.instructions == (
        Init("plus", a),
        CX(a, 2),
        CX(1, a),
        Measure("Z", a, 0),
        Conditional("X", 2, (0,)),
    )
    assert (rep.substituted, rep.added_aux, rep.added_conditionals) == ([0], 1, 1)
    assert out.n_aux == 1 and out.n_cbits == 1


def test_zero_z_primitive_layout():
    out, _ = substitute_cx(Circuit.create(3, [CX(1, 2)]), 0, ZERO_Z)
    assert out.instructions == (
        Init("zero", 3),
        CX(1, 3),
        CX(3, 2),
        Measure("X", 3, 0),
        Conditional("Z", 1, (0,)),
    )


@pytest.mark.parametrize("variant", [PLUS_X, ZERO_Z])
def test_substituted_cx_is_channel_equivalent(variant):
    before = Circuit.create(2, [CX(0, 1)])
    after, _ = substitute_cx(before, 0, variant)
    assert channel_equivalent(before, after, trials=30, seed=3).equivalent


def test_substitute_rejects_bad_index():
    c = Circuit.create(2, [Gate1("H", 0), CX(0, 1)])
    with pytest.raises(RewriteError):
        substitute_cx(c, 0)
    with pytest.raises(RewriteError):
        substitute_cx(c, 5)
    with pytest.raises(RewriteError):
        primitive(0, 1, 2, 0, "teleport")


def _with_bit(body):
    # a written bit 0 so conditionals are meaningful
    head = [Init("zero", 4), Measure("Z", 4, 0)]
    return Circuit.create(4, head + body, n_aux=1, n_cbits=1)


def test_x_on_control_spreads_to_target():
    out, rep = commute_conditionals(_with_bit([Conditional("X", 2, (0,)), CX(2, 3)]))
    assert out.instructions[2] == CX(2, 3)
    assert set(out.instructions[3:]) == {Conditional("X", 2, (0,)), Conditional("X", 3, (0,))}
    assert rep.added_conditionals == 1


def test_x_on_target_passes_unchanged():
    out, _ = commute_conditionals(_with_bit([Conditional("X", 3, (0,)), CX(2, 3)]))
    assert out.instructions[2:] == (CX(2, 3), Conditional("X", 3, (0,)))


def test_z_on_target_spreads_to_control():
    out, _ = commute_conditionals(_with_bit([Conditional("Z", 3, (0,)), CX(2, 3)]))
    assert set(out.instructions[3:]) == {Conditional("Z", 2, (0,)), Conditional("Z", 3, (0,))}


def test_identical_conditionals_cancel():
    out, rep = commute_conditionals(_with_bit([Conditional("X", 1, (0,)), Conditional("X", 1, (0,)), CX(0, 1)]))
    assert out.count(Conditional) == 0
    assert rep.added_conditionals == -2


def test_rotation_blocks_commutation():
    c = _with_bit([Conditional("X", 1, (0,)), Rotation("Y", 1, 0), CX(1, 2)])
    c = Circuit(c.qubits, c.n_cbits, c.instructions, 1)
    out, _ = commute_conditionals(c)
    assert out.instructions[2:] == (Conditional("X", 1, (0,)), Rotation("Y", 1, 0), CX(1, 2))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.sampled_from("XZ"), st.integers(0, 3)), min_size=1, max_size=4),
    st.lists(st.permutations(range(4)).map(lambda p: CX(p[0], p[1])), min_size=1, max_size=6),
)
def test_propagating_through_a_cx_block_twice_restores_the_frame(conds, gates):
    body = [Conditional(p, q, (0,)) for p, q in conds]
    once, _ = commute_conditionals(_with_bit(body + gates + gates[::-1]))
    direct, _ = commute_conditionals(_with_bit(body))
    tail = lambda c: {x for x in c.instructions if isinstance(x, Conditional)}
    assert tail(once) == tail(direct)


@pytest.mark.parametrize("core", [1, 2, 3])
def test_commutation_is_idempotent(core):
    nu, _ = rewrite_ladder(build_core(core, 7))
    once, _ = commute_conditionals(nu)
    twice, rep = commute_conditionals(once)
    assert twice == once
    assert rep.added_conditionals == 0
    if core == 1:
        # a single segment is already fully commuted by the ladder pass
        assert once == nu


def test_core1_n5_example():
    out, rep = rewrite_ladder(build_core(1, 5))
    assert (out.count(CX), out.count(Measure), out.count(Init), out.count(Conditional)) == (6, 2, 2, 3)
    assert rep.cx_depth == 2
    conds = out.instructions[-3:]
    assert all(isinstance(c, Conditional) for c in conds)


def test_core3_n5_example():
    out, _ = rewrite_ladder(build_core(3, 5))
    assert (out.count(CX), out.count(Measure), out.count(Init), out.count(Conditional)) == (12, 4, 4, 6)


@pytest.mark.parametrize("n", range(4, 13))
def test_table_counts_for_full_cores(n):
    expected = {
        1: (2 * n - 4, n - 3, n - 3, n - 2),
        2: (2 * n - 3, n - 3, n - 3, n - 2),
        3: (4 * n - 8, 2 * n - 6, 2 * n - 6, 2 * n - 4),
    }
    for core, counts in expected.items():
        out, rep = rewrite_ladder(build_core(core, n))
        assert (out.count(CX), out.count(Measure), out.count(Init), out.count(Conditional)) == counts
        assert rep.added_aux == len(rep.substituted)
        assert validate(out).ok


def test_width_three_core1_has_nothing_to_substitute():
    core = build_core(1, 3)
    out, rep = rewrite_ladder(core)
    assert out == core and rep.substituted == []


def test_keep_ends_false_substitutes_every_gate():
    out, rep = rewrite_ladder(build_core(1, 5), keep_ends=False)
    assert len(rep.substituted) == 4
    assert out.count(Measure) == 4
    assert channel_equivalent(build_core(1, 5), out, trials=10, seed=1).equivalent


@pytest.mark.parametrize("variant", [PLUS_X, ZERO_Z])
@pytest.mark.parametrize("core", [1, 2, 3])
def test_fixed_variants_stay_equivalent(core, variant):
    u = build_core(core, 5)
    nu, rep = rewrite_ladder(u, variant)
    assert set(rep.variants) <= {variant}
    assert channel_equivalent(u, nu, trials=20, seed=2).equivalent


def test_dense_block_is_rejected():
    dense = Circuit.create(4, [CX(0, 1), CX(0, 2), CX(0, 3)])
    with pytest.raises(StructureError, match="too dense"):
        rewrite_ladder(dense)


def test_dynamic_input_is_rejected():
    nu, _ = rewrite_ladder(build_core(1, 5))
    with pytest.raises(StructureError):
        rewrite_ladder(nu)


def test_deferred_core3_measures_last():
    nu, _ = rewrite_ladder(build_core(3, 4))
    d, _ = rewrite_deferred(nu)
    ins = d.instructions
    first_measure = min(i for i, x in enumerate(ins) if isinstance(x, Measure))
    assert all(isinstance(x, (Measure, Conditional)) for x in ins[first_measure:])
    assert all(x.classical for x in ins if isinstance(x, Conditional))
    assert validate(d).ok


def test_deferred_without_measurements_is_identity():
    core = build_core(3, 5)
    out, _ = rewrite_deferred(core)
    assert out == core


def test_deferred_matches_mid_circuit_form():
    nu, _ = rewrite_ladder(build_core(3, 5))
    d, _ = rewrite_deferred(nu)
    assert channel_equivalent(nu, d, trials=20, seed=4).equivalent
