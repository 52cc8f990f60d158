"""Operand reduction: translate classes, minimize, lengthen, relocation."""

import pytest

from conftest import assert_ref_integrity, corpus, front
from mco.errors import InternalError
from mco.gen import Asm, absv, ea, imm, reg
from mco.ir import TextNode, text_size
from mco.isa import SDM1, Am, Op
from mco.pipeline import Options, optimize
from mco.reduce import (
    MAX_LENGTHEN_PASSES,
    TranslateEntry,
    cost,
    form_tc,
    lengthen,
    minimize,
    relocate,
    set_faddr,
)
from mco.taskfile import read_task, write_task
from mco.vm import equivalent, execute
from oracles import oracle_instance, oracle_min_text


def far_jump_program(gap=200):
    a = Asm(0x1000)
    a.label("start")
    a.entry("start")
    a.ins(Op.JMP, ea(Am.ABS, "end"))
    for _ in range(gap):
        a.ins(Op.NOP)
    a.label("end")
    a.ins(Op.HALT)
    a.dlabel("w")
    a.word(0)
    return a.build()


def flat_text(prog):
    return [nd for blk in prog.blocks for nd in blk.nodes
            if isinstance(nd, TextNode)]


# ---------------------------------------------------------------------------
# translate classes and cost


def test_translate_class_of_a_jump():
    prog = front(far_jump_program())
    jmp = flat_text(prog)[0]
    assert form_tc(jmp, 0) == [
        TranslateEntry(Op.JMP, Am.D8, ()),
        TranslateEntry(Op.JMP, Am.D16, ()),
        TranslateEntry(Op.JMP, Am.ABS, ()),
    ]


def test_translate_class_singletons():
    a = Asm(0x1000)
    a.label("start")
    a.entry("start")
    a.ins(Op.ADD, reg(1), reg(2))
    a.ins(Op.LDI, reg(0), imm(9))
    a.ins(Op.HALT)
    a.dlabel("w")
    a.word(0)
    prog = front(a.build())
    addn, ldin = flat_text(prog)[:2]
    assert form_tc(addn, 0) == [TranslateEntry(Op.ADD, Am.REG, 1)]
    assert form_tc(addn, 1) == [TranslateEntry(Op.ADD, Am.REG, 2)]
    assert form_tc(ldin, 1) == [TranslateEntry(Op.LDI, Am.IMM32, ())]


def test_cost_orders_short_before_long():
    prog = front(far_jump_program())
    jmp = flat_text(prog)[0]
    costs = [cost(jmp, 0, Op.JMP, m) for m in (Am.D8, Am.D16, Am.ABS)]
    assert costs == [4, 6, 10]
    assert costs == sorted(costs)


# ---------------------------------------------------------------------------
# minimize


def test_minimize_installs_shortest_ignoring_reach():
    prog = front(far_jump_program(gap=500))    # way out of short reach
    jmp = flat_text(prog)[0]
    assert jmp.ops[0].mode == Am.ABS and jmp.nbytes == 5
    saved = minimize(prog.blocks)
    assert jmp.ops[0].mode == Am.D8 and jmp.nbytes == 2
    assert saved >= 3


def test_minimize_leaves_plain_operands_alone():
    a = Asm(0x1000)
    a.label("start")
    a.entry("start")
    a.ins(Op.LD, absv(0x00BADCAF), reg(0))   # not relocatable
    a.ins(Op.LDI, reg(1), imm(0x12345678))
    a.ins(Op.HALT)
    a.dlabel("w")
    a.word(0)
    prog = front(a.build())
    minimize(prog.blocks)
    ldn, ldin = flat_text(prog)[:2]
    assert ldn.ops[0].mode == Am.ABS
    # the stashed plain values survive re-encoding at relocation
    lengthen(prog.blocks, prog.load_addr)
    out = relocate(prog, a.build())
    assert (0x00BADCAF).to_bytes(4, "little") in out.text
    assert (0x12345678).to_bytes(4, "little") in out.text


# ---------------------------------------------------------------------------
# lengthen


def cascade_program():
    """Two short jumps where growing the second forces the first to grow.

    With both at their minimum the first jump's reach is exactly at the
    short-window edge; the second jump cannot hold its minimum, and its
    growth pushes the first over the edge on the next pass.
    """
    n1, n2, n3 = 10, 115, 12
    a = Asm(0x1000)
    a.label("start")
    a.entry("start")
    a.ins(Op.JMP, ea(Am.ABS, "t1"))        # A: span 129 if B stays short
    for _ in range(n1):
        a.ins(Op.NOP)
    a.ins(Op.JMP, ea(Am.ABS, "t2"))        # B: span 130 at minimum
    for _ in range(n2):
        a.ins(Op.NOP)
    a.label("t1")
    a.ins(Op.HALT)
    for _ in range(n3):
        a.ins(Op.NOP)
    a.label("t2")
    a.ins(Op.HALT)
    a.dlabel("w")
    a.word(0)
    return a.build()


def test_lengthen_cascade_pass_count():
    prog = front(cascade_program())
    minimize(prog.blocks)
    ja, jb = [nd for nd in flat_text(prog) if nd.opc == Op.JMP]
    assert ja.nbytes == jb.nbytes == 2
    passes = lengthen(prog.blocks, prog.load_addr)
    assert passes == 3                      # grow B, then A, then settle
    assert ja.ops[0].mode == Am.D16 and jb.ops[0].mode == Am.D16


def test_lengthen_single_pass_when_all_fit():
    a = Asm(0x1000)
    a.label("start")
    a.entry("start")
    a.ins(Op.JMP, ea(Am.ABS, "end"))
    for _ in range(20):
        a.ins(Op.NOP)
    a.label("end")
    a.ins(Op.HALT)
    a.dlabel("w")
    a.word(0)
    prog = front(a.build())
    minimize(prog.blocks)
    assert lengthen(prog.blocks, prog.load_addr) == 1


def test_lengthen_result_is_reach_valid():
    for seed in range(12):
        prog = front(oracle_instance(seed))
        minimize(prog.blocks)
        passes = lengthen(prog.blocks, prog.load_addr)
        assert passes <= MAX_LENGTHEN_PASSES
        set_faddr(prog.blocks, prog.load_addr)
        for nd in flat_text(prog):
            for op in nd.ops:
                if op.target is None or not SDM1.span_checked(op.mode):
                    continue
                reach = (op.target.faddr + (op.addr - op.target.iaddr)
                         - nd.faddr)
                assert SDM1.span_ok(op.mode, reach), \
                    f"seed {seed}: {nd.opc.name} reach {reach} in {op.mode.name}"


# ---------------------------------------------------------------------------
# exhaustive minimality


REDUCE_ONLY = Options(elim=False, distrib="off", macro="off", reduce=True)


@pytest.mark.parametrize("seed", range(15))
def test_reduction_matches_exhaustive_minimum(seed):
    tf = oracle_instance(seed)
    best = oracle_min_text(tf)
    res = optimize(tf, REDUCE_ONLY)
    assert len(res.task_out.text) == best


def test_reduction_keeps_forced_absolute_references():
    tf = oracle_instance(3, max_slots=3, big_filler=True)
    best = oracle_min_text(tf)
    res = optimize(tf, REDUCE_ONLY)
    assert len(res.task_out.text) == best
    # at least one reference had to stay a full absolute word
    out = front(res.task_out)
    far = [op for nd in flat_text(out) for op in nd.ops
           if op.target is not None and op.mode == Am.ABS]
    assert far


# ---------------------------------------------------------------------------
# relocation


def test_relocate_output_relinks_to_the_same_shape():
    tf = oracle_instance(7)
    res = optimize(tf, REDUCE_ONLY)
    prog = front(res.task_out)              # re-read the emitted task
    ref = front(tf)
    minimize(ref.blocks)
    lengthen(ref.blocks, ref.load_addr)

    a = flat_text(ref)
    b = flat_text(prog)
    assert [nd.opc for nd in a] == [nd.opc for nd in b]
    assert [nd.nbytes for nd in a] == [nd.nbytes for nd in b]
    # target relationships survive the re-encode byte-for-byte
    pos_a = {id(nd): i for i, nd in enumerate(a)}
    pos_b = {id(nd): i for i, nd in enumerate(b)}
    for na, nb in zip(a, b):
        ta = [(pos_a.get(id(op.target), -1), op.mode) for op in na.ops
              if op.target is not None and isinstance(op.target, TextNode)]
        tb = [(pos_b.get(id(op.target), -1), op.mode) for op in nb.ops
              if op.target is not None and isinstance(op.target, TextNode)]
        assert ta == tb
    assert_ref_integrity(prog)


def test_relocate_roundtrips_through_the_container(tmp_path):
    tf = oracle_instance(11)
    res = optimize(tf, REDUCE_ONLY)
    p = tmp_path / "out.mco"
    p.write_bytes(write_task(res.task_out))
    again = read_task(p.read_bytes())
    assert again.text == res.task_out.text
    assert again.relocs == res.task_out.relocs
    assert again.entry == res.task_out.entry


def test_reduction_preserves_semantics_on_generated_corpus():
    vectors = [[], [1, 2], [9]]
    for tf in corpus(10, start_seed=300):
        res = optimize(tf, REDUCE_ONLY)
        assert len(res.task_out.text) <= len(tf.text)
        assert equivalent(tf, res.task_out, vectors)
