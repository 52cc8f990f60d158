"""Architecture table checks: every value here is written out literally so a
table regression cannot hide behind its own definition."""

import pytest

from mco.isa import DISP_BASE, SDM1, Am, Op

# (byte, opcode, operand modes) — the full wire encoding, restated by hand.
ENCODINGS = [
    (0x00, Op.HALT, ()),
    (0x01, Op.NOP, ()),
    (0x02, Op.RET, ()),
    (0x10, Op.JMP, (Am.ABS,)),
    (0x11, Op.JMP, (Am.D16,)),
    (0x12, Op.JMP, (Am.D8,)),
    (0x14, Op.JSR, (Am.ABS,)),
    (0x15, Op.JSR, (Am.D16,)),
    (0x16, Op.JSR, (Am.D8,)),
    (0x18, Op.BEQ, (Am.ABS,)),
    (0x19, Op.BEQ, (Am.D16,)),
    (0x1A, Op.BEQ, (Am.D8,)),
    (0x1C, Op.BNE, (Am.ABS,)),
    (0x1D, Op.BNE, (Am.D16,)),
    (0x1E, Op.BNE, (Am.D8,)),
    (0x20, Op.LEA, (Am.ABS, Am.REG)),
    (0x21, Op.LEA, (Am.D16, Am.REG)),
    (0x22, Op.LEA, (Am.D8, Am.REG)),
    (0x24, Op.LD, (Am.ABS, Am.REG)),
    (0x25, Op.LD, (Am.D16, Am.REG)),
    (0x26, Op.LD, (Am.D8, Am.REG)),
    (0x28, Op.ST, (Am.ABS, Am.REG)),
    (0x29, Op.ST, (Am.D16, Am.REG)),
    (0x2A, Op.ST, (Am.D8, Am.REG)),
    (0x2C, Op.LDI, (Am.REG, Am.IMM32)),
    (0x30, Op.MOV, (Am.REG, Am.REG)),
    (0x31, Op.ADD, (Am.REG, Am.REG)),
    (0x32, Op.SUB, (Am.REG, Am.REG)),
    (0x33, Op.CMP, (Am.REG, Am.REG)),
    (0x34, Op.ADDI, (Am.REG, Am.IMM32)),
    (0x38, Op.OUT, (Am.REG,)),
    (0x39, Op.IN, (Am.REG,)),
    (0x3A, Op.PUSH, (Am.REG,)),
    (0x3B, Op.POP, (Am.REG,)),
]


def test_encoding_table_is_exactly_this():
    for byte, op, ams in ENCODINGS:
        assert SDM1.encode_byte(op, ams) == byte
        assert SDM1.decode_byte(byte) == (op, ams)
    assert len(SDM1.encode_map) == len(ENCODINGS)
    assert len(SDM1.decode_map) == len(ENCODINGS)


def test_unknown_bytes_and_combinations_rejected():
    for bad in (0x03, 0x0F, 0x13, 0x17, 0x2D, 0x3C, 0xFF):
        with pytest.raises(ValueError):
            SDM1.decode_byte(bad)
    with pytest.raises(ValueError):
        SDM1.encode_byte(Op.MOV, (Am.ABS, Am.REG))
    with pytest.raises(ValueError):
        SDM1.encode_byte(Op.JMP, (Am.IMM32,))


def test_extension_sizes():
    assert SDM1.ext_size(Am.REG) == 1
    assert SDM1.ext_size(Am.D8) == 1
    assert SDM1.ext_size(Am.D16) == 2
    assert SDM1.ext_size(Am.ABS) == 4
    assert SDM1.ext_size(Am.IMM32) == 4


@pytest.mark.parametrize("op,ams,size", [
    (Op.HALT, (), 1),
    (Op.NOP, (), 1),
    (Op.RET, (), 1),
    (Op.JMP, (Am.D8,), 2),
    (Op.JMP, (Am.D16,), 3),
    (Op.JMP, (Am.ABS,), 5),
    (Op.LD, (Am.D8, Am.REG), 3),
    (Op.LD, (Am.D16, Am.REG), 4),
    (Op.LD, (Am.ABS, Am.REG), 6),
    (Op.LDI, (Am.REG, Am.IMM32), 6),
    (Op.MOV, (Am.REG, Am.REG), 3),
    (Op.ADDI, (Am.REG, Am.IMM32), 6),
    (Op.PUSH, (Am.REG,), 2),
    (Op.OUT, (Am.REG,), 2),
])
def test_instruction_sizes(op, ams, size):
    assert SDM1.instr_size(op, ams) == size


def test_costs_order_the_modes():
    # opcode speed 2 (4 for jsr/ret) + mode speed + extension size
    assert SDM1.cost(Op.JMP, Am.D8) == 2 + 1 + 1
    assert SDM1.cost(Op.JMP, Am.D16) == 2 + 2 + 2
    assert SDM1.cost(Op.JMP, Am.ABS) == 2 + 4 + 4
    assert SDM1.cost(Op.JSR, Am.ABS) == 4 + 4 + 4
    assert SDM1.cost(Op.JSR, Am.D8) == 4 + 1 + 1
    assert SDM1.cost(Op.LD, Am.D16) == 2 + 2 + 2
    assert (SDM1.cost(Op.JMP, Am.D8) < SDM1.cost(Op.JMP, Am.D16)
            < SDM1.cost(Op.JMP, Am.ABS))


def test_span_windows():
    assert DISP_BASE == 2
    assert SDM1.spans.window(Am.D8) == (-126, 129)
    assert SDM1.spans.window(Am.D16) == (-32766, 32769)
    assert SDM1.spans.window(Am.ABS) is None

    assert SDM1.span_checked(Am.D8)
    assert SDM1.span_checked(Am.D16)
    assert not SDM1.span_checked(Am.ABS)
    assert not SDM1.span_checked(Am.REG)
    assert not SDM1.span_checked(Am.IMM32)

    assert SDM1.span_ok(Am.D8, 129)
    assert not SDM1.span_ok(Am.D8, 130)
    assert SDM1.span_ok(Am.D8, -126)
    assert not SDM1.span_ok(Am.D8, -127)
    assert SDM1.span_ok(Am.D16, 32769)
    assert not SDM1.span_ok(Am.D16, 32770)
    assert SDM1.span_ok(Am.D16, -32766)
    assert not SDM1.span_ok(Am.D16, -32767)
    assert SDM1.span_ok(Am.ABS, 10**9)


def test_span_windows_match_displacement_arithmetic():
    # stored displacement is relative to instruction start + DISP_BASE, so a
    # signed byte covers target-minus-start of [-128+2, 127+2]
    assert SDM1.spans.window(Am.D8) == (-128 + DISP_BASE, 127 + DISP_BASE)
    assert SDM1.spans.window(Am.D16) == (-32768 + DISP_BASE, 32767 + DISP_BASE)


def test_mode_speeds():
    assert SDM1.modes[Am.REG].speed == 0
    assert SDM1.modes[Am.D8].speed == 1
    assert SDM1.modes[Am.D16].speed == 2
    assert SDM1.modes[Am.IMM32].speed == 2
    assert SDM1.modes[Am.ABS].speed == 4


def test_addressing_classes():
    ea = frozenset({Am.D8, Am.D16, Am.ABS})
    assert SDM1.addressing_class(Op.JMP, 0) == ea
    assert SDM1.addressing_class(Op.LD, 0) == ea
    assert SDM1.addressing_class(Op.LD, 1) == frozenset({Am.REG})
    assert SDM1.addressing_class(Op.LDI, 0) == frozenset({Am.REG})
    assert SDM1.addressing_class(Op.LDI, 1) == frozenset({Am.IMM32})
    with pytest.raises(ValueError):
        SDM1.addressing_class(Op.LD, 2)
    with pytest.raises(ValueError):
        SDM1.addressing_class(Op.HALT, 0)


def test_equivalence_classes():
    ea = frozenset({Am.D8, Am.D16, Am.ABS})
    assert SDM1.operand_equiv_class(Am.D8) == ea
    assert SDM1.operand_equiv_class(Am.ABS) == ea
    assert SDM1.operand_equiv_class(Am.REG) == frozenset({Am.REG})
    assert SDM1.operand_equiv_class(Am.IMM32) == frozenset({Am.IMM32})
    # no opcode substitutes for another on this machine
    for op in Op:
        assert SDM1.opcode_equiv_class(op) == (op,)


def test_control_flow_properties():
    no_fall = {op for op in Op if not SDM1.opcodes[op].falls_through}
    assert no_fall == {Op.HALT, Op.RET, Op.JMP}
    transfers = {op for op in Op if SDM1.opcodes[op].transfers}
    assert transfers == {Op.RET, Op.JMP, Op.JSR, Op.BEQ, Op.BNE}


def test_every_encoding_size_consistent():
    for byte, op, ams in ENCODINGS:
        assert SDM1.instr_size(op, ams) == 1 + sum(SDM1.ext_size(m) for m in ams)
