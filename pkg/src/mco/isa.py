"""SDM-1 architecture tables.

SDM-1 is a small 32-bit, byte-addressed, little-endian machine built to give a
post-link optimizer something realistic to chew on: one logical opcode can be
encoded at several widths (absolute address, 16-bit or 8-bit pc-relative
displacement), and the optimizer's job is to pick among them.  Everything the
rest of the package knows about the machine comes from the tables in this
module; no other module hardcodes encodings.

The authoritative human-readable description lives in docs/sdm1.md.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

__all__ = [
    "Op",
    "Am",
    "ModeDescriptor",
    "OpcodeDescriptor",
    "SpanTable",
    "ArchSpec",
    "SDM1",
    "DISP_BASE",
]

# Displacements are measured from instruction start + 2 regardless of where
# the displacement byte sits inside the instruction.
DISP_BASE = 2


class Op(IntEnum):
    """Logical opcodes; the encoded byte additionally fixes the mode combo."""

    HALT = 0
    NOP = 1
    RET = 2
    JMP = 3
    JSR = 4
    BEQ = 5
    BNE = 6
    LEA = 7
    LD = 8
    ST = 9
    LDI = 10
    MOV = 11
    ADD = 12
    SUB = 13
    CMP = 14
    ADDI = 15
    PUSH = 16
    POP = 17
    OUT = 18
    IN = 19


class Am(IntEnum):
    """Addressing modes, ordered so that cheaper-to-encode sorts first."""

    D8 = 0      # signed 8-bit pc-relative displacement
    D16 = 1     # signed 16-bit pc-relative displacement
    ABS = 2     # 32-bit absolute address
    REG = 3     # register, one id byte
    IMM32 = 4   # 32-bit immediate


@dataclass(frozen=True, slots=True)
class ModeDescriptor:
    """Static per-mode facts: extension width, access speed, span window."""

    mode: Am
    ext_size: int                       # extension bytes after the opcode byte
    speed: int                          # additive cost term
    span: tuple[int, int] | None        # legal (target - instr_start) window
    relative: bool                      # pc-relative, hence always relocatable


@dataclass(frozen=True, slots=True)
class OpcodeDescriptor:
    """Static per-opcode facts.

    ``classes`` gives the legal modes per operand position, ``enc_order`` the
    operand order inside the byte image (register ids precede the address
    extension for memory ops), and ``iec`` the next opcode in this opcode's
    interchange ring (SDM-1 rings are all singletons, so iec == the opcode
    itself; the ring walk still drives translate-class formation).
    """

    op: Op
    noper: int
    classes: tuple[frozenset[Am], ...]
    enc_order: tuple[int, ...]
    speed: int
    iec: Op
    source: tuple[bool, ...]            # operand reads the addressed value
    dest: tuple[bool, ...]              # operand writes the addressed value
    transfers: bool                     # may redirect control flow
    falls_through: bool                 # False: jmp/ret/halt never continue


_EA = frozenset({Am.ABS, Am.D16, Am.D8})
_REG = frozenset({Am.REG})
_IMM = frozenset({Am.IMM32})

_MODES: dict[Am, ModeDescriptor] = {
    Am.D8: ModeDescriptor(Am.D8, 1, 1, (-126, 129), True),
    Am.D16: ModeDescriptor(Am.D16, 2, 2, (-32766, 32769), True),
    Am.ABS: ModeDescriptor(Am.ABS, 4, 4, None, False),
    Am.REG: ModeDescriptor(Am.REG, 1, 0, None, False),
    Am.IMM32: ModeDescriptor(Am.IMM32, 4, 2, None, False),
}


def _opc(
    op: Op,
    classes: tuple[frozenset[Am], ...],
    *,
    enc_order: tuple[int, ...] | None = None,
    speed: int = 2,
    source: tuple[bool, ...] | None = None,
    dest: tuple[bool, ...] | None = None,
    transfers: bool = False,
    falls_through: bool = True,
) -> OpcodeDescriptor:
    n = len(classes)
    return OpcodeDescriptor(
        op=op,
        noper=n,
        classes=classes,
        enc_order=enc_order if enc_order is not None else tuple(range(n)),
        speed=speed,
        iec=op,
        source=source if source is not None else (False,) * n,
        dest=dest if dest is not None else (False,) * n,
        transfers=transfers,
        falls_through=falls_through,
    )


_OPCODES: dict[Op, OpcodeDescriptor] = {
    Op.HALT: _opc(Op.HALT, (), falls_through=False),
    Op.NOP: _opc(Op.NOP, ()),
    Op.RET: _opc(Op.RET, (), speed=4, transfers=True, falls_through=False),
    Op.JMP: _opc(Op.JMP, (_EA,), transfers=True, falls_through=False),
    Op.JSR: _opc(Op.JSR, (_EA,), speed=4, transfers=True),
    Op.BEQ: _opc(Op.BEQ, (_EA,), transfers=True),
    Op.BNE: _opc(Op.BNE, (_EA,), transfers=True),
    # Memory ops encode the register id byte before the address extension.
    Op.LEA: _opc(Op.LEA, (_EA, _REG), enc_order=(1, 0),
                 dest=(False, True)),
    Op.LD: _opc(Op.LD, (_EA, _REG), enc_order=(1, 0),
                source=(True, False), dest=(False, True)),
    Op.ST: _opc(Op.ST, (_EA, _REG), enc_order=(1, 0),
                source=(False, True), dest=(True, False)),
    Op.LDI: _opc(Op.LDI, (_REG, _IMM), dest=(True, False)),
    Op.MOV: _opc(Op.MOV, (_REG, _REG), source=(True, False), dest=(False, True)),
    Op.ADD: _opc(Op.ADD, (_REG, _REG), source=(True, True), dest=(False, True)),
    Op.SUB: _opc(Op.SUB, (_REG, _REG), source=(True, True), dest=(False, True)),
    Op.CMP: _opc(Op.CMP, (_REG, _REG), source=(True, True)),
    Op.ADDI: _opc(Op.ADDI, (_REG, _IMM), source=(True, False), dest=(True, False)),
    Op.PUSH: _opc(Op.PUSH, (_REG,), source=(True,)),
    Op.POP: _opc(Op.POP, (_REG,), dest=(True,)),
    Op.OUT: _opc(Op.OUT, (_REG,), source=(True,)),
    Op.IN: _opc(Op.IN, (_REG,), dest=(True,)),
}

# Encoded opcode byte -> (logical opcode, per-operand modes).  Address-taking
# opcodes follow the pattern base+0 abs, base+1 d16, base+2 d8.
_ENCODINGS: tuple[tuple[int, Op, tuple[Am, ...]], ...] = (
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
)


@dataclass(frozen=True)
class SpanTable:
    """Reach limits for the pc-relative modes, target minus instruction start."""

    d8_min: int = -126
    d8_max: int = 129
    d16_min: int = -32766
    d16_max: int = 32769

    def window(self, mode: Am) -> tuple[int, int] | None:
        if mode == Am.D8:
            return (self.d8_min, self.d8_max)
        if mode == Am.D16:
            return (self.d16_min, self.d16_max)
        return None


class ArchSpec:
    """Immutable bundle of the SDM-1 tables plus the derived lookups."""

    def __init__(
        self,
        modes: dict[Am, ModeDescriptor],
        opcodes: dict[Op, OpcodeDescriptor],
        encodings: tuple[tuple[int, Op, tuple[Am, ...]], ...],
        spans: SpanTable,
    ):
        self.modes = dict(modes)
        self.opcodes = dict(opcodes)
        self.spans = spans
        self.encode_map: dict[tuple[Op, tuple[Am, ...]], int] = {}
        self.decode_map: dict[int, tuple[Op, tuple[Am, ...]]] = {}
        for byte, op, ams in encodings:
            key = (op, ams)
            if key in self.encode_map or byte in self.decode_map:
                raise ValueError(f"duplicate encoding {byte:#x}")
            self.encode_map[key] = byte
            self.decode_map[byte] = key

    # -- size and cost -------------------------------------------------

    def ext_size(self, mode: Am) -> int:
        return self.modes[mode].ext_size

    def instr_size(self, op: Op, ams: tuple[Am, ...] | list[Am]) -> int:
        """Total byte size: opcode byte plus every operand extension."""
        return 1 + sum(self.modes[m].ext_size for m in ams)

    def cost(self, op: Op, mode: Am) -> int:
        """Fetch+access cost used to rank encodings: opcode speed + mode
        speed + extension size."""
        md = self.modes[mode]
        return self.opcodes[op].speed + md.speed + md.ext_size

    # -- spans ----------------------------------------------------------

    def span_checked(self, mode: Am) -> bool:
        return self.modes[mode].span is not None

    def span_ok(self, mode: Am, rng: int) -> bool:
        """True when a (target - instruction_start) distance fits the mode.

        Modes without a reach limit accept everything.
        """
        span = self.modes[mode].span
        if span is None:
            return True
        return span[0] <= rng <= span[1]

    # -- equivalence classes ---------------------------------------------

    def addressing_class(self, op: Op, opnum: int) -> frozenset[Am]:
        """Modes operand ``opnum`` of ``op`` may legally use."""
        desc = self.opcodes[op]
        if not 0 <= opnum < desc.noper:
            raise ValueError(f"{op.name} has no operand {opnum}")
        return desc.classes[opnum]

    def operand_equiv_class(self, mode: Am) -> frozenset[Am]:
        """Modes interchangeable with ``mode`` given a fixed target address."""
        if mode in _EA:
            return _EA
        return frozenset({mode})

    def opcode_equiv_class(self, op: Op) -> tuple[Op, ...]:
        """The interchange ring of ``op``, in ring order starting at ``op``."""
        ring = [op]
        cur = self.opcodes[op].iec
        while cur != op:
            ring.append(cur)
            cur = self.opcodes[cur].iec
        return tuple(ring)

    def encode_byte(self, op: Op, ams: tuple[Am, ...]) -> int:
        try:
            return self.encode_map[(op, ams)]
        except KeyError:
            raise ValueError(f"no encoding for {op.name}{ams}") from None

    def decode_byte(self, byte: int) -> tuple[Op, tuple[Am, ...]]:
        try:
            return self.decode_map[byte]
        except KeyError:
            raise ValueError(f"unknown opcode byte {byte:#04x}") from None


SDM1 = ArchSpec(_MODES, _OPCODES, _ENCODINGS, SpanTable())
