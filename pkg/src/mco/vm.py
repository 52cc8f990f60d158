"""Reference interpreter for SDM-1 task files.

The interpreter exists to answer one question cheaply: do two task files
behave identically?  It executes a loaded image against an input stream and
reports the output stream plus how the run ended.  Every effective address in
SDM-1 is static, so the text segment is compiled once into a per-address
table of (operation, operands) tuples and the run loop is a flat dispatch.

Memory map: text at load_addr (read-only), data directly after it
(read-write), and a 64 KiB stack region ending at load_addr + 0x100000 with
r15 starting at the top.  Reads outside any region yield zero; writes outside
data/stack fault.
"""

from __future__ import annotations

from .errors import McoError
from .isa import DISP_BASE, SDM1, Am, Op
from .taskfile import TaskFile

__all__ = ["STACK_OFFSET", "STACK_BYTES", "ExecResult", "execute", "equivalent"]

STACK_OFFSET = 0x0010_0000
STACK_BYTES = 0x1_0000
MASK = 0xFFFF_FFFF

HALTED = "halted"
TIMEOUT = "timeout"
FAULT = "fault"

# compiled operation codes
(_LDI, _ADDI, _MOV, _ADD, _SUB, _CMP, _LD, _ST, _LEA, _JMP, _JSR,
 _BEQ, _BNE, _RET, _PUSH, _POP, _OUT, _IN, _NOP, _HALT) = range(20)

_BY_OP = {
    Op.LDI: _LDI, Op.ADDI: _ADDI, Op.MOV: _MOV, Op.ADD: _ADD, Op.SUB: _SUB,
    Op.CMP: _CMP, Op.LD: _LD, Op.ST: _ST, Op.LEA: _LEA, Op.JMP: _JMP,
    Op.JSR: _JSR, Op.BEQ: _BEQ, Op.BNE: _BNE, Op.RET: _RET, Op.PUSH: _PUSH,
    Op.POP: _POP, Op.OUT: _OUT, Op.IN: _IN, Op.NOP: _NOP, Op.HALT: _HALT,
}


class ExecResult(tuple):
    """(outputs, status) with attribute access."""

    __slots__ = ()

    def __new__(cls, outputs: list[int], status: str):
        return super().__new__(cls, (outputs, status))

    @property
    def outputs(self) -> list[int]:
        return self[0]

    @property
    def status(self) -> str:
        return self[1]


def _compile(tf: TaskFile) -> dict[int, tuple[int, int, int, int]]:
    """Decode the text segment into addr -> (code, a, b, next_pc)."""
    table: dict[int, tuple[int, int, int, int]] = {}
    text = tf.text
    base = tf.load_addr
    pos = 0
    while pos < len(text):
        addr = base + pos
        opc, ams = SDM1.decode_byte(text[pos])
        desc = SDM1.opcodes[opc]
        size = SDM1.instr_size(opc, ams)
        if pos + size > len(text):
            raise McoError(f"text segment ends inside instruction at 0x{addr:X}")
        a = b = 0
        off = 1
        vals = [0] * desc.noper
        for opnum in desc.enc_order:
            mode = ams[opnum]
            ext = SDM1.ext_size(mode)
            raw = text[pos + off:pos + off + ext]
            if mode == Am.REG:
                vals[opnum] = raw[0]
            elif mode == Am.ABS or mode == Am.IMM32:
                vals[opnum] = int.from_bytes(raw, "little")
            else:  # pc-relative
                vals[opnum] = addr + DISP_BASE + int.from_bytes(raw, "little", signed=True)
            off += ext
        if desc.noper >= 1:
            a = vals[0]
        if desc.noper >= 2:
            b = vals[1]
        table[addr] = (_BY_OP[opc], a, b, addr + size)
        pos += size
    return table


def execute(tf: TaskFile, inputs: list[int] | None = None,
            step_limit: int = 200_000) -> ExecResult:
    """Run a task file; returns the output stream and a final status.

    ``inputs`` feeds the ``in`` instruction in order; once exhausted it
    reads zero.  Status is "halted", "timeout", or "fault".
    """
    table = _compile(tf)
    text = tf.text
    data = bytearray(tf.data)
    t_lo = tf.load_addr
    t_hi = t_lo + len(text)
    d_lo = t_hi
    d_hi = d_lo + len(data)
    s_hi = tf.load_addr + STACK_OFFSET
    s_lo = s_hi - STACK_BYTES
    if d_hi > s_lo:
        raise McoError("image overlaps the stack region")
    stack = bytearray(STACK_BYTES)

    regs = [0] * 16
    regs[15] = s_hi
    z = False
    outputs: list[int] = []
    feed = [v & MASK for v in (inputs or [])]
    feed_i = 0
    n_feed = len(feed)

    def read32(a: int) -> int:
        if d_lo <= a and a + 4 <= d_hi:
            return int.from_bytes(data[a - d_lo:a - d_lo + 4], "little")
        if s_lo <= a and a + 4 <= s_hi:
            return int.from_bytes(stack[a - s_lo:a - s_lo + 4], "little")
        if t_lo <= a and a + 4 <= t_hi:
            return int.from_bytes(text[a - t_lo:a - t_lo + 4], "little")
        # straddling or outside: per-byte, absent bytes read as zero
        v = 0
        for i in range(4):
            ai = a + i
            if d_lo <= ai < d_hi:
                v |= data[ai - d_lo] << (8 * i)
            elif s_lo <= ai < s_hi:
                v |= stack[ai - s_lo] << (8 * i)
            elif t_lo <= ai < t_hi:
                v |= text[ai - t_lo] << (8 * i)
        return v

    def write32(a: int, v: int) -> bool:
        if d_lo <= a and a + 4 <= d_hi:
            data[a - d_lo:a - d_lo + 4] = v.to_bytes(4, "little")
            return True
        if s_lo <= a and a + 4 <= s_hi:
            stack[a - s_lo:a - s_lo + 4] = v.to_bytes(4, "little")
            return True
        return False

    pc = tf.entry
    steps = 0
    while steps < step_limit:
        ent = table.get(pc)
        if ent is None:
            return ExecResult(outputs, FAULT)
        code, a, b, nxt = ent
        steps += 1
        if code == _LDI:
            regs[a] = b
        elif code == _ADDI:
            v = (regs[a] + b) & MASK
            regs[a] = v
            z = v == 0
        elif code == _MOV:
            regs[b] = regs[a]
        elif code == _ADD:
            v = (regs[b] + regs[a]) & MASK
            regs[b] = v
            z = v == 0
        elif code == _SUB:
            v = (regs[b] - regs[a]) & MASK
            regs[b] = v
            z = v == 0
        elif code == _CMP:
            z = regs[b] == regs[a]
        elif code == _LD:
            regs[b] = read32(a)
        elif code == _ST:
            if not write32(a, regs[b]):
                return ExecResult(outputs, FAULT)
        elif code == _LEA:
            regs[b] = a & MASK
        elif code == _JMP:
            pc = a
            continue
        elif code == _JSR:
            sp = (regs[15] - 4) & MASK
            if not write32(sp, nxt):
                return ExecResult(outputs, FAULT)
            regs[15] = sp
            pc = a
            continue
        elif code == _BEQ:
            if z:
                pc = a
                continue
        elif code == _BNE:
            if not z:
                pc = a
                continue
        elif code == _RET:
            sp = regs[15]
            pc = read32(sp)
            regs[15] = (sp + 4) & MASK
            continue
        elif code == _PUSH:
            sp = (regs[15] - 4) & MASK
            if not write32(sp, regs[a]):
                return ExecResult(outputs, FAULT)
            regs[15] = sp
        elif code == _POP:
            regs[a] = read32(regs[15])
            regs[15] = (regs[15] + 4) & MASK
        elif code == _OUT:
            outputs.append(regs[a])
        elif code == _IN:
            if feed_i < n_feed:
                regs[a] = feed[feed_i]
                feed_i += 1
            else:
                regs[a] = 0
        elif code == _HALT:
            return ExecResult(outputs, HALTED)
        # _NOP falls through
        pc = nxt
    return ExecResult(outputs, TIMEOUT)


def equivalent(a: TaskFile, b: TaskFile, input_vectors: list[list[int]],
               step_limit: int = 200_000) -> bool:
    """True when both files produce identical (outputs, status) on every vector."""
    for vec in input_vectors:
        if execute(a, vec, step_limit) != execute(b, vec, step_limit):
            return False
    return True
