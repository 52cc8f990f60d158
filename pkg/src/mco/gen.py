"""Program builder and random task-file generator.

``Asm`` is a two-pass builder: callers append instructions with explicit
addressing modes and symbolic labels, then ``build()`` lays them out,
encodes extensions, and emits relocation entries for every absolute or
immediate word that names a program address.

``generate`` produces deterministic random programs for testing: a main
routine with bounded loops and calls, live and dead subroutines, orphan
straight-line stretches, repeated instruction runs, and a data segment
holding both plain words and pointers into the text segment.  Generated
programs only ever observe register/memory *values*, never addresses, so
any layout-changing transformation must preserve their output streams.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .isa import DISP_BASE, Am, Op, SDM1
from .ir import dalign
from .taskfile import SEG_DATA, SEG_TEXT, RelocEntry, Symbol, TaskFile

__all__ = [
    "Asm", "reg", "imm", "iref", "ea", "absv",
    "GenConfig", "generate",
]


# -- operand specs -----------------------------------------------------------

@dataclass(frozen=True)
class _Reg:
    n: int


@dataclass(frozen=True)
class _Imm:
    value: int


@dataclass(frozen=True)
class _ImmRef:
    label: str


@dataclass(frozen=True)
class _Ea:
    mode: Am
    label: str


@dataclass(frozen=True)
class _AbsVal:
    value: int          # absolute mode, plain value, no relocation


def reg(n: int) -> _Reg:
    return _Reg(n)


def imm(value: int) -> _Imm:
    return _Imm(value)


def iref(label: str) -> _ImmRef:
    """Immediate word holding the address of a label (relocated)."""
    return _ImmRef(label)


def ea(mode: Am, label: str) -> _Ea:
    """Effective-address operand referencing a label."""
    return _Ea(mode, label)


def absv(value: int) -> _AbsVal:
    return _AbsVal(value)


def _mode_of(spec) -> Am:
    if isinstance(spec, _Reg):
        return Am.REG
    if isinstance(spec, (_Imm, _ImmRef)):
        return Am.IMM32
    if isinstance(spec, _Ea):
        return spec.mode
    if isinstance(spec, _AbsVal):
        return Am.ABS
    raise TypeError(f"not an operand spec: {spec!r}")


@dataclass
class _Ins:
    opc: Op
    ops: tuple
    addr: int = 0
    size: int = 0


class AsmError(ValueError):
    pass


class Asm:
    def __init__(self, load_addr: int = 0x1000):
        self.load_addr = load_addr
        self._text: list[_Ins] = []
        self._labels: dict[str, tuple[str, int]] = {}   # name -> ('t', idx)|('d', off)
        self._data = bytearray()
        self._data_refs: list[tuple[int, str]] = []     # (offset, label)
        self._exports: list[tuple[str, str]] = []       # (symbol name, label)
        self._entry_label: str | None = None

    # -- construction --------------------------------------------------

    def label(self, name: str) -> str:
        if name in self._labels:
            raise AsmError(f"duplicate label {name!r}")
        self._labels[name] = ("t", len(self._text))
        return name

    def ins(self, opc: Op, *specs) -> None:
        desc = SDM1.opcodes[opc]
        if len(specs) != desc.noper:
            raise AsmError(f"{opc.name} takes {desc.noper} operands")
        for i, spec in enumerate(specs):
            if _mode_of(spec) not in desc.classes[i]:
                raise AsmError(f"{opc.name} operand {i} cannot use {_mode_of(spec).name}")
        self._text.append(_Ins(opc, specs))

    def dlabel(self, name: str) -> str:
        if name in self._labels:
            raise AsmError(f"duplicate label {name!r}")
        self._labels[name] = ("d", len(self._data))
        return name

    def word(self, value: int) -> None:
        self._data += (value & 0xFFFFFFFF).to_bytes(4, "little")

    def word_ref(self, label: str) -> None:
        self._data_refs.append((len(self._data), label))
        self._data += b"\0\0\0\0"

    def raw(self, data: bytes) -> None:
        self._data += data

    def export(self, name: str, label: str | None = None) -> None:
        self._exports.append((name, label if label is not None else name))

    def entry(self, label: str) -> None:
        self._entry_label = label

    # -- assembly --------------------------------------------------------

    def _resolve(self, name: str, daddr0: int) -> int:
        where = self._labels.get(name)
        if where is None:
            raise AsmError(f"undefined label {name!r}")
        kind, at = where
        if kind == "t":
            if at == len(self._text):
                return self.load_addr + self._tsize
            return self._text[at].addr
        return daddr0 + at

    def build(self) -> TaskFile:
        addr = self.load_addr
        for ins in self._text:
            ins.addr = addr
            ins.size = SDM1.instr_size(ins.opc, [_mode_of(s) for s in ins.ops])
            addr += ins.size
        self._tsize = addr - self.load_addr
        daddr0 = dalign(addr)

        text = bytearray()
        relocs: list[RelocEntry] = []
        for ins in self._text:
            desc = SDM1.opcodes[ins.opc]
            modes = tuple(_mode_of(s) for s in ins.ops)
            img = bytearray([SDM1.encode_byte(ins.opc, modes)])
            for opnum in desc.enc_order:
                spec = ins.ops[opnum]
                mode = _mode_of(spec)
                off = len(img)
                if mode == Am.REG:
                    img.append(spec.n)
                elif mode == Am.IMM32:
                    if isinstance(spec, _ImmRef):
                        value = self._resolve(spec.label, daddr0)
                        relocs.append(RelocEntry(SEG_TEXT, ins.addr + off - self.load_addr))
                    else:
                        value = spec.value
                    img += (value & 0xFFFFFFFF).to_bytes(4, "little")
                elif mode == Am.ABS:
                    if isinstance(spec, _Ea):
                        value = self._resolve(spec.label, daddr0)
                        relocs.append(RelocEntry(SEG_TEXT, ins.addr + off - self.load_addr))
                    else:
                        value = spec.value
                    img += (value & 0xFFFFFFFF).to_bytes(4, "little")
                else:
                    target = self._resolve(spec.label, daddr0)
                    disp = target - (ins.addr + DISP_BASE)
                    md = SDM1.modes[mode]
                    lo, hi = md.span
                    if not lo <= target - ins.addr <= hi:
                        raise AsmError(
                            f"{ins.opc.name} at 0x{ins.addr:X}: {spec.label!r} out of "
                            f"{mode.name} range")
                    img += (disp & ((1 << (8 * md.ext_size)) - 1)).to_bytes(
                        md.ext_size, "little")
            text += img

        data = bytearray(self._data)
        for off, label in self._data_refs:
            value = self._resolve(label, daddr0)
            data[off:off + 4] = value.to_bytes(4, "little")
            relocs.append(RelocEntry(SEG_DATA, off))

        symbols = []
        for name, label in self._exports:
            kind, _at = self._labels[label]
            value = self._resolve(label, daddr0)
            symbols.append(Symbol(value, SEG_TEXT if kind == "t" else SEG_DATA, name))

        if self._entry_label is not None:
            entry = self._resolve(self._entry_label, daddr0)
        else:
            entry = self.load_addr
        return TaskFile(load_addr=self.load_addr, entry=entry,
                        text=bytes(text), data=bytes(data),
                        relocs=relocs, symbols=symbols)


# -- random programs ---------------------------------------------------------

@dataclass
class GenConfig:
    seed: int = 0
    subprograms: int = 4
    body_range: tuple[int, int] = (4, 9)
    dead_fraction: float = 0.2
    call_density: float = 0.6
    data_words: int = 8
    repeats: int = 0            # extra copies of a shared instruction run
    loops: bool = True
    load_addr: int = 0x1000


_DATA_REGS = (0, 1, 2, 3)
_COUNT_REG = 4
_SCRATCH_REG = 5


class _Gen:
    """Emits value-computations only; addresses never reach a data register."""

    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.a = Asm(cfg.load_addr)
        self.nlabel = 0
        self.vars: list[str] = []

    def _fresh(self, stem: str) -> str:
        self.nlabel += 1
        return f"{stem}{self.nlabel}"

    def _straight_op(self) -> None:
        a, rng = self.a, self.rng
        r1 = rng.choice(_DATA_REGS)
        r2 = rng.choice(_DATA_REGS)
        pick = rng.random()
        if pick < 0.22:
            a.ins(Op.LDI, reg(r1), imm(rng.randrange(0, 64)))
        elif pick < 0.40:
            a.ins(rng.choice((Op.ADD, Op.SUB)), reg(r1), reg(r2))
        elif pick < 0.52:
            a.ins(Op.ADDI, reg(r1), imm(rng.randrange(1, 16)))
        elif pick < 0.62:
            a.ins(Op.MOV, reg(r1), reg(r2))
        elif pick < 0.74 and self.vars:
            a.ins(Op.LD, ea(Am.ABS, rng.choice(self.vars)), reg(r1))
        elif pick < 0.84 and self.vars:
            a.ins(Op.ST, ea(Am.ABS, rng.choice(self.vars)), reg(r1))
        elif pick < 0.92:
            a.ins(Op.OUT, reg(r1))
        else:
            a.ins(Op.IN, reg(r1))

    def _loop(self, body_ops: int) -> None:
        a, rng = self.a, self.rng
        top = self._fresh("loop")
        a.ins(Op.LDI, reg(_COUNT_REG), imm(rng.randrange(2, 5)))
        a.label(top)
        for _ in range(body_ops):
            self._straight_op()
        a.ins(Op.ADDI, reg(_COUNT_REG), imm(-1 & 0xFFFFFFFF))
        a.ins(Op.BNE, ea(Am.D16, top))

    def _chunk(self) -> list:
        """A reusable straight-line recipe (for repeated runs)."""
        rng = self.rng
        ops = []
        for _ in range(rng.randrange(3, 6)):
            r1 = rng.choice(_DATA_REGS)
            r2 = rng.choice(_DATA_REGS)
            kind = rng.randrange(3)
            if kind == 0:
                ops.append((Op.LDI, (reg(r1), imm(rng.randrange(0, 32)))))
            elif kind == 1:
                ops.append((Op.ADD, (reg(r1), reg(r2))))
            else:
                ops.append((Op.ADDI, (reg(r1), imm(rng.randrange(1, 8)))))
        return ops

    def _emit_chunk(self, chunk: list) -> None:
        for opc, specs in chunk:
            self.a.ins(opc, *specs)

    def build(self) -> TaskFile:
        cfg, a, rng = self.cfg, self.a, self.rng

        nsub = cfg.subprograms
        ndead = round(nsub * cfg.dead_fraction)
        live = [f"sub{i}" for i in range(nsub - ndead)]
        dead = [f"dead{i}" for i in range(ndead)]

        for i in range(cfg.data_words):
            self.vars.append(a.dlabel(f"var{i}"))
            a.word(rng.randrange(0, 1 << 16))

        chunk = self._chunk() if cfg.repeats else None

        a.label("start")
        a.entry("start")
        a.ins(Op.LDI, reg(0), imm(1))
        a.ins(Op.LDI, reg(1), imm(2))
        a.ins(Op.IN, reg(2))
        body = rng.randrange(*cfg.body_range)
        emitted_repeats = 0
        for _ in range(body):
            if chunk is not None and emitted_repeats <= cfg.repeats and rng.random() < 0.5:
                self._emit_chunk(chunk)
                emitted_repeats += 1
            elif cfg.loops and rng.random() < 0.25:
                self._loop(rng.randrange(1, 4))
            else:
                self._straight_op()
            if live and rng.random() < cfg.call_density:
                a.ins(Op.JSR, ea(Am.ABS, rng.choice(live)))
        while chunk is not None and emitted_repeats < max(2, cfg.repeats):
            self._emit_chunk(chunk)
            emitted_repeats += 1
        for r in _DATA_REGS:
            a.ins(Op.OUT, reg(r))
        a.ins(Op.HALT)

        # live subprograms: called from main (and occasionally each other,
        # strictly forward to keep the call graph acyclic)
        for i, name in enumerate(live):
            a.label(name)
            pushed = rng.random() < 0.4
            if pushed:
                a.ins(Op.PUSH, reg(_SCRATCH_REG))
                a.ins(Op.LDI, reg(_SCRATCH_REG), imm(rng.randrange(0, 8)))
            for _ in range(rng.randrange(*cfg.body_range)):
                self._straight_op()
            if chunk is not None and rng.random() < 0.5:
                self._emit_chunk(chunk)
            later = live[i + 1:]
            if later and rng.random() < cfg.call_density * 0.5:
                a.ins(Op.JSR, ea(Am.ABS, rng.choice(later)))
            if pushed:
                a.ins(Op.POP, reg(_SCRATCH_REG))
            a.ins(Op.RET)

        # dead subprograms: reference each other and live code, but are
        # themselves never referenced
        for i, name in enumerate(dead):
            a.label(name)
            for _ in range(rng.randrange(*cfg.body_range)):
                self._straight_op()
            if i + 1 < len(dead) and rng.random() < 0.7:
                a.ins(Op.JSR, ea(Am.ABS, dead[i + 1]))
            if live and rng.random() < 0.5:
                a.ins(Op.JSR, ea(Am.ABS, rng.choice(live)))
            a.ins(Op.RET)

        # orphan stretch: plain unreachable straight-line code
        if ndead or cfg.dead_fraction > 0:
            for _ in range(rng.randrange(2, 5)):
                self._straight_op()
            a.ins(Op.JMP, ea(Am.ABS, "start"))

        # pointer table: data words holding text addresses (never executed
        # through, but they pin their targets as referenced)
        for i, name in enumerate(rng.sample(live, min(2, len(live)))):
            a.dlabel(self._fresh("ptr"))
            a.word_ref(name)

        a.export("start")
        if live:
            a.export(live[0])
        return a.build()


def generate(cfg: GenConfig | None = None, **kw) -> TaskFile:
    if cfg is None:
        cfg = GenConfig(**kw)
    elif kw:
        raise TypeError("pass either a GenConfig or keyword overrides, not both")
    return _Gen(cfg).build()
