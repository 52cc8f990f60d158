"""Operand reduction: translate classes, minimize/lengthen, and relocation.

An operand's translate class is every (opcode, mode) pair that could encode
it: the opcode's interchange ring crossed with the modes its position
accepts, filtered to the operand's mode-equivalence class, with the other
operands kept legal.  Reduction runs in two phases.  MINIMIZE installs the
cheapest pair outright, ignoring reach, which makes the program as short as
it could ever be.  LENGTHEN then repairs reach: layout is frozen at the top
of each pass, every pc-relative operand whose target fell outside its window
grows to the cheapest pair that reaches under the frozen layout, and the
passes repeat until nothing grows.  Starting minimal and growing only when
forced converges on the shortest reach-valid encoding.

Relocation is the cash-out: assign final addresses, re-encode every
instruction against them, rewrite marked data pointers, the entry point, the
symbol table, and the relocation list.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InternalError, LinkError
from .ir import (BlockNode, DataNode, DataRef, Program, TextNode, dalign,
                 find_node, iter_nodes)
from .isa import DISP_BASE, SDM1, Am, Op
from .taskfile import SEG_DATA, SEG_TEXT, RelocEntry, Symbol, TaskFile

__all__ = [
    "TranslateEntry",
    "form_tc",
    "cost",
    "minimize",
    "set_faddr",
    "lengthen",
    "relocate",
    "MAX_LENGTHEN_PASSES",
]

MAX_LENGTHEN_PASSES = 8


@dataclass(frozen=True, slots=True)
class TranslateEntry:
    opc: Op
    mode: Am
    reg: tuple[int, ...] = ()


def form_tc(node: TextNode, opnum: int) -> list[TranslateEntry]:
    """Build the translate class of one operand.

    Walks the opcode's interchange ring; a different opcode qualifies only if
    it takes the same number of operands and every *other* operand's current
    mode stays legal.  Within each qualifying opcode, the candidate modes are
    its addressing class intersected with the operand's mode-equivalence
    class.  Deterministic order: ring order, then mode id.
    """
    op = node.ops[opnum]
    oec = SDM1.operand_equiv_class(op.mode)
    out: list[TranslateEntry] = []
    for opc in SDM1.opcode_equiv_class(node.opc):
        desc = SDM1.opcodes[opc]
        if opc != node.opc:
            if desc.noper != len(node.ops):
                continue
            if any(node.ops[j].mode not in desc.classes[j]
                   for j in range(desc.noper) if j != opnum):
                continue
        for am in sorted(SDM1.addressing_class(opc, opnum)):
            if am in oec:
                out.append(TranslateEntry(opc, am, op.reg))
    return out


def cost(node: TextNode, opnum: int, opc: Op, mode: Am) -> int:
    """Rank of one translate-class pair; lower is better."""
    return SDM1.cost(opc, mode)


def _pick(node: TextNode, opnum: int,
          entries: list[TranslateEntry]) -> TranslateEntry:
    # Ties (impossible with the current tables, but kept deterministic):
    # cheaper cost, then smaller mode id, then smaller opcode id.
    return min(entries, key=lambda e: (cost(node, opnum, e.opc, e.mode),
                                       e.mode, e.opc))


def _apply_pair(node: TextNode, opnum: int, entry: TranslateEntry) -> None:
    """Re-shape a node around a new (opcode, mode) pair for one operand.

    Byte values are not finalized here -- relocation rewrites every image --
    but sizes and operand offsets are kept current so layout works.
    """
    node.opc = entry.opc
    node.ops[opnum].mode = entry.mode
    modes = tuple(op.mode for op in node.ops)
    byte = SDM1.encode_byte(node.opc, modes)
    desc = SDM1.opcodes[node.opc]
    node.nbytes = SDM1.instr_size(node.opc, modes)
    img = bytearray(node.nbytes)
    img[0] = byte
    off = 1
    for j in desc.enc_order:
        op = node.ops[j]
        op.offset = off
        if op.mode == Am.REG:
            img[off] = op.reg
        off += SDM1.ext_size(op.mode)
    node.instr = img


def _stash_plain_values(blocks: list[BlockNode]) -> None:
    # Non-relocatable extension words (plain immediates) must survive
    # re-encoding; park their values in the otherwise unused addr slot.
    for nd in iter_nodes(blocks):
        if not isinstance(nd, TextNode):
            continue
        for op in nd.ops:
            if (op.target is None and op.addr is None and op.mode != Am.REG
                    and SDM1.ext_size(op.mode) > 0):
                raw = nd.instr[op.offset:op.offset + SDM1.ext_size(op.mode)]
                op.addr = int.from_bytes(raw, "little")


def minimize(blocks: list[BlockNode]) -> int:
    """Install the cheapest translate-class pair for every relocatable
    operand, ignoring reach limits entirely.  Returns bytes saved."""
    _stash_plain_values(blocks)
    saved = 0
    for nd in iter_nodes(blocks):
        if not isinstance(nd, TextNode):
            continue
        for opnum, op in enumerate(nd.ops):
            if op.target is None:
                continue
            tc = form_tc(nd, opnum)
            if len(tc) <= 1:
                continue
            best = _pick(nd, opnum, tc)
            if best.opc == nd.opc and best.mode == op.mode:
                continue
            before = nd.nbytes
            _apply_pair(nd, opnum, best)
            saved += before - nd.nbytes
    return saved


def set_faddr(blocks: list[BlockNode], load_addr: int) -> None:
    """Assign final addresses by running byte offset in current block order."""
    addr = load_addr
    for blk in blocks:
        for nd in blk.nodes:
            if isinstance(nd, DataNode):
                addr = dalign(addr)
            nd.faddr = addr
            addr += nd.nbytes


def _mapped_faddr(op) -> int:
    """Final address of the location an operand refers to.

    Targets may point inside a node (data cells especially); the intra-node
    offset rides along unchanged.
    """
    t = op.target
    return t.faddr + (op.addr - t.iaddr)


def lengthen(blocks: list[BlockNode], load_addr: int) -> int:
    """Grow reach-violating operands until the layout stabilizes.

    Every pass freezes final addresses, then gives each pc-relative operand
    whose span check fails the cheapest translate-class pair that reaches
    under the frozen addresses.  Operands only ever grow.  Returns the pass
    count (the final, no-change pass included).
    """
    passes = 0
    while True:
        passes += 1
        if passes > MAX_LENGTHEN_PASSES:
            raise InternalError(
                f"operand growth still unstable after {MAX_LENGTHEN_PASSES} passes")
        set_faddr(blocks, load_addr)
        changed = False
        for nd in iter_nodes(blocks):
            if not isinstance(nd, TextNode):
                continue
            for opnum, op in enumerate(nd.ops):
                if op.target is None or not SDM1.span_checked(op.mode):
                    continue
                rng = _mapped_faddr(op) - nd.faddr
                if SDM1.span_ok(op.mode, rng):
                    continue
                fits = [e for e in form_tc(nd, opnum)
                        if SDM1.span_ok(e.mode, rng)]
                if not fits:
                    raise InternalError(
                        f"no reachable encoding for operand {opnum} of "
                        f"{nd.opc.name.lower()} at 0x{nd.iaddr:X} (range {rng})")
                best = _pick(nd, opnum, fits)
                grow = SDM1.ext_size(best.mode) - SDM1.ext_size(op.mode)
                if grow < 0:
                    raise InternalError(
                        f"operand at 0x{nd.iaddr:X} shrank during a growth pass")
                _apply_pair(nd, opnum, best)
                changed = True
        if not changed:
            return passes


def relocate(prog: Program, tf: TaskFile) -> TaskFile:
    """Produce the output task file from the final node arrangement."""
    blocks = prog.blocks
    set_faddr(blocks, prog.load_addr)
    all_nodes = list(iter_nodes(blocks))
    if not all_nodes or not isinstance(all_nodes[-1], DataNode):
        raise InternalError("data segment node is not last at relocation time")

    text = bytearray()
    relocs: list[RelocEntry] = []
    for nd in all_nodes[:-1]:
        if not isinstance(nd, TextNode):
            raise InternalError("data node amid text at relocation time")
        # Gather extension values against the old offsets before moving any.
        values: list[tuple[int, int | None]] = []
        for op in nd.ops:
            ext = SDM1.ext_size(op.mode)
            if op.mode == Am.REG or ext == 0:
                values.append((ext, None))
            elif op.target is not None:
                values.append((ext, _mapped_faddr(op)))
            elif op.addr is not None:
                values.append((ext, op.addr))
            else:
                raw = nd.instr[op.offset:op.offset + ext]
                values.append((ext, int.from_bytes(raw, "little")))

        modes = tuple(op.mode for op in nd.ops)
        img = bytearray([SDM1.encode_byte(nd.opc, modes)])
        for j in SDM1.opcodes[nd.opc].enc_order:
            op = nd.ops[j]
            ext, val = values[j]
            op.offset = len(img)
            if op.mode == Am.REG:
                img.append(op.reg)
                continue
            if op.target is not None:
                if SDM1.span_checked(op.mode):
                    rng = val - nd.faddr
                    if not SDM1.span_ok(op.mode, rng):
                        raise InternalError(
                            f"reach violated at 0x{nd.faddr:X}: "
                            f"{op.mode.name} range {rng}")
                    disp = val - (nd.faddr + DISP_BASE)
                    img += disp.to_bytes(ext, "little", signed=True)
                else:
                    img += (val & 0xFFFF_FFFF).to_bytes(4, "little")
                    relocs.append(RelocEntry(SEG_TEXT,
                                             nd.faddr + op.offset - prog.load_addr))
            else:
                img += (val & ((1 << (8 * ext)) - 1)).to_bytes(ext, "little")
        if len(img) != nd.nbytes:
            raise InternalError(
                f"encoded size {len(img)} != layout size {nd.nbytes} "
                f"at 0x{nd.faddr:X}")
        nd.instr = img
        text += img

    data_node = prog.data_node
    data = data_node.bytes
    for dr in prog.data_refs:
        t = dr.target
        if isinstance(t, TextNode) and dr.addr != t.iaddr:
            raise LinkError(
                f"data word at offset 0x{dr.offset:X} points inside the "
                f"instruction at 0x{t.iaddr:X}, not at its start")
        value = t.faddr + (dr.addr - t.iaddr)
        data[dr.offset:dr.offset + 4] = (value & 0xFFFF_FFFF).to_bytes(4, "little")
        relocs.append(RelocEntry(SEG_DATA, dr.offset))
    relocs.sort(key=lambda r: (r.segment, r.offset))

    if prog.entry_node is not None:
        entry = prog.entry_node.faddr + (prog.entry - prog.entry_node.iaddr)
    else:
        entry = prog.load_addr

    symbols: list[Symbol] = []
    for s in tf.symbols:
        nd = find_node(blocks, s.value)
        if nd is None:
            continue  # symbol into eliminated code has no output address
        symbols.append(Symbol(nd.faddr + (s.value - nd.iaddr), s.segment, s.name))

    out = TaskFile(
        load_addr=prog.load_addr,
        entry=entry,
        text=bytes(text),
        data=bytes(data),
        relocs=relocs,
        symbols=symbols,
    )
    out.validate()
    return out
