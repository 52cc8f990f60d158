"""Intermediate representation: instruction nodes, blocks, and linking.

The optimizer works on a doubly-layered structure: a flat ordered list of
nodes (one TextNode per instruction plus a single trailing DataNode holding
the whole data segment), grouped into BlockNodes.  A block boundary can only
sit where control cannot fall through and the next instruction is known to be
entered by subprogram call, so shuffling whole blocks preserves semantics.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .errors import LinkError, ParseError
from .isa import DISP_BASE, SDM1, Am, Op
from .taskfile import SEG_DATA, SEG_TEXT, TaskFile

__all__ = [
    "Operand",
    "TextNode",
    "DataNode",
    "BlockNode",
    "DataRef",
    "Program",
    "dalign",
    "parse_instructions",
    "jsr_prepass",
    "text_blocking",
    "link_operands",
    "find_node",
    "iter_nodes",
    "text_size",
    "dump_ir",
]


def dalign(addr: int) -> int:
    """Data segment alignment; SDM-1 has byte-aligned data."""
    return addr


@dataclass(slots=True, eq=False)
class Operand:
    """One decoded operand.

    ``addr``/``target`` are filled in by linking for relocatable operands
    (pc-relative modes, and absolute/immediate words named by a relocation
    entry).  For everything else ``addr`` doubles as scratch storage for the
    extension value when re-encoding moves it.
    """

    mode: Am
    offset: int                      # byte offset of the extension in the image
    reg: tuple[int, ...] = ()
    addr: int | None = None          # effective address (or preserved value)
    target: "TextNode | DataNode | None" = None


@dataclass(slots=True, eq=False)
class TextNode:
    opc: Op
    iaddr: int                       # input address
    faddr: int                       # final (output) address
    instr: bytearray                 # original byte image
    ibytes: int                      # initial size
    nbytes: int                      # current size
    ops: list[Operand]
    ref: int = 0                     # incoming relocatable references
    jsr: int = 0                     # incoming subprogram calls (<= ref)


@dataclass(slots=True, eq=False)
class DataNode:
    iaddr: int
    faddr: int
    nbytes: int
    bytes: bytearray
    ref: int = 0


Node = TextNode | DataNode


@dataclass(slots=True, eq=False)
class BlockNode:
    """A run of nodes that can be relocated as a unit."""

    saddr: int
    eaddr: int
    nodes: list[Node]
    inext: "BlockNode | None" = None     # successor in input order (fixed)
    next: "BlockNode | None" = None      # successor in current order
    # Distribution working counters, keyed by span table index where
    # applicable; see distrib.
    ref: dict[int, int] = field(default_factory=dict)
    reloc: dict[int, int] = field(default_factory=dict)
    dreloc: int = 0
    ubref: int = 0
    ubreloc: int = 0

    def size(self) -> int:
        return sum(n.nbytes for n in self.nodes)


@dataclass(slots=True, eq=False)
class DataRef:
    """A relocation-marked 32-bit pointer stored in the data segment."""

    offset: int                      # byte offset within the data segment
    addr: int                        # pointer value in the input image
    target: Node | None = None


@dataclass
class Program:
    """Everything the passes operate on, between linking and relocation."""

    load_addr: int
    entry: int
    blocks: list[BlockNode]
    data_node: DataNode
    data_refs: list[DataRef]
    entry_node: TextNode | None


# ---------------------------------------------------------------------------
# parsing


def parse_instructions(text: bytes, data: bytes, load_addr: int) -> list[Node]:
    """Decode a text segment into nodes, one per instruction.

    A single DataNode covering the whole data segment is appended; it is
    always the final node.  The concatenated byte images of the result equal
    the input segments exactly.
    """
    nodes: list[Node] = []
    pos = 0
    n = len(text)
    while pos < n:
        start = pos
        byte = text[pos]
        try:
            opc, ams = SDM1.decode_byte(byte)
        except ValueError:
            raise ParseError(f"unknown opcode byte {byte:#04x}", start) from None
        desc = SDM1.opcodes[opc]
        size = SDM1.instr_size(opc, ams)
        if start + size > n:
            raise ParseError(
                f"{opc.name.lower()} needs {size} bytes, segment ends after "
                f"{n - start}", start)
        ops: list[Operand] = [None] * desc.noper  # type: ignore[list-item]
        off = 1
        for opnum in desc.enc_order:
            mode = ams[opnum]
            if mode == Am.REG:
                regid = text[start + off]
                if regid > 15:
                    raise ParseError(f"register id {regid} out of range", start + off)
                ops[opnum] = Operand(mode, off, regid)
            else:
                ops[opnum] = Operand(mode, off)
            off += SDM1.ext_size(mode)
        iaddr = load_addr + start
        nodes.append(TextNode(
            opc=opc, iaddr=iaddr, faddr=iaddr,
            instr=bytearray(text[start:start + size]),
            ibytes=size, nbytes=size, ops=ops,
        ))
        pos += size

    daddr = dalign(load_addr + len(text))
    nodes.append(DataNode(
        iaddr=daddr, faddr=daddr, nbytes=len(data), bytes=bytearray(data),
    ))
    return nodes


# ---------------------------------------------------------------------------
# subprogram-entry prepass and blocking


def jsr_prepass(nodes: list[Node], entry: int) -> None:
    """Give blocking its call-target hints before full linking runs.

    Only absolute call operands are decoded (cheap, no relocation info
    needed); the program entry counts as called.  Linking later resets every
    count and recomputes them exactly.
    """
    starts = [nd.iaddr for nd in nodes]

    def bump(addr: int) -> None:
        i = bisect.bisect_right(starts, addr) - 1
        if 0 <= i < len(nodes):
            nd = nodes[i]
            if isinstance(nd, TextNode) and nd.iaddr <= addr < nd.iaddr + nd.nbytes:
                nd.jsr += 1
                nd.ref += 1

    bump(entry)
    for nd in nodes:
        if isinstance(nd, TextNode) and nd.opc == Op.JSR:
            op = nd.ops[0]
            if op.mode == Am.ABS:
                bump(int.from_bytes(nd.instr[op.offset:op.offset + 4], "little"))


def text_blocking(nodes: list[Node]) -> list[BlockNode]:
    """Partition the node list into relocatable blocks.

    A boundary falls between an instruction that never falls through and a
    following instruction entered by call, and always in front of the data
    segment node.
    """
    blocks: list[BlockNode] = []
    cur: list[Node] = []

    def close() -> None:
        if cur:
            blocks.append(BlockNode(
                saddr=cur[0].iaddr,
                eaddr=cur[-1].iaddr + cur[-1].nbytes,
                nodes=list(cur),
            ))
            cur.clear()

    for i, nd in enumerate(nodes):
        if isinstance(nd, DataNode):
            close()
            cur.append(nd)
            continue
        if cur and i > 0:
            prev = nodes[i - 1]
            if (isinstance(prev, TextNode)
                    and not SDM1.opcodes[prev.opc].falls_through
                    and nd.jsr > 0):
                close()
        cur.append(nd)
    close()

    for a, b in zip(blocks, blocks[1:]):
        a.inext = b
        a.next = b
    return blocks


# ---------------------------------------------------------------------------
# node lookup


def iter_nodes(blocks: list[BlockNode]):
    for blk in blocks:
        yield from blk.nodes


def text_size(blocks: list[BlockNode]) -> int:
    return sum(n.nbytes for n in iter_nodes(blocks) if isinstance(n, TextNode))


def find_node(blocks: list[BlockNode], addr: int) -> Node | None:
    """Locate the node whose input address range contains ``addr``."""
    # Blocks may be reordered; search a sorted view of node start addresses.
    nodes = sorted(iter_nodes(blocks), key=lambda n: n.iaddr)
    return _find_in(nodes, [n.iaddr for n in nodes], addr)


def _find_in(nodes: list[Node], starts: list[int], addr: int) -> Node | None:
    i = bisect.bisect_right(starts, addr) - 1
    if 0 <= i < len(nodes):
        nd = nodes[i]
        if nd.iaddr <= addr < nd.iaddr + nd.nbytes:
            return nd
    return None


# ---------------------------------------------------------------------------
# linking


def link_operands(blocks: list[BlockNode], tf: TaskFile) -> Program:
    """Resolve every relocatable operand to its node and count references.

    Two passes: first identify relocatable operands (pc-relative modes are
    inherently position-dependent; absolute and immediate words only when a
    relocation entry marks them) and record their effective addresses, then
    resolve each address to the containing node and bump its counters.
    Reference counts come out exact: one per relocatable operand or marked
    data word.
    """
    nodes = sorted(iter_nodes(blocks), key=lambda n: n.iaddr)
    starts = [n.iaddr for n in nodes]
    data_node = nodes[-1] if nodes and isinstance(nodes[-1], DataNode) else None
    if data_node is None:
        raise LinkError("node list lacks the data segment node")

    for nd in nodes:
        nd.ref = 0
        if isinstance(nd, TextNode):
            nd.jsr = 0

    # pass 1a: pc-relative operands are relocatable by construction
    by_ext: dict[int, tuple[TextNode, Operand]] = {}
    for nd in nodes:
        if not isinstance(nd, TextNode):
            continue
        for op in nd.ops:
            if op.mode in (Am.D8, Am.D16):
                raw = nd.instr[op.offset:op.offset + SDM1.ext_size(op.mode)]
                disp = int.from_bytes(raw, "little", signed=True)
                op.addr = nd.iaddr + DISP_BASE + disp
            elif op.mode in (Am.ABS, Am.IMM32):
                by_ext[nd.iaddr + op.offset] = (nd, op)

    # pass 1b: relocation entries nominate absolute/immediate words
    data_refs: list[DataRef] = []
    for r in tf.relocs:
        if r.segment == SEG_TEXT:
            spot = tf.load_addr + r.offset
            hit = by_ext.get(spot)
            if hit is None:
                raise LinkError(
                    f"text relocation at offset 0x{r.offset:X} does not mark a "
                    f"32-bit operand extension")
            nd, op = hit
            op.addr = int.from_bytes(nd.instr[op.offset:op.offset + 4], "little")
        elif r.segment == SEG_DATA:
            value = int.from_bytes(tf.data[r.offset:r.offset + 4], "little")
            data_refs.append(DataRef(r.offset, value))
        else:
            raise LinkError(f"relocation names unknown segment {r.segment}")

    # pass 2: resolve addresses to nodes and count
    def resolve(addr: int, what: str) -> Node:
        nd = _find_in(nodes, starts, addr)
        if nd is None:
            raise LinkError(f"{what} refers to 0x{addr:X}, outside the program")
        return nd

    for nd in nodes:
        if not isinstance(nd, TextNode):
            continue
        for op in nd.ops:
            if op.addr is None:
                continue
            target = resolve(op.addr, f"{nd.opc.name.lower()} at 0x{nd.iaddr:X}")
            op.target = target
            target.ref += 1
            if nd.opc == Op.JSR and isinstance(target, TextNode):
                target.jsr += 1

    for dr in data_refs:
        dr.target = resolve(dr.addr, f"data word at offset 0x{dr.offset:X}")
        dr.target.ref += 1

    entry_node = _find_in(nodes, starts, tf.entry)
    if tf.text and (not isinstance(entry_node, TextNode)
                    or entry_node.iaddr != tf.entry):
        raise LinkError(f"entry 0x{tf.entry:X} does not fall on an instruction")

    return Program(
        load_addr=tf.load_addr,
        entry=tf.entry,
        blocks=blocks,
        data_node=data_node,
        data_refs=data_refs,
        entry_node=entry_node if isinstance(entry_node, TextNode) else None,
    )


# ---------------------------------------------------------------------------
# listings


def dump_ir(prog: Program) -> str:
    """Human-readable node listing, one line per node."""
    lines = []
    for bi, blk in enumerate(prog.blocks):
        lines.append(f"block {bi}: [0x{blk.saddr:X}, 0x{blk.eaddr:X}) "
                     f"{len(blk.nodes)} nodes, {blk.size()} bytes")
        for nd in blk.nodes:
            if isinstance(nd, DataNode):
                lines.append(f"  0x{nd.iaddr:08X} -> 0x{nd.faddr:08X}  "
                             f"data[{nd.nbytes}] ref={nd.ref}")
                continue
            ops = []
            for op in nd.ops:
                if op.mode == Am.REG:
                    ops.append(f"r{op.reg}")
                elif op.target is not None:
                    ops.append(f"{op.mode.name.lower()}:0x{op.addr:X}")
                else:
                    ops.append(op.mode.name.lower())
            lines.append(
                f"  0x{nd.iaddr:08X} -> 0x{nd.faddr:08X}  "
                f"{nd.opc.name.lower():5s} {', '.join(ops):24s} "
                f"size={nd.nbytes} ref={nd.ref} jsr={nd.jsr}")
    return "\n".join(lines)
