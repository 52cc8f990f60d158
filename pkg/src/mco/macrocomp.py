"""Macro compression: factor repeated instruction runs into subroutines.

Repeated straight-line instruction sequences are located with a suffix
tree over a tokenized form of the text segment, then profitable ones are
replaced by calls to a single out-of-line copy terminated by a return.

A sequence is eligible only when every occurrence can be entered solely
at its head and left solely by falling off its end:

* no call/return/push/pop (the call borrows the stack) and no control
  transfers of any kind inside the body;
* no interior instruction of any occurrence may be referenced;
* no operand anywhere in the program may target an interior node, and
  no operand inside an occurrence may target into any occurrence.

The head of an occurrence may be referenced: the call instruction takes
over its address and its referrers.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .errors import InternalError
from .isa import Am, Op, SDM1
from .ir import BlockNode, Operand, TextNode
from .suffixtree import SuffixTree

__all__ = ["MacroConfig", "CompressStats", "tokenize", "compress", "CALL_BYTES", "RET_BYTES"]

CALL_BYTES = 5      # jsr with absolute extension
RET_BYTES = 1

_BANNED = frozenset({Op.JSR, Op.RET, Op.PUSH, Op.POP, Op.JMP, Op.BEQ, Op.BNE})


@dataclass(frozen=True)
class MacroConfig:
    """priority: 'value' picks best savings first, 'length' longest first."""

    priority: str = "value"

    def __post_init__(self):
        if self.priority not in ("value", "length"):
            raise ValueError(f"unknown macro priority {self.priority!r}")


@dataclass
class CompressStats:
    bodies: int = 0
    calls: int = 0
    saved: int = 0          # net text bytes removed


def savings(occurrences: int, body_bytes: int) -> int:
    """Net byte gain from one body serving ``occurrences`` call sites."""
    return occurrences * (body_bytes - CALL_BYTES) - (body_bytes + RET_BYTES)


def tokenize(blocks) -> tuple[list, list[TextNode]]:
    """Token per text instruction; equal tokens ⇔ interchangeable instructions.

    Relocatable operands are canonicalized to (target node index, offset
    within the target) so two references to the same place compare equal
    regardless of the addressing bytes that happen to encode them.
    """
    # the data node gets an index too, so data references canonicalize
    order: dict[int, int] = {}
    seq: list[TextNode] = []
    for blk in blocks:
        for nd in blk.nodes:
            order[id(nd)] = len(order)
            if isinstance(nd, TextNode):
                seq.append(nd)
    tokens = []
    for nd in seq:
        modes = []
        regs = []
        values = []
        for op in nd.ops:
            modes.append(int(op.mode))
            regs.append(op.reg if op.mode == Am.REG else -1)
            if op.target is not None:
                values.append(("n", order[id(op.target)], op.addr - op.target.iaddr))
            elif op.mode in (Am.IMM32, Am.ABS, Am.D8, Am.D16):
                if op.addr is not None:
                    values.append(("v", op.addr))
                else:
                    raw = nd.instr[op.offset:op.offset + SDM1.ext_size(op.mode)]
                    values.append(("v", int.from_bytes(raw, "little")))
            else:
                values.append(None)
        tokens.append((int(nd.opc), tuple(modes), tuple(regs), tuple(values)))
    return tokens, seq


@dataclass
class _Candidate:
    length: int                 # tokens
    body_bytes: int
    positions: list[int]        # raw tree positions, sorted


def _nonoverlapping(positions: list[int], length: int) -> list[int]:
    picked = []
    last_end = -1
    for p in positions:
        if p >= last_end:
            picked.append(p)
            last_end = p + length
    return picked


class _Compressor:
    def __init__(self, prog, config: MacroConfig):
        self.prog = prog
        self.config = config
        self.tokens, self.tnodes = tokenize(prog.blocks)
        self.consumed: set[int] = set()
        data = prog.data_node
        self.cursor = data.iaddr + data.nbytes + 0x100
        self.stats = CompressStats()
        self._seq = 0
        self.heap: list = []

    # -- candidate ordering --------------------------------------------

    def _push(self, cand: _Candidate, occ: int) -> None:
        gain = savings(occ, cand.body_bytes)
        if self.config.priority == "length":
            key = (-cand.body_bytes, -gain)
        else:
            key = (-gain, -cand.body_bytes)
        self._seq += 1
        heapq.heappush(self.heap, (key, cand.positions[0], self._seq, cand))

    # -- validation ------------------------------------------------------

    def _validate(self, cand: _Candidate) -> tuple[str, list[int]]:
        """('ok', selected) | ('shorten', []) | ('drop', [])."""
        L = cand.length
        live = [p for p in cand.positions
                if all(id(self.tnodes[p + k]) not in self.consumed for k in range(L))]
        selected = _nonoverlapping(live, L)
        if len(selected) < 2:
            return "drop", []
        bad: set[int] = set()
        region_ids: set[int] = set()
        for p in selected:
            for k in range(L):
                region_ids.add(id(self.tnodes[p + k]))
        entry = self.prog.entry_node
        first = selected[0]
        for k in range(L):
            nd = self.tnodes[first + k]
            if nd.opc in _BANNED:
                bad.add(k)
        for p in selected:
            for k in range(L):
                nd = self.tnodes[p + k]
                if k > 0 and (nd.ref > 0 or nd is entry):
                    bad.add(k)
                for op in nd.ops:
                    if op.target is not None and id(op.target) in region_ids:
                        bad.add(k)
        if not bad:
            if savings(len(selected), cand.body_bytes) <= 0:
                return "drop", []
            return "ok", selected
        if bad == {L - 1} and L >= 2:
            return "shorten", []
        return "drop", []

    def _shorten(self, cand: _Candidate) -> None:
        L = cand.length - 1
        if L < 1:
            return
        first = cand.positions[0]
        body_bytes = sum(self.tnodes[first + k].nbytes for k in range(L))
        self._push(_Candidate(L, body_bytes, cand.positions), len(cand.positions))

    # -- installation ------------------------------------------------------

    def _copy_node(self, nd: TextNode, iaddr: int) -> TextNode:
        ops = [Operand(mode=o.mode, offset=o.offset, reg=o.reg,
                       addr=o.addr, target=o.target) for o in nd.ops]
        return TextNode(opc=nd.opc, iaddr=iaddr, faddr=iaddr,
                        instr=bytearray(nd.instr), ibytes=nd.nbytes,
                        nbytes=nd.nbytes, ops=ops)

    def _block_of(self, nd: TextNode) -> BlockNode:
        for blk in self.prog.blocks:
            if nd in blk.nodes:
                return blk
        raise InternalError("instruction missing from every block")

    def _retarget(self, old: TextNode, new: TextNode) -> None:
        for blk in self.prog.blocks:
            for nd in blk.nodes:
                if isinstance(nd, TextNode):
                    for op in nd.ops:
                        if op.target is old:
                            op.target = new
        for dr in self.prog.data_refs:
            if dr.target is old:
                dr.target = new

    def _install(self, cand: _Candidate, selected: list[int]) -> None:
        L = cand.length
        proto = [self.tnodes[selected[0] + k] for k in range(L)]
        body = []
        for nd in proto:
            body.append(self._copy_node(nd, self.cursor))
            self.cursor += nd.nbytes
        ret = TextNode(opc=Op.RET, iaddr=self.cursor, faddr=self.cursor,
                       instr=bytearray([SDM1.encode_byte(Op.RET, ())]),
                       ibytes=RET_BYTES, nbytes=RET_BYTES, ops=[])
        self.cursor += RET_BYTES
        for nd in body:
            for op in nd.ops:
                if op.target is not None:
                    op.target.ref += 1
        blk = BlockNode(saddr=body[0].iaddr, eaddr=self.cursor,
                        nodes=body + [ret])
        # keep the data node last
        self.prog.blocks.insert(len(self.prog.blocks) - 1, blk)
        head = body[0]

        for p in selected:
            first = self.tnodes[p]
            region = [self.tnodes[p + k] for k in range(L)]
            owner = self._block_of(first)
            idx = owner.nodes.index(first)
            if owner.nodes[idx:idx + L] != region:
                raise InternalError("repeated sequence crosses a block boundary")
            call = TextNode(opc=Op.JSR, iaddr=first.iaddr, faddr=first.faddr,
                            instr=bytearray([SDM1.encode_byte(Op.JSR, (Am.ABS,))]) + b"\0\0\0\0",
                            ibytes=CALL_BYTES, nbytes=CALL_BYTES,
                            ops=[Operand(mode=Am.ABS, offset=1, reg=0,
                                         addr=head.iaddr, target=head)])
            self._retarget(first, call)
            call.ref = first.ref
            call.jsr = first.jsr
            for nd in region:
                for op in nd.ops:
                    if op.target is not None:
                        op.target.ref -= 1
                        if op.target.ref < 0:
                            raise InternalError("reference count underflow")
            head.ref += 1
            head.jsr += 1
            if self.prog.entry_node is first:
                self.prog.entry_node = call
            owner.nodes[idx:idx + L] = [call]
            self.consumed.update(id(nd) for nd in region)
            self.stats.calls += 1
        self.stats.bodies += 1
        self.stats.saved += savings(len(selected), cand.body_bytes)

    # -- driver ------------------------------------------------------------

    def run(self) -> CompressStats:
        tree = SuffixTree(self.tokens)
        for _node, length, positions in tree.internal_nodes():
            first = positions[0]
            body_bytes = sum(self.tnodes[first + k].nbytes for k in range(length))
            self._push(_Candidate(length, body_bytes, positions),
                       len(_nonoverlapping(positions, length)))
        while self.heap:
            _key, _pos, _seq, cand = heapq.heappop(self.heap)
            verdict, selected = self._validate(cand)
            if verdict == "ok":
                self._install(cand, selected)
            elif verdict == "shorten":
                self._shorten(cand)
        self._relink()
        return self.stats

    def _relink(self) -> None:
        blocks = self.prog.blocks
        for i, blk in enumerate(blocks):
            blk.next = blocks[i + 1] if i + 1 < len(blocks) else None


def compress(prog, config: MacroConfig | None = None) -> CompressStats:
    """Replace profitable repeated sequences; returns what was done."""
    if config is None:
        config = MacroConfig()
    if not any(isinstance(nd, TextNode) for blk in prog.blocks for nd in blk.nodes):
        return CompressStats()
    return _Compressor(prog, config).run()
