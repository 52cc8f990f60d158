"""Unreferenced and unreachable code elimination.

Two mechanisms share one forward scan.  Plain unreferenced elimination drops
any run of ref==0 instructions that follows an instruction control cannot
fall out of.  Subprogram elimination handles self-referencing dead regions
(a loop keeps its own head referenced): when the scan stops at a referenced
instruction, the stretch up to the next call-entered instruction is removed
*on trial* -- every reference going out of the stretch is withdrawn, and if
nothing in the stretch is still referenced afterwards the whole stretch is
dead; otherwise all counts are rolled back and the stretch stays.

Scans repeat until a full pass removes nothing: removing one subprogram can
strand the next.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InternalError
from .ir import BlockNode, DataNode, Node, Program, TextNode
from .isa import SDM1, Op

__all__ = ["ElimStats", "eliminate"]


@dataclass(slots=True)
class ElimStats:
    bytes_removed: int = 0
    nodes_removed: int = 0
    passes: int = 0


def _dec_targets(nd: TextNode, saved: dict[int, tuple[Node, int, int]] | None) -> None:
    """Withdraw nd's outgoing references; optionally record prior counts."""
    for op in nd.ops:
        t = op.target
        if t is None:
            continue
        if saved is not None and id(t) not in saved:
            saved[id(t)] = (t, t.ref, t.jsr if isinstance(t, TextNode) else 0)
        if t.ref <= 0:
            raise InternalError(
                f"reference count underflow at 0x{t.iaddr:X} while removing "
                f"0x{nd.iaddr:X}")
        t.ref -= 1
        if nd.opc == Op.JSR and isinstance(t, TextNode):
            t.jsr -= 1


def _pass(prog: Program) -> tuple[int, int]:
    """One forward scan; returns (bytes removed, nodes removed)."""
    flat: list[Node] = [nd for blk in prog.blocks for nd in blk.nodes]
    entry = prog.entry_node
    dead: set[int] = set()
    bytes_removed = 0

    def live(nd: Node) -> bool:
        return nd.ref > 0 or nd is entry

    def is_text(i: int) -> bool:
        return i < len(flat) and isinstance(flat[i], TextNode)

    i = 0
    prev: TextNode | None = None
    while is_text(i):
        nd = flat[i]
        opens = prev is not None and not SDM1.opcodes[prev.opc].falls_through
        if not opens:
            prev = nd  # type: ignore[assignment]
            i += 1
            continue

        # Unreferenced stretch: remove until the first live instruction.
        while is_text(i) and not live(flat[i]):
            victim = flat[i]
            _dec_targets(victim, None)  # type: ignore[arg-type]
            dead.add(id(victim))
            bytes_removed += victim.nbytes
            i += 1
        if not is_text(i):
            break

        # flat[i] is live but control cannot fall into it.  Unless it is
        # entered by calls (or is the program entry), its references may all
        # come from inside the stretch itself -- a dead loop keeps its own
        # head referenced.  Trial the stretch up to the next call-entered
        # instruction (or the entry, or the end of text).
        nd = flat[i]
        if nd is entry or nd.jsr > 0:  # type: ignore[union-attr]
            prev = nd  # type: ignore[assignment]
            i += 1
            continue
        j = i
        while (is_text(j) and flat[j].jsr == 0  # type: ignore[union-attr]
               and flat[j] is not entry):
            j += 1
        region = flat[i:j]

        saved: dict[int, tuple[Node, int, int]] = {}
        for r in region:
            _dec_targets(r, saved)  # type: ignore[arg-type]
        if any(live(r) for r in region):
            # Something outside still needs this stretch: roll back.
            for t, ref, jsr in saved.values():
                t.ref = ref
                if isinstance(t, TextNode):
                    t.jsr = jsr
            # Rescan inside the kept stretch; unreachable tails behind its
            # final transfer are still fair game.
            prev = None
        else:
            for r in region:
                dead.add(id(r))
                bytes_removed += r.nbytes
            i = j

    if not dead:
        return 0, 0
    for blk in prog.blocks:
        blk.nodes = [nd for nd in blk.nodes if id(nd) not in dead]
    survivors = [blk for blk in prog.blocks if blk.nodes]
    for a, b in zip(survivors, survivors[1:]):
        a.next = b
        a.inext = b
    if survivors:
        survivors[-1].next = None
        survivors[-1].inext = None
    prog.blocks[:] = survivors
    return bytes_removed, len(dead)


def eliminate(prog: Program) -> ElimStats:
    """Remove dead code from ``prog``; repeats until a pass changes nothing.

    The data segment node and the program entry are never candidates.
    Reference counts of every removed node's targets are withdrawn, so the
    exact-count invariant survives elimination.
    """
    stats = ElimStats()
    while True:
        stats.passes += 1
        removed, count = _pass(prog)
        if not count:
            break
        stats.bytes_removed += removed
        stats.nodes_removed += count
    return stats
