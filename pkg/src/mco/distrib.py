"""Code distribution: arranging blocks to shorten reference spans.

The underlying combinatorial problem is linear arrangement with a threshold
cost: vertices are blocks (weight = byte size), edges are references with a
four-part weight (s, s', t, t') giving the source/target byte offsets
measured from either end of their blocks, and an arrangement is charged for
every edge whose span meets the threshold.  Exhaustive search is exact but
factorial; the block placer uses greedy worth heuristics instead and the
acceptance suite checks it never beats the exhaustive minimum.

The reduction from plain (additive) linear arrangement proves the threshold
problem NP-complete and doubles as a cross-check: it is executable here and
the two cost functions agree on every arrangement of the reduced instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ir import BlockNode, DataNode, TextNode
from .isa import SDM1, Am

__all__ = [
    "Edge",
    "ArrangementGraph",
    "span_of",
    "tcf",
    "acf",
    "brute_force_arrangement",
    "heuristic_arrangement",
    "reduce_minla_to_minlta",
    "SpanEntry",
    "HeuristicConfig",
    "default_config",
    "set_dreloc",
    "update_ties",
    "worth",
    "code_distribution",
    "parse_graph",
]


# ---------------------------------------------------------------------------
# arrangement instances


@dataclass(slots=True)
class Edge:
    """Reference from ``src`` to ``dst`` with endpoint weights (s, s', t, t').

    s/s' are the source offset measured from the left/right end of the source
    vertex; t/t' likewise for the target.  Which pair contributes to an
    edge's span depends on which endpoint comes first in the arrangement.
    """

    src: int
    dst: int
    w: tuple[int, int, int, int]


@dataclass
class ArrangementGraph:
    weights: dict[int, int]              # vertex id -> vertex weight
    edges: list[Edge] = field(default_factory=list)

    def vertices(self) -> list[int]:
        return sorted(self.weights)


def span_of(g: ArrangementGraph, psi: dict[int, int], e: Edge) -> int:
    """Byte span of edge ``e`` under arrangement ``psi`` (vertex -> position).

    Endpoint contribution: when the source precedes the target the edge
    covers s' bytes of the source and t bytes of the target, otherwise s and
    t' bytes; every vertex strictly between contributes its full weight.
    """
    pu, pv = psi[e.src], psi[e.dst]
    s, s_, t, t_ = e.w
    endpoints = (s_ + t) if pu < pv else (s + t_)
    lo, hi = (pu, pv) if pu < pv else (pv, pu)
    pos_to_v = {p: v for v, p in psi.items()}
    interposed = sum(g.weights[pos_to_v[p]] for p in range(lo + 1, hi))
    return endpoints + interposed


def tcf(g: ArrangementGraph, psi: dict[int, int], threshold: int) -> int:
    """Threshold cost: how many edges span at least ``threshold`` bytes."""
    return sum(1 for e in g.edges if span_of(g, psi, e) >= threshold)


def acf(g: ArrangementGraph, psi: dict[int, int]) -> int:
    """Additive cost: total positional distance over all edges."""
    return sum(abs(psi[e.src] - psi[e.dst]) for e in g.edges)


def _seq_tcf(g: ArrangementGraph, seq: tuple[int, ...], threshold: int) -> int:
    # O(V + E) per arrangement: prefix-sum the vertex weights by position.
    pos = {v: i for i, v in enumerate(seq)}
    prefix = [0]
    for v in seq:
        prefix.append(prefix[-1] + g.weights[v])
    count = 0
    for e in g.edges:
        pu, pv = pos[e.src], pos[e.dst]
        s, s_, t, t_ = e.w
        if pu < pv:
            span = s_ + t + (prefix[pv] - prefix[pu + 1])
        else:
            span = s + t_ + (prefix[pu] - prefix[pv + 1])
        if span >= threshold:
            count += 1
    return count


def brute_force_arrangement(
    g: ArrangementGraph, threshold: int,
) -> tuple[dict[int, int], int]:
    """Exact minimum-threshold-cost arrangement by exhaustive search.

    Guarded to 9 vertices; ties resolve to the lexicographically smallest
    position assignment over the sorted vertex ids.
    """
    verts = g.vertices()
    if len(verts) > 9:
        raise ValueError(f"exhaustive search capped at 9 vertices, got {len(verts)}")
    if not verts:
        return {}, 0
    best_cost = None
    best_psi_t: tuple[int, ...] | None = None
    for seq in itertools.permutations(verts):
        cost = _seq_tcf(g, seq, threshold)
        pos = {v: i + 1 for i, v in enumerate(seq)}
        psi_t = tuple(pos[v] for v in verts)
        if best_cost is None or (cost, psi_t) < (best_cost, best_psi_t):
            best_cost, best_psi_t = cost, psi_t
    assert best_psi_t is not None
    return dict(zip(verts, best_psi_t)), best_cost


def heuristic_arrangement(g: ArrangementGraph, threshold: int) -> dict[int, int]:
    """Greedy arrangement built back to front.

    Each step places the vertex with the most edges that would stay under the
    threshold against the already-placed suffix; ties go to the lowest vertex
    id.  Spans against the suffix are final once a vertex is placed, since
    later vertices land outside the pair.
    """
    verts = g.vertices()
    placed: list[int] = []          # placed[0] is the current leftmost
    unplaced = list(verts)
    while unplaced:
        best_v = None
        best_score = -1
        for v in sorted(unplaced):
            seq = tuple([v] + placed)
            pos = {u: i for i, u in enumerate(seq)}
            prefix = [0]
            for u in seq:
                prefix.append(prefix[-1] + g.weights[u])
            score = 0
            for e in g.edges:
                if e.src == v and e.dst in pos:
                    pu, pv = pos[e.src], pos[e.dst]
                elif e.dst == v and e.src in pos:
                    pu, pv = pos[e.src], pos[e.dst]
                else:
                    continue
                s, s_, t, t_ = e.w
                if pu < pv:
                    span = s_ + t + (prefix[pv] - prefix[pu + 1])
                else:
                    span = s + t_ + (prefix[pu] - prefix[pv + 1])
                if span < threshold:
                    score += 1
            if score > best_score:
                best_score, best_v = score, v
        placed.insert(0, best_v)
        unplaced.remove(best_v)
    return {v: i + 1 for i, v in enumerate(placed)}


def reduce_minla_to_minlta(g: ArrangementGraph) -> tuple[ArrangementGraph, int]:
    """Rewrite an additive-cost instance as a threshold-cost instance.

    Every vertex gets weight 2; each original edge becomes a bundle of
    |V|-1 edges with weights (i, i, i, i) for i = 1..|V|-1; the threshold is
    2|V|-2.  Under any arrangement an original edge at positional distance d
    contributes d to the additive cost, and exactly d of its bundle meet the
    threshold, so the two cost functions take the same value everywhere.
    """
    n = len(g.weights)
    out = ArrangementGraph({v: 2 for v in g.weights})
    for e in g.edges:
        for i in range(1, n):
            out.edges.append(Edge(e.src, e.dst, (i, i, i, i)))
    return out, 2 * n - 2


def parse_graph(text: str) -> ArrangementGraph:
    """Read the ``v <id> <weight>`` / ``e <src> <dst> s s' t t'`` format."""
    g = ArrangementGraph({})
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "v" and len(parts) == 3:
                g.weights[int(parts[1])] = int(parts[2])
            elif parts[0] == "e" and len(parts) == 7:
                g.edges.append(Edge(int(parts[1]), int(parts[2]),
                                    tuple(int(p) for p in parts[3:7])))
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"graph line {lineno}: cannot parse {raw!r}") from None
    for e in g.edges:
        if e.src not in g.weights or e.dst not in g.weights:
            raise ValueError(f"edge {e.src}->{e.dst} names an undeclared vertex")
    return g


# ---------------------------------------------------------------------------
# block placement


@dataclass(frozen=True, slots=True)
class SpanEntry:
    """One pc-relative reach window and its byte saving over absolute."""

    lo: int
    hi: int
    saved: int


@dataclass(frozen=True)
class HeuristicConfig:
    enable_sigma0: bool = True           # data-reference affinity
    enable_sigma1: bool = True           # code-reference ties
    spans: tuple[SpanEntry, ...] = ()

    def __post_init__(self):
        if not (self.enable_sigma0 or self.enable_sigma1):
            raise ValueError("distribution needs at least one worth heuristic enabled")


def default_config(enable_sigma0: bool = True, enable_sigma1: bool = True) -> HeuristicConfig:
    abs_size = SDM1.ext_size(Am.ABS)
    spans = tuple(
        SpanEntry(*SDM1.modes[m].span, abs_size - SDM1.ext_size(m))
        for m in (Am.D8, Am.D16)
    )
    return HeuristicConfig(enable_sigma0, enable_sigma1, spans)


def _code_blocks(blocks: list[BlockNode]) -> tuple[list[BlockNode], BlockNode]:
    if (not blocks or not blocks[-1].nodes
            or not isinstance(blocks[-1].nodes[-1], DataNode)):
        raise ValueError("block list must end with the data segment block")
    return [b for b in blocks[:-1] if b.nodes], blocks[-1]


def set_dreloc(blocks: list[BlockNode]) -> None:
    """Count each code block's references into the data segment."""
    code, data_blk = _code_blocks(blocks)
    dnode = data_blk.nodes[-1]
    for blk in code:
        blk.dreloc = sum(
            1
            for nd in blk.nodes if isinstance(nd, TextNode)
            for op in nd.ops if op.target is dnode
        )


def update_ties(b1: BlockNode, placed: list[BlockNode],
                spans: tuple[SpanEntry, ...]) -> None:
    """Refresh b1's per-span tie counters against the placed suffix.

    Models b1 at the head of the placed list: reloc[i] counts b1's outgoing
    references that reach their real targets within span i; ref[i] counts
    placed-list references that would reach the middle of b1.  ubreloc/ubref
    are the remaining (unplaced-side) reference totals.
    """
    size1 = b1.size()
    pos: dict[int, int] = {}
    cum = size1
    for blk in placed:
        off = cum
        for nd in blk.nodes:
            pos[id(nd)] = off
            off += nd.nbytes
        cum = off
    off = 0
    own_off: dict[int, int] = {}
    for nd in b1.nodes:
        own_off[id(nd)] = off
        off += nd.nbytes

    center = size1 // 2
    out_edges: list[int] = []        # spans of b1 -> placed references
    in_edges: list[int] = []         # spans of placed -> b1 references
    ubreloc = 0
    for nd in b1.nodes:
        if not isinstance(nd, TextNode):
            continue
        for op in nd.ops:
            if op.target is None:
                continue
            tpos = pos.get(id(op.target))
            if tpos is None:
                if id(op.target) not in own_off:
                    ubreloc += 1     # reaches a block not placed yet
                continue
            out_edges.append(
                tpos + (op.addr - op.target.iaddr) - own_off[id(nd)])
    for blk in placed:
        for nd in blk.nodes:
            if not isinstance(nd, TextNode):
                continue
            for op in nd.ops:
                if op.target is not None and id(op.target) in own_off:
                    in_edges.append(center - pos[id(nd)])
    b1.ubreloc = ubreloc
    # incoming references not yet accounted for by the placed list
    b1.ubref = sum(nd.ref for nd in b1.nodes) - len(in_edges)
    for i, se in enumerate(spans):
        b1.reloc[i] = sum(1 for r in out_edges if se.lo <= r <= se.hi)
        b1.ref[i] = sum(1 for r in in_edges if se.lo <= r <= se.hi)


def worth(block: BlockNode, unplaced: list[BlockNode], placed: list[BlockNode],
          span_entry: tuple[int, SpanEntry], placed_size: int, *,
          config: HeuristicConfig, data_size: int) -> float:
    """Score ``block`` as the next placement for one span table entry.

    The data term multiplies: reference count into the data segment, the
    fraction of the data segment a centered reference could reach, the bytes
    the span saves over an absolute word, and the inverse block size.  The
    code term adds the in-span ties counted by update_ties.
    """
    si, se = span_entry
    size = block.size()
    score = 0.0
    if config.enable_sigma0 and size > 0:
        dist = (size - size // 2) + placed_size
        if data_size > 0:
            reach = min(data_size, max(0, se.hi - dist + 1))
            frac = reach / data_size
        else:
            frac = 0.0
        score += block.dreloc * frac * se.saved * (1.0 / size)
    if config.enable_sigma1:
        score += block.reloc.get(si, 0) + block.ref.get(si, 0)
    return score


def code_distribution(blocks: list[BlockNode],
                      config: HeuristicConfig) -> list[BlockNode]:
    """Reorder code blocks by repeated best-worth placement.

    The arrangement grows from the data-segment end backwards: the block
    chosen each round is prepended, so the first winner sits nearest the
    data segment.  Ties go to the lowest original start address.  The data
    block stays last; the block set is unchanged.
    """
    code, data_blk = _code_blocks(blocks)
    if not code:
        return list(blocks)
    set_dreloc(blocks)
    data_size = data_blk.nodes[-1].nbytes
    unplaced = sorted(code, key=lambda b: b.saddr)
    placed: list[BlockNode] = []
    placed_size = 0
    while unplaced:
        best = None
        best_worth = -1.0
        for b1 in unplaced:
            update_ties(b1, placed, config.spans)
            w = 0.0
            for entry in enumerate(config.spans):
                w += worth(b1, unplaced, placed, entry, placed_size,
                           config=config, data_size=data_size)
            if w > best_worth:
                best_worth, best = w, b1
        assert best is not None
        unplaced.remove(best)
        placed.insert(0, best)
        placed_size += best.size()

    out = placed + [data_blk]
    for a, b in zip(out, out[1:]):
        a.next = b
    out[-1].next = None
    return out
