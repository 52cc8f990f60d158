"""Suffix tree over arbitrary hashable token sequences.

Built online in linear time.  A unique terminal token is appended
internally so every suffix ends at a leaf and every repeated subsequence
corresponds to exactly one internal node, whose leaf count is the
subsequence's occurrence count.
"""

from __future__ import annotations

__all__ = ["SuffixTree", "STNode"]


class _Terminal:
    """Unique end-of-sequence token; never equal to anything else."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "$"


class STNode:
    """Tree node; the edge *into* the node is seq[start:end]."""

    __slots__ = ("children", "link", "start", "end", "suffix_index", "path_len")

    def __init__(self, start: int, end: int | None):
        self.children: dict[object, STNode] = {}
        self.link: STNode | None = None
        self.start = start
        self.end = end                    # None while open during construction
        self.suffix_index = -1            # leaves: suffix start position
        self.path_len = 0                 # tokens from root through this node

    def is_leaf(self) -> bool:
        return not self.children


class SuffixTree:
    def __init__(self, tokens: list):
        self.seq: list = list(tokens) + [_Terminal()]
        self.root = STNode(-1, -1)
        self._build()
        self._finalize()

    # -- construction ------------------------------------------------------

    def _edge_len(self, node: STNode, i: int) -> int:
        end = node.end if node.end is not None else i + 1
        return end - node.start

    def _build(self) -> None:
        seq = self.seq
        root = self.root
        active_node = root
        active_edge = -1
        active_len = 0
        remainder = 0
        for i, tok in enumerate(seq):
            last_new: STNode | None = None
            remainder += 1
            while remainder > 0:
                if active_len == 0:
                    active_edge = i
                child = active_node.children.get(seq[active_edge])
                if child is None:
                    active_node.children[seq[active_edge]] = STNode(i, None)
                    if last_new is not None:
                        last_new.link = active_node
                        last_new = None
                else:
                    edge_len = self._edge_len(child, i)
                    if active_len >= edge_len:
                        active_node = child
                        active_edge += edge_len
                        active_len -= edge_len
                        continue
                    if seq[child.start + active_len] == tok:
                        active_len += 1
                        if last_new is not None:
                            last_new.link = active_node
                            last_new = None
                        break
                    split = STNode(child.start, child.start + active_len)
                    active_node.children[seq[split.start]] = split
                    split.children[tok] = STNode(i, None)
                    child.start += active_len
                    split.children[seq[child.start]] = child
                    if last_new is not None:
                        last_new.link = split
                    last_new = split
                remainder -= 1
                if active_node is root and active_len > 0:
                    active_len -= 1
                    active_edge = i - remainder + 1
                elif active_node is not root:
                    active_node = active_node.link or root

    def _finalize(self) -> None:
        n = len(self.seq)
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            if node.end is None:
                node.end = n
            if node is not self.root:
                node.path_len = depth + (node.end - node.start)
            for child in node.children.values():
                stack.append((child, node.path_len))
            if node.is_leaf() and node is not self.root:
                node.suffix_index = n - node.path_len

    # -- queries -----------------------------------------------------------

    def leaf_positions(self, node: STNode) -> list[int]:
        """Start positions of every occurrence of the node's path label."""
        out = []
        stack = [node]
        while stack:
            cur = stack.pop()
            if cur.is_leaf():
                out.append(cur.suffix_index)
            else:
                stack.extend(cur.children.values())
        out.sort()
        return out

    def internal_nodes(self) -> list[tuple[STNode, int, list[int]]]:
        """(node, path length, occurrence positions) for repeated labels."""
        out = []
        stack = list(self.root.children.values())
        while stack:
            node = stack.pop()
            if node.is_leaf():
                continue
            out.append((node, node.path_len, self.leaf_positions(node)))
            stack.extend(node.children.values())
        out.sort(key=lambda t: (t[1], t[2][0]))
        return out

    def path_label(self, node: STNode) -> list:
        # The label equals the first path_len tokens of any occurrence.
        pos = self.leaf_positions(node)[0]
        return self.seq[pos:pos + node.path_len]

    def count(self, sub: list) -> int:
        """Occurrences of ``sub`` in the original sequence (tree walk)."""
        if not sub:
            return 0
        node = self.root
        i = 0
        while i < len(sub):
            child = node.children.get(sub[i])
            if child is None:
                return 0
            label = self.seq[child.start:child.end]
            for tok in label:
                if i == len(sub):
                    break
                if tok != sub[i]:
                    return 0
                i += 1
            node = child
        if node.is_leaf():
            return 1
        return len(self.leaf_positions(node))

    def leaf_count(self) -> int:
        return sum(1 for _ in self._leaves())

    def _leaves(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf():
                if node is not self.root:
                    yield node
            else:
                stack.extend(node.children.values())
