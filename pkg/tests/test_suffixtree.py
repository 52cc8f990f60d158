"""Suffix tree structure and queries against naive string scanning."""

import random

from mco.suffixtree import SuffixTree


def naive_positions(s, sub):
    return [i for i in range(len(s) - len(sub) + 1) if s[i:i + len(sub)] == sub]


def spell_leaves(tree):
    """(suffix_index, spelled tokens from the root) for every leaf."""
    out = []
    stack = [(tree.root, [])]
    while stack:
        node, prefix = stack.pop()
        label = prefix if node is tree.root else prefix + tree.seq[node.start:node.end]
        if node.is_leaf() and node is not tree.root:
            out.append((node.suffix_index, label))
        for child in node.children.values():
            stack.append((child, label))
    return out


def test_classic_five_letter_example():
    t = SuffixTree(list("abcab"))
    assert t.leaf_count() == 6                       # five suffixes + terminal

    inner = t.internal_nodes()
    labels = [("".join(t.path_label(n)), ln, pos) for n, ln, pos in inner]
    assert labels == [("b", 1, [1, 4]), ("ab", 2, [0, 3])]
    assert all(len(n.children) >= 2 for n, _, _ in inner)

    # every root-to-leaf path spells one suffix, terminal included
    seen = {}
    for idx, label in spell_leaves(t):
        assert label == t.seq[idx:]
        seen[idx] = label
    assert sorted(seen) == [0, 1, 2, 3, 4, 5]


def test_counts_on_the_classic_example():
    t = SuffixTree(list("abcab"))
    assert t.count(list("ab")) == 2
    assert t.count(list("b")) == 2
    assert t.count(list("abc")) == 1
    assert t.count(list("abcab")) == 1
    assert t.count(list("cab")) == 1
    assert t.count(list("ba")) == 0
    assert t.count(list("x")) == 0
    assert t.count([]) == 0


def test_run_of_identical_tokens():
    t = SuffixTree(list("aaaa"))
    labels = [("".join(t.path_label(n)), ln, pos)
              for n, ln, pos in t.internal_nodes()]
    assert labels == [("a", 1, [0, 1, 2, 3]),
                      ("aa", 2, [0, 1, 2]),
                      ("aaa", 3, [0, 1])]
    assert t.count(list("aa")) == 3


def test_degenerate_sequences():
    empty = SuffixTree([])
    assert empty.leaf_count() == 1
    assert empty.internal_nodes() == []
    single = SuffixTree(["x"])
    assert single.leaf_count() == 2
    assert single.internal_nodes() == []
    assert single.count(["x"]) == 1


def test_tuple_tokens():
    seq = [(1, "a"), (2, "b"), (1, "a"), (2, "b"), (3,)]
    t = SuffixTree(seq)
    inner = t.internal_nodes()
    labels = [(tuple(t.path_label(n)), pos) for n, _, pos in inner]
    assert (((1, "a"), (2, "b")), [0, 2]) in labels
    assert t.count([(1, "a"), (2, "b")]) == 2
    assert t.count([(2, "b"), (1, "a")]) == 1
    assert t.count([(9, "?")]) == 0


def test_counts_and_positions_match_naive_scanning():
    rng = random.Random(42)
    for trial in range(60):
        sigma = "ab" if trial % 3 == 0 else "abc" if trial % 3 == 1 else "abcd"
        s = "".join(rng.choice(sigma) for _ in range(rng.randint(1, 40)))
        t = SuffixTree(list(s))
        assert t.leaf_count() == len(s) + 1

        subs = {s[i:i + k] for k in (1, 2, 3) for i in range(len(s) - k + 1)}
        subs |= {"z", "zz", s + "a"}
        for sub in subs:
            assert t.count(list(sub)) == len(naive_positions(s, sub)), \
                f"{s!r} / {sub!r}"

        for node, ln, pos in t.internal_nodes():
            label = "".join(t.path_label(node))
            assert len(label) == ln
            assert pos == naive_positions(s, label)
            assert len(pos) >= 2            # internal means repeated
