"""Shared helpers: program corpus, IR invariant checks, tiny builders."""

from __future__ import annotations

import pytest

from mco.gen import GenConfig, generate
from mco.ir import (DataNode, TextNode, jsr_prepass, link_operands,
                    parse_instructions, text_blocking)
from mco.taskfile import TaskFile


def front(tf: TaskFile):
    """Parse/link a task file into a Program (the pipeline's front end)."""
    nodes = parse_instructions(tf.text, tf.data, tf.load_addr)
    jsr_prepass(nodes, tf.entry)
    blocks = text_blocking(nodes)
    return link_operands(blocks, tf)


def assert_ref_integrity(prog) -> None:
    """Stored reference counts must equal a from-scratch recount."""
    counts: dict[int, int] = {}
    jsrs: dict[int, int] = {}
    for blk in prog.blocks:
        for nd in blk.nodes:
            if not isinstance(nd, TextNode):
                continue
            for op in nd.ops:
                if op.target is not None:
                    counts[id(op.target)] = counts.get(id(op.target), 0) + 1
                    if nd.opc.name == "JSR" and isinstance(op.target, TextNode):
                        jsrs[id(op.target)] = jsrs.get(id(op.target), 0) + 1
    for dr in prog.data_refs:
        if dr.target is not None:
            counts[id(dr.target)] = counts.get(id(dr.target), 0) + 1
    for blk in prog.blocks:
        for nd in blk.nodes:
            assert nd.ref == counts.get(id(nd), 0), \
                f"node at 0x{nd.iaddr:X}: stored ref {nd.ref} != recount " \
                f"{counts.get(id(nd), 0)}"
            if isinstance(nd, TextNode):
                assert nd.jsr == jsrs.get(id(nd), 0), \
                    f"node at 0x{nd.iaddr:X}: stored jsr {nd.jsr} != recount"


def corpus(n: int, *, dead: float = 0.2, repeats: int = 0,
           start_seed: int = 0, **kw) -> list[TaskFile]:
    return [generate(GenConfig(seed=start_seed + i, dead_fraction=dead,
                               repeats=repeats, **kw))
            for i in range(n)]


@pytest.fixture(scope="session")
def small_corpus() -> list[TaskFile]:
    return corpus(30, repeats=1)
