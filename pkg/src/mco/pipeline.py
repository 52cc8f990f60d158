"""End-to-end optimization pipeline over task files.

Phases run in a fixed order — link, eliminate, macro-compress,
distribute, minimize, lengthen, emit — each toggled by ``Options``.
Whenever a phase that can stretch a pc-relative reference ran
(compression, distribution, or reduction), the lengthen phase always
runs afterwards: repairing over-reach is a correctness step, not an
optimization.
"""

from __future__ import annotations

import random
import time
from collections import Counter
from dataclasses import dataclass, field

from . import distrib as _distrib
from .elim import eliminate
from .errors import McoError, PipelineError
from .ir import (TextNode, dump_ir, jsr_prepass, link_operands,
                 parse_instructions, text_blocking, text_size)
from .macrocomp import MacroConfig, compress
from .reduce import lengthen, minimize, relocate
from .taskfile import TaskFile
from .vm import equivalent

__all__ = ["Options", "PhaseInfo", "PipelineResult", "optimize", "segment_mixes"]

_DISTRIB_CHOICES = ("off", "s0", "s1", "s0s1")
_MACRO_CHOICES = ("off", "value", "length")


@dataclass
class Options:
    elim: bool = True
    distrib: str = "s0s1"
    macro: str = "value"
    reduce: bool = True
    verify: bool = False
    verify_vectors: int = 4
    step_limit: int = 200_000
    dump_ir: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.distrib not in _DISTRIB_CHOICES:
            raise ValueError(f"distrib must be one of {_DISTRIB_CHOICES}")
        if self.macro not in _MACRO_CHOICES:
            raise ValueError(f"macro must be one of {_MACRO_CHOICES}")


@dataclass
class PhaseInfo:
    name: str
    seconds: float
    text_in: int
    text_out: int
    detail: dict = field(default_factory=dict)

    @property
    def saved(self) -> int:
        return self.text_in - self.text_out


@dataclass
class PipelineResult:
    task_in: TaskFile
    task_out: TaskFile
    phases: list[PhaseInfo]
    lengthen_passes: int = 0
    verified: bool | None = None
    ir_dumps: dict[str, str] = field(default_factory=dict)

    @property
    def text_in(self) -> int:
        return len(self.task_in.text)

    @property
    def text_out(self) -> int:
        return len(self.task_out.text)

    @property
    def saved(self) -> int:
        return self.text_in - self.text_out


def segment_mixes(tf: TaskFile) -> tuple[dict[str, int], dict[str, int]]:
    """(opcode histogram, addressing-mode histogram) of a text segment."""
    nodes = parse_instructions(tf.text, tf.data, tf.load_addr)
    opcodes: Counter = Counter()
    modes: Counter = Counter()
    for nd in nodes:
        if isinstance(nd, TextNode):
            opcodes[nd.opc.name.lower()] += 1
            for op in nd.ops:
                modes[op.mode.name.lower()] += 1
    return dict(opcodes), dict(modes)


def _verify_vectors(opts: Options) -> list[list[int]]:
    rng = random.Random(opts.seed)
    vectors: list[list[int]] = [[]]
    while len(vectors) < max(1, opts.verify_vectors):
        vectors.append([rng.randrange(0, 1 << 16)
                        for _ in range(rng.randrange(1, 5))])
    return vectors


def optimize(tf: TaskFile, opts: Options | None = None) -> PipelineResult:
    opts = opts if opts is not None else Options()
    phases: list[PhaseInfo] = []
    dumps: dict[str, str] = {}

    def run(name: str, fn, detail_fn=None):
        nonlocal prog
        before = text_size(prog.blocks) if prog is not None else len(tf.text)
        t0 = time.perf_counter()
        try:
            out = fn()
        except McoError as exc:
            raise PipelineError(name, exc) from exc
        seconds = time.perf_counter() - t0
        after = text_size(prog.blocks) if prog is not None else before
        detail = detail_fn(out) if detail_fn is not None else {}
        phases.append(PhaseInfo(name, seconds, before, after, detail))
        if opts.dump_ir and prog is not None:
            dumps[name] = dump_ir(prog)
        return out

    prog = None

    def _link():
        nonlocal prog
        nodes = parse_instructions(tf.text, tf.data, tf.load_addr)
        jsr_prepass(nodes, tf.entry)
        blocks = text_blocking(nodes)
        prog = link_operands(blocks, tf)
        return prog

    run("link", _link,
        lambda p: {"blocks": len(p.blocks),
                   "instructions": sum(1 for b in p.blocks for n in b.nodes
                                       if isinstance(n, TextNode)),
                   "data_refs": len(p.data_refs)})

    if opts.elim:
        run("elim", lambda: eliminate(prog),
            lambda s: {"nodes_removed": s.nodes_removed,
                       "bytes_removed": s.bytes_removed,
                       "passes": s.passes})

    if opts.macro != "off":
        run("macro", lambda: compress(prog, MacroConfig(priority=opts.macro)),
            lambda s: {"bodies": s.bodies, "calls": s.calls, "saved": s.saved})

    if opts.distrib != "off":
        cfg = _distrib.default_config(enable_sigma0="s0" in opts.distrib,
                                      enable_sigma1="s1" in opts.distrib)

        def _run_distrib():
            before = [id(b) for b in prog.blocks]
            prog.blocks = _distrib.code_distribution(prog.blocks, cfg)
            return [id(b) for b in prog.blocks] != before

        run("distrib", _run_distrib, lambda moved: {"reordered": moved})

    if opts.reduce:
        run("minimize", lambda: minimize(prog.blocks),
            lambda saved: {"saved": saved})

    lengthen_passes = 0
    if opts.reduce or opts.macro != "off" or opts.distrib != "off":
        lengthen_passes = run(
            "lengthen", lambda: lengthen(prog.blocks, tf.load_addr),
            lambda passes: {"passes": passes})

    out = run("emit", lambda: relocate(prog, tf),
              lambda t: {"relocs": len(t.relocs), "symbols": len(t.symbols),
                         "entry": t.entry})

    result = PipelineResult(task_in=tf, task_out=out, phases=phases,
                            lengthen_passes=lengthen_passes, ir_dumps=dumps)
    if opts.verify:
        t0 = time.perf_counter()
        result.verified = equivalent(tf, out, _verify_vectors(opts),
                                     opts.step_limit)
        phases.append(PhaseInfo("verify", time.perf_counter() - t0,
                                len(out.text), len(out.text),
                                {"equivalent": result.verified}))
    return result
