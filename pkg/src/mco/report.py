"""Rendering of pipeline results: delimited text, JSON, and figures."""

from __future__ import annotations

import json

from .pipeline import PipelineResult, segment_mixes
from .taskfile import TaskFile

__all__ = ["render_text", "render_json", "write_figures"]


def _file_row(tf: TaskFile) -> dict:
    return {
        "load_addr": tf.load_addr,
        "entry": tf.entry,
        "text_size": len(tf.text),
        "data_size": len(tf.data),
        "relocs": len(tf.relocs),
        "symbols": len(tf.symbols),
    }


def as_dict(result: PipelineResult) -> dict:
    opc_in, mode_in = segment_mixes(result.task_in)
    opc_out, mode_out = segment_mixes(result.task_out)
    saved = result.saved
    pct = (100.0 * saved / result.text_in) if result.text_in else 0.0
    return {
        "input": _file_row(result.task_in),
        "output": _file_row(result.task_out),
        "saved": saved,
        "saved_pct": round(pct, 2),
        "phases": [
            {"name": p.name, "seconds": round(p.seconds, 6),
             "text_in": p.text_in, "text_out": p.text_out,
             "saved": p.saved, "detail": p.detail}
            for p in result.phases
        ],
        "lengthen_passes": result.lengthen_passes,
        "verified": result.verified,
        "opcode_mix": {"in": opc_in, "out": opc_out},
        "mode_mix": {"in": mode_in, "out": mode_out},
    }


def render_json(result: PipelineResult) -> str:
    return json.dumps(as_dict(result), indent=2, sort_keys=False)


def render_text(result: PipelineResult) -> str:
    d = as_dict(result)
    lines = []
    lines.append("phase | seconds | text_in | text_out | saved | notes")
    for p in d["phases"]:
        notes = " ".join(f"{k}={v}" for k, v in p["detail"].items())
        lines.append(f"{p['name']} | {p['seconds']:.4f} | {p['text_in']} | "
                     f"{p['text_out']} | {p['saved']} | {notes}")
    lines.append(
        f"total | text {d['input']['text_size']} -> {d['output']['text_size']} "
        f"| saved {d['saved']} ({d['saved_pct']}%)")
    if result.verified is not None:
        lines.append("verified | " +
                     ("outputs equivalent" if result.verified
                      else "OUTPUT DIFFERS FROM INPUT"))
    return "\n".join(lines)


def write_figures(result: PipelineResult, outdir: str) -> list[str]:
    """Render summary charts as PNG files under ``outdir``."""
    import os

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    d = as_dict(result)
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    names = [p["name"] for p in d["phases"]]
    saved = [p["saved"] for p in d["phases"]]
    ax.bar(names, saved, color="#4878a8")
    ax.set_ylabel("text bytes removed")
    ax.set_title("savings by phase")
    fig.tight_layout()
    path = os.path.join(outdir, "phase_savings.png")
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    for which, key in (("opcode", "opcode_mix"), ("mode", "mode_mix")):
        mix_in = d[key]["in"]
        mix_out = d[key]["out"]
        labels = sorted(set(mix_in) | set(mix_out))
        xs = range(len(labels))
        fig, ax = plt.subplots(figsize=(max(7, len(labels) * 0.6), 4))
        width = 0.4
        ax.bar([x - width / 2 for x in xs], [mix_in.get(k, 0) for k in labels],
               width, label="before", color="#4878a8")
        ax.bar([x + width / 2 for x in xs], [mix_out.get(k, 0) for k in labels],
               width, label="after", color="#a85448")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylabel("count")
        ax.set_title(f"{which} mix before/after")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(outdir, f"{which}_mix.png")
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths
