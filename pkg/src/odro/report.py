"""Figure rendering for convergence histories.

Renders the residual history CSVs produced by the experiment runner into
PNG files placed alongside them, so a run directory is self-contained:
delimited data for downstream tooling, figures for eyes.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .core import ConvergenceRecord, Phase  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}


def load_history(path: str | Path) -> list[ConvergenceRecord]:
    """Read a history.csv back into records."""
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(ConvergenceRecord(
                iteration=int(row["iteration"]),
                r_total=float(row["r_total"]),
                phase=Phase(row["phase"]),
                cycle=int(row["cycle"]),
            ))
    return records


def _split(history: list[ConvergenceRecord]):
    iters = [r.iteration for r in history if r.phase is Phase.ITERATE]
    vals = [r.r_total for r in history if r.phase is Phase.ITERATE]
    opt_iters = [r.iteration for r in history if r.phase is Phase.OPTIMIZE]
    opt_vals = [r.r_total for r in history if r.phase is Phase.OPTIMIZE]
    return iters, vals, opt_iters, opt_vals


def _clip_positive(values):
    # log axis cannot show zeros or infs; clip for display only
    finite = [v for v in values if math.isfinite(v) and v > 0]
    floor = min(finite) * 1e-2 if finite else 1e-300
    ceil = max(finite) * 1e2 if finite else 1e300
    return [min(max(v, floor), ceil) if v > 0 else floor for v in values]


def render_history(history: list[ConvergenceRecord], out_path: str | Path,
                   title: str = "") -> Path:
    """Residual norm against iteration count, optimization points marked."""
    iters, vals, opt_iters, opt_vals = _split(history)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if iters:
            ax.semilogy(iters, _clip_positive(vals), color="C0", label="iteration")
        if opt_iters:
            ax.semilogy(opt_iters, _clip_positive(opt_vals), "v", color="C3",
                        markersize=5, label="after optimization")
        ax.set_xlabel("iteration")
        ax.set_ylabel("RMS residual")
        if title:
            ax.set_title(title)
        if iters or opt_iters:
            ax.legend(loc="best")
        fig.tight_layout()
        out_path = Path(out_path)
        fig.savefig(out_path)
        plt.close(fig)
    return out_path


def render_comparison(histories: dict[str, list[ConvergenceRecord]],
                      out_path: str | Path, title: str = "") -> Path:
    """Overlay several residual histories (e.g. baseline vs optimized)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, (label, history) in enumerate(histories.items()):
            iters, vals, opt_iters, opt_vals = _split(history)
            if iters:
                ax.semilogy(iters, _clip_positive(vals), color=f"C{i}", label=label)
            if opt_iters:
                ax.semilogy(opt_iters, _clip_positive(opt_vals), "v",
                            color=f"C{i}", markersize=4)
        ax.set_xlabel("iteration")
        ax.set_ylabel("RMS residual")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        out_path = Path(out_path)
        fig.savefig(out_path)
        plt.close(fig)
    return out_path
