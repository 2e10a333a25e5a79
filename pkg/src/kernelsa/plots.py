"""Figures rendered from the delimited outputs of a run.

Everything here reads the flushed CSV files (or a finished report object) and
writes PNG files next to them; nothing is interactive.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .core import InputSpace, SensitivityReport

MAX_LEGEND_ENTRIES = 8


def _trace_arrays(rows):
    d = sum(1 for key in rows[0] if key.startswith("S_"))
    n = np.array([row["N"] for row in rows])
    main = np.array([[row[f"S_{i + 1}"] for i in range(d)] for row in rows])
    total = np.array([[row[f"ST_{i + 1}"] for i in range(d)] for row in rows])
    crit = {
        key: np.array([row[f"criterion_{key}"] for row in rows])
        for key in ("mean", "max")
    }
    return n, main, total, crit


def render_run_figures(outdir, d: int | None = None) -> list[Path]:
    """Index-history, criterion-history, and design-layout figures.

    Reads ``trace.csv`` and ``design.csv`` from ``outdir`` and writes
    ``indices.png``, ``criterion.png`` and ``design.png`` alongside them.
    """
    from .workflow import DESIGN_FILE, TRACE_FILE, read_design_csv, read_trace_csv

    outdir = Path(outdir)
    written = []
    rows = read_trace_csv(outdir / TRACE_FILE)
    if rows:
        n, main, total, crit = _trace_arrays(rows)
        d = main.shape[1]
        # label only the most influential dimensions when there are many
        order = np.argsort(-total[-1])
        labeled = set(order[:MAX_LEGEND_ENTRIES].tolist())

        fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), sharex=True)
        for values, ax, title in ((main, axes[0], "main"), (total, axes[1], "total")):
            for i in range(d):
                label = f"{title[0].upper()}{'T' if title == 'total' else ''}_{i + 1}"
                ax.plot(n, values[:, i], marker=".",
                        label=label if i in labeled else None)
            ax.set_xlabel("samples")
            ax.set_ylabel(f"{title} index")
            ax.grid(alpha=0.3)
        axes[1].legend(fontsize=8, ncol=2)
        fig.tight_layout()
        path = outdir / "indices.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for key, marker in (("mean", "o"), ("max", "s")):
            ax.semilogy(n, np.maximum(crit[key], 1e-300), marker=marker, label=key)
        ax.set_xlabel("samples")
        ax.set_ylabel("criterion value")
        ax.grid(alpha=0.3, which="both")
        ax.legend()
        fig.tight_layout()
        path = outdir / "criterion.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    design_path = outdir / DESIGN_FILE
    if design_path.exists():
        points, responses, iters, _ = read_design_csv(design_path)
        fig, ax = plt.subplots(figsize=(4.6, 4.0))
        if points.shape[1] >= 2:
            sc = ax.scatter(points[:, 0], points[:, 1], c=iters, cmap="viridis", s=18)
            ax.set_ylabel("x2")
            fig.colorbar(sc, ax=ax, label="iteration")
        else:
            sc = ax.scatter(points[:, 0], responses, c=iters, cmap="viridis", s=18)
            ax.set_ylabel("response")
            fig.colorbar(sc, ax=ax, label="iteration")
        ax.set_xlabel("x1")
        fig.tight_layout()
        path = outdir / "design.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def render_indices_figure(report: SensitivityReport, space: InputSpace, path) -> Path:
    """Bar chart of main and total indices (analyze output)."""
    path = Path(path)
    d = report.d
    pos = np.arange(d)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * d + 2.0), 3.6))
    ax.bar(pos - 0.2, report.main, width=0.4, label="main")
    ax.bar(pos + 0.2, report.total, width=0.4, label="total")
    ax.set_xticks(pos)
    ax.set_xticklabels(space.names, rotation=45 if d > 6 else 0, fontsize=8)
    ax.set_ylabel("Sobol index")
    ax.grid(alpha=0.3, axis="y")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
