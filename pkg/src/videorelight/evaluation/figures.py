"""Figure rendering for reports and contact sheets (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .report import METRICS, EvalReport


def save_contact_sheet(videos: dict[str, np.ndarray], path: str | Path,
                       max_frames: int = 8) -> Path:
    """Rows = labeled videos, columns = frames."""
    if not videos:
        raise ValueError("no videos to plot")
    labels = list(videos)
    frames = min(max_frames, min(v.shape[0] for v in videos.values()))
    fig, axes = plt.subplots(len(labels), frames,
                             figsize=(1.4 * frames, 1.5 * len(labels)),
                             squeeze=False)
    for r, label in enumerate(labels):
        v = np.clip(videos[label], 0.0, 1.0)
        for c in range(frames):
            ax = axes[r][c]
            ax.imshow(v[c])
            ax.set_xticks([])
            ax.set_yticks([])
            if c == 0:
                ax.set_ylabel(label, fontsize=9)
            if r == 0:
                ax.set_title(f"frame {c}", fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_report_figures(report: EvalReport, prefix: str | Path,
                        method_a: str = "temporal",
                        method_b: str = "per_frame") -> list[Path]:
    """Per-metric scatter of method A vs method B plus a win-rate bar chart,
    written next to the delimited report output."""
    prefix = Path(prefix)
    rows_a = report.rows_for(method_a)
    rows_b = report.rows_for(method_b)
    if not rows_a or not rows_b:
        return []
    fig, axes = plt.subplots(1, len(METRICS) + 1, figsize=(4 * (len(METRICS) + 1), 3.4))
    for i, m in enumerate(METRICS):
        ax = axes[i]
        xs = [r[m] for r in rows_b]
        ys = [r[m] for r in rows_a]
        ax.scatter(xs, ys, s=12, alpha=0.7)
        lo = min(min(xs), min(ys))
        hi = max(max(xs), max(ys))
        ax.plot([lo, hi], [lo, hi], "k--", linewidth=0.8)
        ax.set_xlabel(f"{method_b} {m}")
        ax.set_ylabel(f"{method_a} {m}")
        ax.set_title(m)
    key = f"{method_a}_vs_{method_b}"
    rates = report.win_rates.get(key) or report.compute_win_rates(method_a, method_b)
    ax = axes[-1]
    ax.bar(range(len(METRICS)), [rates[m] for m in METRICS])
    ax.set_xticks(range(len(METRICS)), METRICS, rotation=30, fontsize=8)
    ax.axhline(0.5, color="k", linewidth=0.8, linestyle="--")
    ax.set_ylim(0, 1)
    ax.set_title(f"{method_a} win rate")
    fig.tight_layout()
    out = prefix.with_name(prefix.name + "_metrics.png")
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]
