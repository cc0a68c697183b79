"""Matplotlib figures rendered alongside the delimited report output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_report_figures(aggregates, out_dir) -> list[Path]:
    """Render annual-ROI and decision-analysis bar charts as PNG files."""
    out = Path(out_dir)
    written: list[Path] = []
    if not aggregates:
        return written

    coins = sorted({a.coin for a in aggregates})
    strategies = sorted({a.strategy for a in aggregates})
    by_cell = {(a.coin, a.strategy): a for a in aggregates}

    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(coins)), 4))
    width = 0.8 / max(len(strategies), 1)
    x = np.arange(len(coins))
    for i, strategy in enumerate(strategies):
        means = [by_cell[(c, strategy)].annual_roi_mean * 100 if (c, strategy) in by_cell else np.nan for c in coins]
        stds = [by_cell[(c, strategy)].annual_roi_std * 100 if (c, strategy) in by_cell else 0.0 for c in coins]
        ax.bar(x + i * width, means, width=width, yerr=stds, capsize=3, label=strategy)
    ax.set_xticks(x + width * (len(strategies) - 1) / 2)
    ax.set_xticklabels(coins, rotation=20, ha="right")
    ax.set_ylabel("Annual ROI (%)")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "annual_roi.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    with_decisions = [a for a in aggregates if a.decision]
    if with_decisions:
        fig, axes = plt.subplots(1, 2, figsize=(11, 4))
        labels = [f"{a.coin}\n{a.strategy}" for a in with_decisions]
        x = np.arange(len(with_decisions))
        for key, color in (("buy_pct", "#2a9d8f"), ("sell_pct", "#e76f51"), ("hold_pct", "#aaaaaa")):
            axes[0].bar(
                x + {"buy_pct": -0.25, "sell_pct": 0.0, "hold_pct": 0.25}[key],
                [a.decision[key] for a in with_decisions],
                width=0.25,
                color=color,
                label=key.replace("_pct", "").capitalize(),
            )
        axes[0].set_title("Action frequency (%)")
        axes[0].legend(fontsize=8)
        for key, offset, color in (("avg_buy_size_pct", -0.15, "#2a9d8f"), ("avg_sell_size_pct", 0.15, "#e76f51")):
            values = [a.decision.get(key) or 0.0 for a in with_decisions]
            axes[1].bar(x + offset, values, width=0.3, color=color, label=key.replace("avg_", "").replace("_pct", ""))
        axes[1].set_title("Average position size (%)")
        axes[1].legend(fontsize=8)
        for ax_ in axes:
            ax_.set_xticks(x)
            ax_.set_xticklabels(labels, fontsize=7, rotation=30, ha="right")
        fig.tight_layout()
        path = out / "decisions.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
