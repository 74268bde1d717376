"""Figure rendering for the report-producing commands.

Each function writes one PNG next to the delimited report it illustrates.
The Agg backend keeps rendering headless.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import AblationResult, EvalReport
from .stats import CorrelationReport, SignificanceEntry

_DPI = 150


def significance_figure(entries: Sequence[SignificanceEntry], path) -> None:
    """Horizontal effect-size bars, significant features highlighted."""
    ordered = sorted(entries, key=lambda e: e.cliffs_delta)
    names = [e.feature for e in ordered]
    deltas = [e.cliffs_delta for e in ordered]
    colors = ["#d62728" if e.significant else "#b0b0b0" for e in ordered]
    height = max(3.0, 0.22 * len(ordered) + 1.0)
    fig, ax = plt.subplots(figsize=(9, height))
    ax.barh(range(len(ordered)), deltas, color=colors)
    ax.set_yticks(range(len(ordered)))
    ax.set_yticklabels(names, fontsize=6)
    for threshold in (-0.147, 0.147):
        ax.axvline(threshold, color="black", linewidth=0.8, linestyle="--")
    ax.set_xlabel("Cliff's delta (accepted vs rejected)")
    ax.set_title("Feature effect sizes; dashed lines mark the practical threshold")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def correlation_figure(names: Sequence[str], rho: np.ndarray, report: CorrelationReport, path) -> None:
    """Heatmap of pairwise rank correlations among significant features."""
    fig, ax = plt.subplots(figsize=(max(5.0, 0.5 * len(names) + 2), max(4.0, 0.5 * len(names) + 1.5)))
    image = ax.imshow(rho, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=6)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=6)
    fig.colorbar(image, ax=ax, label="Spearman rho")
    retained = set(report.retained)
    for idx, name in enumerate(names):
        if name in retained:
            ax.get_yticklabels()[idx].set_fontweight("bold")
    ax.set_title("Rank correlations (retained features in bold)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def sweep_figure(sweeps: dict[str, list[tuple[float, EvalReport]]], path) -> None:
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    for set_name, sweep in sweeps.items():
        thresholds = [t for t, _ in sweep]
        left.plot(thresholds, [r.accuracy for _, r in sweep], marker="o", label=f"{set_name} accuracy")
        left.plot(thresholds, [r.accept_f1 for _, r in sweep], marker="s", linestyle="--",
                  label=f"{set_name} accept F1")
        right.plot(thresholds, [r.cross_entropy for _, r in sweep], marker="o", label=set_name)
    left.set_xlabel("decision threshold")
    left.set_ylabel("score")
    left.legend(fontsize=7)
    right.set_xlabel("decision threshold")
    right.set_ylabel("cross-entropy")
    right.legend(fontsize=7)
    fig.suptitle("Threshold sweep")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def ablation_figure(results: Sequence[AblationResult], path) -> None:
    set_names = list(results[0].metrics.keys()) if results else []
    units = [r.unit for r in results]
    y = np.arange(len(units))
    width = 0.8 / max(len(set_names), 1)
    fig, ax = plt.subplots(figsize=(8, max(3.0, 0.35 * len(units) + 1)))
    for k, set_name in enumerate(set_names):
        deltas = [r.deltas[set_name]["accuracy"] for r in results]
        ax.barh(y + k * width, deltas, height=width, label=set_name)
    ax.set_yticks(y + width * (len(set_names) - 1) / 2)
    ax.set_yticklabels(units, fontsize=7)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("accuracy delta (full minus ablated)")
    ax.set_title("Ablation impact")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def method_figure(reports: dict[str, dict[str, EvalReport]], path) -> None:
    """Grouped accuracy bars, one group per evaluation set."""
    set_names = list(reports.keys())
    methods = list(next(iter(reports.values())).keys())
    x = np.arange(len(set_names))
    width = 0.8 / len(methods)
    fig, ax = plt.subplots(figsize=(7, 4))
    for k, method in enumerate(methods):
        values = [reports[s][method].accuracy for s in set_names]
        ax.bar(x + k * width, values, width=width, label=method)
    ax.set_xticks(x + width * (len(methods) - 1) / 2)
    ax.set_xticklabels(set_names)
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.0)
    ax.set_title("Method comparison")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
