"""Evaluation protocol: temporal split, balanced subset, metrics, sweep, ablations.

The split is chronological (first 80% trains, the rest tests), the balanced
test set keeps every accepted event and an equal-size uniform sample of
rejected ones, and all methods funnel through one ``compute_metrics``
implementation so the comparison never diverges on metric code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features.catalog import CATALOG, FeatureGroup
from .features.matrix import FeatureMatrix
from .model import TrainConfig, TrainedModel, train
from .tables import format_table

HARD_ONE = 0.999999
HARD_ZERO = 0.000001
DEFAULT_THRESHOLDS = tuple(round(0.1 * k, 1) for k in range(1, 10))
_PROB_FLOOR = 1e-12  # keeps soft-probability cross-entropy finite


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    accept_precision: float
    accept_recall: float
    accept_f1: float
    reject_precision: float
    reject_recall: float
    reject_f1: float
    cross_entropy: float
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "accept": {
                "precision": self.accept_precision,
                "recall": self.accept_recall,
                "f1": self.accept_f1,
            },
            "reject": {
                "precision": self.reject_precision,
                "recall": self.reject_recall,
                "f1": self.reject_f1,
            },
            "cross_entropy": self.cross_entropy,
            "counts": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
        }


def time_split(matrix: FeatureMatrix, train_fraction: float = 0.8) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Chronological split; ties broken by event id, boundary row goes to train."""
    n = len(matrix)
    if n < 5:
        raise ValueError(f"need at least 5 rows to split, got {n}")
    order = sorted(range(n), key=lambda i: (int(matrix.timestamps[i]), matrix.event_ids[i]))
    cut = math.ceil(train_fraction * n)
    return matrix.take(order[:cut]), matrix.take(order[cut:])


def balance_test_set(test: FeatureMatrix, seed: int = 0) -> FeatureMatrix:
    """All accepted rows plus an equal-size uniform sample of rejected rows."""
    accepted_idx = np.flatnonzero(test.labels)
    rejected_idx = np.flatnonzero(~test.labels)
    if len(rejected_idx) < len(accepted_idx):
        raise ValueError(
            f"cannot balance: {len(rejected_idx)} rejected < {len(accepted_idx)} accepted"
        )
    rng = np.random.default_rng(seed)
    sampled = rng.choice(rejected_idx, size=len(accepted_idx), replace=False)
    keep = np.sort(np.concatenate([accepted_idx, sampled]))
    return test.take(keep)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def compute_metrics(probabilities, labels, threshold: float = 0.5,
                    hard_labels: bool = False) -> EvalReport:
    """Accuracy, per-class precision/recall/F1, and cross-entropy.

    With ``hard_labels`` the inputs are deterministic 0/1 decisions and are
    smoothed to 0.000001 / 0.999999 before the cross-entropy, keeping it
    finite and comparable with probabilistic methods.
    """
    p = np.asarray(probabilities, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise ValueError("empty inputs")
    if hard_labels:
        p = np.where(p >= 0.5, HARD_ONE, HARD_ZERO)

    decisions = p >= threshold
    tp = int((decisions & y).sum())
    fp = int((decisions & ~y).sum())
    tn = int((~decisions & ~y).sum())
    fn = int((~decisions & y).sum())
    accept_precision, accept_recall, accept_f1 = _prf(tp, fp, fn)
    reject_precision, reject_recall, reject_f1 = _prf(tn, fn, fp)

    clipped = np.clip(p, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    rows = -(y * np.log(clipped) + (~y) * np.log1p(-clipped))
    return EvalReport(
        accuracy=(tp + tn) / len(y),
        accept_precision=accept_precision,
        accept_recall=accept_recall,
        accept_f1=accept_f1,
        reject_precision=reject_precision,
        reject_recall=reject_recall,
        reject_f1=reject_f1,
        cross_entropy=float(rows.mean()),
        tp=tp, fp=fp, tn=tn, fn=fn,
    )


def threshold_sweep(model: TrainedModel, matrix: FeatureMatrix,
                    thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> list[tuple[float, EvalReport]]:
    """One report per threshold; probabilities are computed once and reused."""
    probabilities = model.predict_proba_matrix(matrix)
    return [(t, compute_metrics(probabilities, matrix.labels, threshold=t)) for t in thresholds]


def sweep_grid(sweeps: dict[str, list[tuple[float, EvalReport]]]) -> dict:
    """JSON-friendly grid: per set, per metric, one value per threshold."""
    grid: dict = {"thresholds": None, "sets": {}}
    for set_name, sweep in sweeps.items():
        thresholds = [t for t, _ in sweep]
        if grid["thresholds"] is None:
            grid["thresholds"] = thresholds
        grid["sets"][set_name] = {
            "accuracy": [r.accuracy for _, r in sweep],
            "accept_f1": [r.accept_f1 for _, r in sweep],
            "reject_f1": [r.reject_f1 for _, r in sweep],
            "cross_entropy": [r.cross_entropy for _, r in sweep],
        }
    return grid


_SWEEP_METRICS = (
    ("Accuracy", "accuracy"),
    ("Accept F1", "accept_f1"),
    ("Reject F1", "reject_f1"),
    ("Cross-Entropy", "cross_entropy"),
)


def render_sweep_table(sweeps: dict[str, list[tuple[float, EvalReport]]]) -> str:
    """Aligned table, one row per (set, metric) and one column per threshold."""
    first = next(iter(sweeps.values()))
    headers = ["Set", "Metric"] + [f"{t:.1f}" for t, _ in first]
    rows = []
    for set_name, sweep in sweeps.items():
        for label, attr in _SWEEP_METRICS:
            rows.append([set_name, label] + [f"{getattr(r, attr):.3f}" for _, r in sweep])
    return format_table(headers, rows, title="Performance across decision thresholds")


# ---------------------------------------------------------------------------
# Ablations


@dataclass(frozen=True)
class AblationUnit:
    name: str
    features: tuple[str, ...]


@dataclass
class AblationResult:
    unit: str
    removed: tuple[str, ...]
    metrics: dict[str, EvalReport]
    deltas: dict[str, dict[str, float]]  # per set: full-model metric minus ablated metric

    def to_dict(self) -> dict:
        return {
            "unit": self.unit,
            "removed": list(self.removed),
            "metrics": {k: v.to_dict() for k, v in self.metrics.items()},
            "deltas": self.deltas,
        }


def group_units(feature_names: Sequence[str]) -> list[AblationUnit]:
    """One unit per feature group present among the given features."""
    units = []
    for group in FeatureGroup:
        members = tuple(n for n in feature_names if n in CATALOG.names_in_group(group))
        if members:
            units.append(AblationUnit(name=f"group:{group.value}", features=members))
    return units


def individual_units(feature_names: Sequence[str]) -> list[AblationUnit]:
    return [AblationUnit(name=f"feature:{n}", features=(n,)) for n in feature_names]


def ablate(train_matrix: FeatureMatrix, eval_sets: dict[str, FeatureMatrix],
           config: TrainConfig, units: Sequence[AblationUnit],
           full_model: TrainedModel | None = None) -> tuple[dict[str, EvalReport], list[AblationResult]]:
    """Retrain without each unit under the identical config and report deltas.

    Returns the full-model reports and one result per unit, ordered by unit
    name. Delta sign matches "full minus ablated": positive accuracy deltas
    and negative cross-entropy deltas mean the removed unit was helping.
    """
    if full_model is None:
        full_model = train(train_matrix, config)
    full_metrics = {
        name: compute_metrics(
            full_model.predict_proba_matrix(ev.select(full_model.feature_names)),
            ev.labels, threshold=full_model.threshold)
        for name, ev in eval_sets.items()
    }

    results = []
    for unit in sorted(units, key=lambda u: u.name):
        remaining = [n for n in train_matrix.feature_names if n not in unit.features]
        if not remaining:
            raise ValueError(f"removing unit {unit.name} would leave no features")
        ablated = train(train_matrix.select(remaining), config)
        metrics = {}
        deltas = {}
        for set_name, ev in eval_sets.items():
            report = compute_metrics(
                ablated.predict_proba_matrix(ev.select(remaining)),
                ev.labels, threshold=ablated.threshold)
            metrics[set_name] = report
            full = full_metrics[set_name]
            deltas[set_name] = {
                "accuracy": full.accuracy - report.accuracy,
                "cross_entropy": full.cross_entropy - report.cross_entropy,
            }
        results.append(AblationResult(unit=unit.name, removed=unit.features,
                                      metrics=metrics, deltas=deltas))
    return full_metrics, results


def render_ablation_table(results: Sequence[AblationResult]) -> str:
    if not results:
        return "no ablation units\n"
    set_names = list(results[0].metrics.keys())
    headers = ["Removed unit"]
    for set_name in set_names:
        headers += [f"{set_name} dAcc", f"{set_name} dCE"]
    rows = []
    for result in results:
        row = [result.unit]
        for set_name in set_names:
            row.append(f"{result.deltas[set_name]['accuracy']:+.3f}")
            row.append(f"{result.deltas[set_name]['cross_entropy']:+.3f}")
        rows.append(row)
    return format_table(headers, rows, title="Ablation deltas (full model minus ablated model)")


def render_method_table(reports: dict[str, dict[str, EvalReport]]) -> str:
    """Methods as rows within each evaluation set, one metric block per class."""
    headers = ["Set", "Method", "Acc", "A-Prec", "A-Rec", "A-F1",
               "R-Prec", "R-Rec", "R-F1", "CE"]
    rows = []
    for set_name, methods in reports.items():
        for method, r in methods.items():
            rows.append([
                set_name, method, f"{r.accuracy:.3f}",
                f"{r.accept_precision:.3f}", f"{r.accept_recall:.3f}", f"{r.accept_f1:.3f}",
                f"{r.reject_precision:.3f}", f"{r.reject_recall:.3f}", f"{r.reject_f1:.3f}",
                f"{r.cross_entropy:.3f}",
            ])
    return format_table(headers, rows, title="Method comparison")
