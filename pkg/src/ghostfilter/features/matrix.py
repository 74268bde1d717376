"""Feature vectors, the assembled matrix, and its CSV form.

Assembly walks the time-sorted stream once, so every windowed feature of an
event depends only on strictly earlier events. Categorical encoders are fit
on the leading train fraction of the stream (unless pre-fit ones are given)
and travel with the matrix.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..logs import MS_PER_DAY, InteractionLog
from ..textstats import DEFAULT_COMMENT_PREFIXES
from .catalog import CATALOG, catalog_fingerprint
from .encoders import CategoricalEncoders
from .windows import (
    DEFAULT_WINDOW_DAYS,
    WindowAggregate,
    WindowEngine,
    developer_window_features,
    event_stats,
    in_situ_features,
    project_window_features,
)

DEFAULT_TRAIN_FRACTION = 0.8


class FeatureMismatchError(ValueError):
    """Requested features are not all present in a matrix or model."""

    def __init__(self, missing: Sequence[str], extra: Sequence[str] = ()):
        self.missing = tuple(missing)
        self.extra = tuple(extra)
        parts = []
        if self.missing:
            parts.append(f"missing features: {', '.join(self.missing)}")
        if self.extra:
            parts.append(f"extra features: {', '.join(self.extra)}")
        super().__init__("; ".join(parts) or "feature catalogs differ")


@dataclass(frozen=True)
class FeatureVector:
    event_id: str
    trigger_timestamp: int
    label: bool
    values: dict[str, float]
    missing: frozenset[str] = field(default_factory=frozenset)


@dataclass
class FeatureMatrix:
    feature_names: tuple[str, ...]
    event_ids: list[str]
    timestamps: np.ndarray  # (N,) int64
    labels: np.ndarray      # (N,) bool
    values: np.ndarray      # (N, M) float64
    missing: np.ndarray     # (N, M) bool
    encoders: CategoricalEncoders | None = None

    def __len__(self) -> int:
        return len(self.event_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def fingerprint(self) -> str:
        return catalog_fingerprint(self.feature_names)

    def column(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(values, present-mask) for one feature."""
        try:
            idx = self.feature_names.index(name)
        except ValueError:
            raise FeatureMismatchError([name]) from None
        return self.values[:, idx], ~self.missing[:, idx]

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        absent = [n for n in names if n not in self.feature_names]
        if absent:
            raise FeatureMismatchError(absent)
        idx = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(
            feature_names=tuple(names),
            event_ids=list(self.event_ids),
            timestamps=self.timestamps,
            labels=self.labels,
            values=self.values[:, idx],
            missing=self.missing[:, idx],
            encoders=self.encoders,
        )

    def take(self, indices) -> "FeatureMatrix":
        indices = np.asarray(indices)
        return FeatureMatrix(
            feature_names=self.feature_names,
            event_ids=[self.event_ids[i] for i in indices],
            timestamps=self.timestamps[indices],
            labels=self.labels[indices],
            values=self.values[indices],
            missing=self.missing[indices],
            encoders=self.encoders,
        )

    def vector(self, i: int) -> FeatureVector:
        row = self.values[i]
        mask = self.missing[i]
        return FeatureVector(
            event_id=self.event_ids[i],
            trigger_timestamp=int(self.timestamps[i]),
            label=bool(self.labels[i]),
            values={name: float(row[j]) for j, name in enumerate(self.feature_names)},
            missing=frozenset(name for j, name in enumerate(self.feature_names) if mask[j]),
        )

    @staticmethod
    def from_vectors(vectors: Sequence[FeatureVector], feature_names: Sequence[str],
                     encoders: CategoricalEncoders | None = None) -> "FeatureMatrix":
        names = tuple(feature_names)
        n, m = len(vectors), len(names)
        values = np.zeros((n, m))
        missing = np.zeros((n, m), dtype=bool)
        for i, vec in enumerate(vectors):
            for j, name in enumerate(names):
                if name not in vec.values:
                    raise FeatureMismatchError([name])
                values[i, j] = vec.values[name]
                missing[i, j] = name in vec.missing
        return FeatureMatrix(
            feature_names=names,
            event_ids=[v.event_id for v in vectors],
            timestamps=np.array([v.trigger_timestamp for v in vectors], dtype=np.int64),
            labels=np.array([v.label for v in vectors], dtype=bool),
            values=values,
            missing=missing,
            encoders=encoders,
        )


def _sorted_logs(logs: Iterable[InteractionLog]) -> list[InteractionLog]:
    return sorted(logs, key=lambda log: (log.trigger_timestamp, log.event_id))


def fit_encoders(logs: Iterable[InteractionLog],
                 train_fraction: float = DEFAULT_TRAIN_FRACTION) -> CategoricalEncoders:
    """Fit categorical encoders on the leading train fraction of the stream."""
    ordered = _sorted_logs(logs)
    cut = math.ceil(train_fraction * len(ordered))
    return CategoricalEncoders.fit(ordered[:cut])


def assemble_matrix(logs: Iterable[InteractionLog],
                    window_days: float = DEFAULT_WINDOW_DAYS,
                    encoders: CategoricalEncoders | None = None,
                    train_fraction: float = DEFAULT_TRAIN_FRACTION,
                    comment_prefixes=DEFAULT_COMMENT_PREFIXES) -> FeatureMatrix:
    """One catalog-ordered vector per log, leakage-free.

    Events are processed in (timestamp, event_id) order; each event's windowed
    features see only events with strictly earlier timestamps.
    """
    ordered = _sorted_logs(logs)
    if encoders is None:
        cut = math.ceil(train_fraction * len(ordered))
        encoders = CategoricalEncoders.fit(ordered[:cut])
    engine = WindowEngine(encoders, window_days, comment_prefixes)
    names = CATALOG.names()
    n, m = len(ordered), len(names)
    values = np.zeros((n, m))
    missing = np.zeros((n, m), dtype=bool)
    index = {name: j for j, name in enumerate(names)}
    for i, log in enumerate(ordered):
        vals, miss = engine.features_for(log)
        engine.push(log)
        row = values[i]
        for name, value in vals.items():
            row[index[name]] = value
        for name in miss:
            missing[i, index[name]] = True
    return FeatureMatrix(
        feature_names=names,
        event_ids=[log.event_id for log in ordered],
        timestamps=np.array([log.trigger_timestamp for log in ordered], dtype=np.int64),
        labels=np.array([log.accepted for log in ordered], dtype=bool),
        values=values,
        missing=missing,
        encoders=encoders,
    )


def _scan_window(logs: Iterable[InteractionLog], key, event: InteractionLog,
                 window_days: float, comment_prefixes) -> tuple[WindowAggregate, int | None]:
    t = event.trigger_timestamp
    window_ms = int(window_days * MS_PER_DAY)
    agg = WindowAggregate()
    oldest = None
    for log in sorted((l for l in logs if key(l) == key(event)),
                      key=lambda l: (l.trigger_timestamp, l.event_id)):
        if t - window_ms <= log.trigger_timestamp < t:
            agg.update(event_stats(log, comment_prefixes), +1)
            if oldest is None:
                oldest = log.trigger_timestamp
    return agg, oldest


def build_developer_features(logs: Iterable[InteractionLog], event: InteractionLog,
                             window_days: float = DEFAULT_WINDOW_DAYS,
                             encoders: CategoricalEncoders | None = None,
                             comment_prefixes=DEFAULT_COMMENT_PREFIXES) -> tuple[dict[str, float], set[str]]:
    """Developer-habit features for one event from its trailing window."""
    logs = list(logs)
    if encoders is None:
        encoders = CategoricalEncoders.fit(logs)
    agg, oldest = _scan_window(logs, lambda l: l.developer_id, event, window_days, comment_prefixes)
    return developer_window_features(agg, oldest, event.trigger_timestamp, encoders)


def build_project_features(logs: Iterable[InteractionLog], event: InteractionLog,
                           window_days: float = DEFAULT_WINDOW_DAYS,
                           encoders: CategoricalEncoders | None = None,
                           comment_prefixes=DEFAULT_COMMENT_PREFIXES) -> tuple[dict[str, float], set[str]]:
    """Project-preference features for one event from its trailing window."""
    logs = list(logs)
    if encoders is None:
        encoders = CategoricalEncoders.fit(logs)
    agg, oldest = _scan_window(logs, lambda l: l.project_id, event, window_days, comment_prefixes)
    return project_window_features(agg, oldest, event.trigger_timestamp, encoders)


def build_in_situ_features(event: InteractionLog,
                           encoders: CategoricalEncoders) -> tuple[dict[str, float], set[str]]:
    return in_situ_features(event, encoders)


# ---------------------------------------------------------------------------
# CSV and encoder persistence

_ID_COLUMNS = ("event_id", "trigger_timestamp", "label")
_MISSING_SUFFIX = "__missing"


def write_matrix_csv(matrix: FeatureMatrix, path) -> None:
    """Delimited export: id columns, catalog-ordered features, missing mask."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        header = list(_ID_COLUMNS) + list(matrix.feature_names) + [
            name + _MISSING_SUFFIX for name in matrix.feature_names
        ]
        writer.writerow(header)
        for i in range(len(matrix)):
            row = [matrix.event_ids[i], int(matrix.timestamps[i]), int(matrix.labels[i])]
            row.extend(repr(float(v)) for v in matrix.values[i])
            row.extend(int(b) for b in matrix.missing[i])
            writer.writerow(row)


def read_matrix_csv(path, encoders: CategoricalEncoders | None = None) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header[:3]) != _ID_COLUMNS:
            raise ValueError(f"unexpected matrix header, want leading columns {_ID_COLUMNS}")
        rest = header[3:]
        split = next((i for i, name in enumerate(rest) if name.endswith(_MISSING_SUFFIX)), len(rest))
        names = tuple(rest[:split])
        expected_missing = [name + _MISSING_SUFFIX for name in names]
        if rest[split:] != expected_missing:
            raise ValueError("missing-mask columns do not mirror the feature columns")
        event_ids, timestamps, labels, values, missing = [], [], [], [], []
        for row in reader:
            event_ids.append(row[0])
            timestamps.append(int(row[1]))
            labels.append(row[2] == "1")
            values.append([float(v) for v in row[3:3 + len(names)]])
            missing.append([v == "1" for v in row[3 + len(names):]])
    return FeatureMatrix(
        feature_names=names,
        event_ids=event_ids,
        timestamps=np.array(timestamps, dtype=np.int64),
        labels=np.array(labels, dtype=bool),
        values=np.array(values) if values else np.zeros((0, len(names))),
        missing=np.array(missing, dtype=bool) if missing else np.zeros((0, len(names)), dtype=bool),
        encoders=encoders,
    )


def write_encoders(encoders: CategoricalEncoders, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(encoders.to_dict(), handle, indent=2)


def read_encoders(path) -> CategoricalEncoders:
    with open(path, "r", encoding="utf-8") as handle:
        return CategoricalEncoders.from_dict(json.load(handle))
