"""Trailing-window aggregation over interaction logs.

Windows are half-open ``[t - window, t)`` keyed by developer or project, so
the event being featurized (and anything sharing its timestamp) never feeds
its own features. The same :class:`WindowEngine` drives both batch matrix
assembly and the live prediction service, which is what makes serve-path and
batch-path features bit-identical.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from datetime import datetime, timezone

from ..logs import MS_PER_DAY, InteractionLog
from ..textstats import (
    DEFAULT_COMMENT_PREFIXES,
    cosine_similarity,
    count_comment_lines,
    count_lines,
    levenshtein,
)
from .encoders import CategoricalEncoders, parse_version

DEFAULT_WINDOW_DAYS = 7.0


@dataclass(frozen=True, slots=True)
class EventStats:
    """Per-event quantities a window aggregates; computed once per log."""

    ts: int
    accepted: bool
    preceding_lines: int
    preceding_chars: int
    generated_lines: int
    generated_chars: int
    written_lines: int
    written_chars: int
    generation_time: int
    accepted_length_ratio: float
    edit_distance: int | None  # accepted with known suggestion text, else None
    edited: bool | None
    comment_lines: int | None  # heuristic count when context text is known
    context_lines: int | None
    ide_version: str
    ide_type: str


def event_stats(log: InteractionLog, comment_prefixes=DEFAULT_COMMENT_PREFIXES) -> EventStats:
    edit_distance = None
    edited = None
    if log.accepted and log.generated_text is not None:
        final_text = log.modified_text if log.modified_text is not None else log.generated_text
        edit_distance = levenshtein(log.generated_text, final_text)
        edited = final_text != log.generated_text
    comment_lines = None
    context_lines = None
    if log.preceding_text is not None:
        comment_lines = count_comment_lines(log.preceding_text, comment_prefixes)
        context_lines = count_lines(log.preceding_text)
    return EventStats(
        ts=log.trigger_timestamp,
        accepted=log.accepted,
        preceding_lines=log.preceding_lines,
        preceding_chars=log.preceding_chars,
        generated_lines=log.generated_lines,
        generated_chars=log.generated_chars,
        written_lines=log.written_lines,
        written_chars=log.written_chars,
        generation_time=log.generation_time_ms,
        accepted_length_ratio=log.accepted_length_ratio,
        edit_distance=edit_distance,
        edited=edited,
        comment_lines=comment_lines,
        context_lines=context_lines,
        ide_version=log.ide_version,
        ide_type=log.ide_type,
    )


class WindowAggregate:
    """Running sums over the events currently inside one window."""

    __slots__ = (
        "n", "preceding_lines", "preceding_chars", "generated_lines",
        "generated_chars", "written_lines", "written_chars", "presented_time",
        "accepted_length_ratio", "n_accepted", "accepted_time", "n_rejected",
        "rejected_time", "n_edit_pairs", "edit_distance", "n_edited",
        "comment_lines", "context_lines", "versions", "types",
    )

    def __init__(self):
        self.n = 0
        self.preceding_lines = 0
        self.preceding_chars = 0
        self.generated_lines = 0
        self.generated_chars = 0
        self.written_lines = 0
        self.written_chars = 0
        self.presented_time = 0
        self.accepted_length_ratio = 0.0
        self.n_accepted = 0
        self.accepted_time = 0
        self.n_rejected = 0
        self.rejected_time = 0
        self.n_edit_pairs = 0
        self.edit_distance = 0
        self.n_edited = 0
        self.comment_lines = 0
        self.context_lines = 0
        self.versions: Counter = Counter()
        self.types: Counter = Counter()

    def update(self, ev: EventStats, sign: int) -> None:
        self.n += sign
        self.preceding_lines += sign * ev.preceding_lines
        self.preceding_chars += sign * ev.preceding_chars
        self.generated_lines += sign * ev.generated_lines
        self.generated_chars += sign * ev.generated_chars
        self.written_lines += sign * ev.written_lines
        self.written_chars += sign * ev.written_chars
        self.presented_time += sign * ev.generation_time
        self.accepted_length_ratio += sign * ev.accepted_length_ratio
        if ev.accepted:
            self.n_accepted += sign
            self.accepted_time += sign * ev.generation_time
        else:
            self.n_rejected += sign
            self.rejected_time += sign * ev.generation_time
        if ev.edit_distance is not None:
            self.n_edit_pairs += sign
            self.edit_distance += sign * ev.edit_distance
            if ev.edited:
                self.n_edited += sign
        if ev.context_lines is not None:
            self.comment_lines += sign * ev.comment_lines
            self.context_lines += sign * ev.context_lines
        self.versions[ev.ide_version] += sign
        if self.versions[ev.ide_version] == 0:
            del self.versions[ev.ide_version]
        self.types[ev.ide_type] += sign
        if self.types[ev.ide_type] == 0:
            del self.types[ev.ide_type]

    def copy(self) -> "WindowAggregate":
        clone = WindowAggregate.__new__(WindowAggregate)
        for name in self.__slots__:
            value = getattr(self, name)
            if isinstance(value, Counter):
                value = value.copy()
            setattr(clone, name, value)
        return clone


class RollingWindow:
    """Deque of events for one key, with O(1) amortized add/evict."""

    __slots__ = ("events", "aggregate")

    def __init__(self):
        self.events: deque[EventStats] = deque()
        self.aggregate = WindowAggregate()

    def push(self, ev: EventStats) -> None:
        self.events.append(ev)
        self.aggregate.update(ev, +1)

    def snapshot(self, t: int, window_ms: int) -> tuple[WindowAggregate, int | None]:
        """Aggregate over events with timestamp in [t - window, t).

        Eviction of events older than the window is permanent; events at or
        after ``t`` (possible when feedback for a tied timestamp arrived
        first) are excluded from the returned view only.
        """
        cutoff = t - window_ms
        while self.events and self.events[0].ts < cutoff:
            self.aggregate.update(self.events.popleft(), -1)
        excluded = 0
        for ev in reversed(self.events):
            if ev.ts < t:
                break
            excluded += 1
        if excluded == 0:
            agg = self.aggregate
        else:
            agg = self.aggregate.copy()
            for i in range(1, excluded + 1):
                agg.update(self.events[-i], -1)
        oldest_ts = None
        if agg.n > 0:
            oldest_ts = self.events[0].ts
        return agg, oldest_ts


def _dominant_version(counter: Counter) -> str:
    return min(counter.items(), key=lambda kv: (-kv[1], parse_version(kv[0])))[0]


def _dominant_type(counter: Counter) -> str:
    return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def _window_values(prefix: str, agg: WindowAggregate, oldest_ts: int | None, t: int,
                   encoders: CategoricalEncoders) -> tuple[dict[str, float], set[str]]:
    """Shared developer/project window features; cold starts become missing."""
    values: dict[str, float] = {}
    missing: set[str] = set()

    def put(name: str, value: float | None) -> None:
        full = prefix + name
        if value is None:
            values[full] = 0.0
            missing.add(full)
        else:
            values[full] = float(value)

    n = agg.n
    if n == 0:
        for name in ("preceding_lines", "preceding_chars", "generated_lines",
                     "generated_chars", "written_lines", "written_chars",
                     "presented_time", "accepted_time", "rejected_time",
                     "accepted_length_ratio", "accepted_ratio",
                     "dominant_IDE_version", "dominant_IDE_type"):
            put(name, None)
        put("accepted_counts", 0)
        put("IDE_version_counts", 0)
        put("IDE_type_counts", 0)
        return values, missing

    put("preceding_lines", agg.preceding_lines / n)
    put("preceding_chars", agg.preceding_chars / n)
    put("generated_lines", agg.generated_lines / n)
    put("generated_chars", agg.generated_chars / n)
    put("written_lines", agg.written_lines / n)
    put("written_chars", agg.written_chars / n)
    put("presented_time", agg.presented_time / n)
    put("accepted_time", agg.accepted_time / agg.n_accepted if agg.n_accepted else None)
    put("rejected_time", agg.rejected_time / agg.n_rejected if agg.n_rejected else None)
    put("accepted_length_ratio", agg.accepted_length_ratio / n)
    put("accepted_ratio", agg.n_accepted / n)
    put("accepted_counts", agg.n_accepted)
    put("IDE_version_counts", len(agg.versions))
    put("IDE_type_counts", len(agg.types))
    put("dominant_IDE_version", encoders.version.encode(_dominant_version(agg.versions)))
    put("dominant_IDE_type", encoders.ide_type.encode(_dominant_type(agg.types)))
    return values, missing


def developer_window_features(agg: WindowAggregate, oldest_ts: int | None, t: int,
                              encoders: CategoricalEncoders) -> tuple[dict[str, float], set[str]]:
    values, missing = _window_values("developer_", agg, oldest_ts, t, encoders)
    if agg.n == 0:
        values["developer_modified_chars"] = 0.0
        values["developer_modified_ratio"] = 0.0
        missing.update(("developer_modified_chars", "developer_modified_ratio",
                        "developer_generated_interval"))
        values["developer_generated_interval"] = 0.0
        values["developer_generated_counts"] = 0.0
    else:
        if agg.n_edit_pairs:
            values["developer_modified_chars"] = agg.edit_distance / agg.n_edit_pairs
            values["developer_modified_ratio"] = agg.n_edited / agg.n_edit_pairs
        else:
            values["developer_modified_chars"] = 0.0
            values["developer_modified_ratio"] = 0.0
            missing.update(("developer_modified_chars", "developer_modified_ratio"))
        # Gaps between consecutive window triggers plus the gap to the current
        # trigger telescope to (t - oldest) / n.
        values["developer_generated_interval"] = (t - oldest_ts) / agg.n
        values["developer_generated_counts"] = float(agg.n)
    return values, missing


def project_window_features(agg: WindowAggregate, oldest_ts: int | None, t: int,
                            encoders: CategoricalEncoders) -> tuple[dict[str, float], set[str]]:
    values, missing = _window_values("project_", agg, oldest_ts, t, encoders)
    if agg.context_lines > 0:
        values["project_comment_lines"] = 1000.0 * agg.comment_lines / agg.context_lines
    else:
        values["project_comment_lines"] = 0.0
        missing.add("project_comment_lines")
    return values, missing


def in_situ_features(log: InteractionLog,
                     encoders: CategoricalEncoders) -> tuple[dict[str, float], set[str]]:
    """Features of the single current event; no history involved."""
    values: dict[str, float] = {
        "in-situ_preceding_lines": float(log.preceding_lines),
        "in-situ_preceding_chars": float(log.preceding_chars),
        "in-situ_preceding_last_line_chars": float(log.preceding_last_line_chars),
        "in-situ_preceding_comment_chars": float(log.preceding_comment_chars),
        "in-situ_preceding_is_incomplete": 1.0 if log.preceding_is_incomplete else 0.0,
        "in-situ_generated_lines": float(log.generated_lines),
        "in-situ_generated_chars": float(log.generated_chars),
        "in-situ_generation_time": float(log.generation_time_ms),
        "in-situ_max_generated_line": float(log.max_generated_lines),
        "in-situ_max_generated_char": float(log.max_generated_chars),
        "in-situ_abs_lines_delta": float(abs(log.max_generated_lines - log.generated_lines)),
        "in-situ_abs_chars_delta": float(abs(log.max_generated_chars - log.generated_chars)),
        "in-situ_IDE_type": float(encoders.ide_type.encode(log.ide_type)),
        "in-situ_IDE_version": float(encoders.version.encode(log.ide_version)),
    }
    missing: set[str] = set()

    moment = datetime.fromtimestamp(log.trigger_timestamp / 1000.0, tz=timezone.utc)
    values["in-situ_is_workday"] = 1.0 if moment.weekday() < 5 else 0.0
    values["in-situ_time_period"] = float(moment.hour // 6)

    if log.preceding_text is not None and log.generated_text is not None:
        similarity, defined = cosine_similarity(log.generated_text, log.preceding_text)
        values["in-situ_generated_similarity"] = similarity
        if not defined:
            missing.add("in-situ_generated_similarity")
    else:
        values["in-situ_generated_similarity"] = 0.0
        missing.add("in-situ_generated_similarity")
    return values, missing


class WindowEngine:
    """Incremental featurizer over a time-ordered stream of events.

    ``features_for`` reads the current windows without registering the event;
    ``push`` registers it for future windows. Batch assembly and the live
    service both run on this class.
    """

    def __init__(self, encoders: CategoricalEncoders,
                 window_days: float = DEFAULT_WINDOW_DAYS,
                 comment_prefixes=DEFAULT_COMMENT_PREFIXES):
        self.encoders = encoders
        self.window_ms = int(window_days * MS_PER_DAY)
        self.comment_prefixes = comment_prefixes
        self._developers: dict[str, RollingWindow] = {}
        self._projects: dict[str, RollingWindow] = {}

    def _window(self, table: dict[str, RollingWindow], key: str) -> RollingWindow:
        window = table.get(key)
        if window is None:
            window = RollingWindow()
            table[key] = window
        return window

    def features_for(self, log: InteractionLog) -> tuple[dict[str, float], set[str]]:
        t = log.trigger_timestamp
        dev_agg, dev_oldest = self._window(self._developers, log.developer_id).snapshot(t, self.window_ms)
        proj_agg, proj_oldest = self._window(self._projects, log.project_id).snapshot(t, self.window_ms)

        values, missing = developer_window_features(dev_agg, dev_oldest, t, self.encoders)
        proj_values, proj_missing = project_window_features(proj_agg, proj_oldest, t, self.encoders)
        situ_values, situ_missing = in_situ_features(log, self.encoders)
        values.update(proj_values)
        values.update(situ_values)
        missing |= proj_missing | situ_missing
        return values, missing

    def push(self, log: InteractionLog) -> None:
        stats = event_stats(log, self.comment_prefixes)
        self._window(self._developers, log.developer_id).push(stats)
        self._window(self._projects, log.project_id).push(stats)
