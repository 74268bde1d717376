"""Interaction-log data model, JSON-lines parsing, and synthetic log generation.

One :class:`InteractionLog` describes a single developer/AI generation event:
the context the model saw, what it produced, the environment, and whether the
developer accepted the suggestion. Log files are JSON lines, one record per
line, field names matching the dataclass fields.

The synthetic generator produces desk-scale log streams with known planted
acceptance mechanisms (developer/project propensities, IDE-version drift, and
a trigger-interval effect) behind a logistic link, so downstream analysis can
be checked against a known ground truth.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Iterator

import numpy as np

MS_PER_DAY = 86_400_000


class LogParseError(ValueError):
    """A malformed or invariant-violating record, with line and field context."""

    def __init__(self, message: str, line_number: int | None = None, field_name: str | None = None):
        self.line_number = line_number
        self.field_name = field_name
        prefix = ""
        if line_number is not None:
            prefix += f"line {line_number}: "
        if field_name is not None:
            prefix += f"field '{field_name}': "
        super().__init__(prefix + message)


@dataclass(frozen=True, slots=True)
class InteractionLog:
    """One developer/AI generation event and its outcome."""

    event_id: str
    developer_id: str
    project_id: str
    trigger_timestamp: int  # milliseconds since epoch, UTC
    preceding_lines: int
    preceding_chars: int
    preceding_last_line_chars: int
    preceding_comment_chars: int
    preceding_is_incomplete: bool
    generated_lines: int
    generated_chars: int
    written_lines: int
    written_chars: int
    max_generated_lines: int
    max_generated_chars: int
    ide_type: str
    ide_version: str
    generation_time_ms: int
    accepted: bool
    accepted_length_ratio: float
    preceding_text: str | None = None
    generated_text: str | None = None
    modified_text: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in _COUNT_FIELDS:
            value = getattr(self, name)
            if value < 0:
                raise LogParseError(f"must be >= 0, got {value}", field_name=name)
        if not 0.0 <= self.accepted_length_ratio <= 1.0:
            raise LogParseError(
                f"must be in [0, 1], got {self.accepted_length_ratio}",
                field_name="accepted_length_ratio",
            )
        if not self.accepted:
            if self.accepted_length_ratio != 0.0:
                raise LogParseError(
                    "must be 0 when accepted is false",
                    field_name="accepted_length_ratio",
                )
            if self.modified_text is not None:
                raise LogParseError(
                    "must be absent when accepted is false",
                    field_name="modified_text",
                )
        if self.generated_chars >= 1 and self.generated_lines < 1:
            raise LogParseError(
                "generated_lines must be >= 1 when generated_chars >= 1",
                field_name="generated_lines",
            )

    def to_record(self) -> dict:
        """Canonical dict form: declaration field order, optional texts omitted when absent."""
        record = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            record[f.name] = value
        return record


_COUNT_FIELDS = (
    "trigger_timestamp",
    "preceding_lines",
    "preceding_chars",
    "preceding_last_line_chars",
    "preceding_comment_chars",
    "generated_lines",
    "generated_chars",
    "written_lines",
    "written_chars",
    "max_generated_lines",
    "max_generated_chars",
    "generation_time_ms",
)

_STRING_FIELDS = ("event_id", "developer_id", "project_id", "ide_type", "ide_version")
_BOOL_FIELDS = ("preceding_is_incomplete", "accepted")
_TEXT_FIELDS = ("preceding_text", "generated_text", "modified_text")
_ALL_FIELDS = frozenset(f.name for f in fields(InteractionLog))
_REQUIRED_FIELDS = _ALL_FIELDS - set(_TEXT_FIELDS)


def _coerce_record(record: dict, line_number: int) -> InteractionLog:
    if not isinstance(record, dict):
        raise LogParseError("record is not a JSON object", line_number=line_number)
    for name in record:
        if name not in _ALL_FIELDS:
            raise LogParseError("unknown field", line_number=line_number, field_name=name)
    for name in _REQUIRED_FIELDS:
        if name not in record:
            raise LogParseError("missing required field", line_number=line_number, field_name=name)

    kwargs: dict = {}
    for name in _STRING_FIELDS:
        value = record[name]
        if not isinstance(value, str) or not value:
            raise LogParseError("must be a non-empty string", line_number=line_number, field_name=name)
        kwargs[name] = value
    for name in _COUNT_FIELDS:
        value = record[name]
        if isinstance(value, bool) or not isinstance(value, int):
            raise LogParseError("must be an integer", line_number=line_number, field_name=name)
        kwargs[name] = value
    for name in _BOOL_FIELDS:
        value = record[name]
        if not isinstance(value, bool):
            raise LogParseError("must be a boolean", line_number=line_number, field_name=name)
        kwargs[name] = value
    ratio = record["accepted_length_ratio"]
    if isinstance(ratio, bool) or not isinstance(ratio, (int, float)):
        raise LogParseError("must be a number", line_number=line_number, field_name="accepted_length_ratio")
    kwargs["accepted_length_ratio"] = float(ratio)
    for name in _TEXT_FIELDS:
        if name in record:
            value = record[name]
            if not isinstance(value, str):
                raise LogParseError("must be a string", line_number=line_number, field_name=name)
            kwargs[name] = value

    try:
        return InteractionLog(**kwargs)
    except LogParseError as exc:
        raise LogParseError(str(exc), line_number=line_number) from exc


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        yield from source.splitlines()
        return
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        for raw in source:
            yield raw.decode("utf-8") if isinstance(raw, bytes) else raw
        return
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, bytes) else raw


def parse_logs(source) -> list[InteractionLog]:
    """Parse line-delimited JSON records into validated logs, in file order.

    ``source`` may be a path-less byte/str payload, an open file, or any
    iterable of lines. Raises :class:`LogParseError` naming the offending
    line and field on the first malformed record.
    """
    logs = []
    for line_number, line in enumerate(_iter_lines(source), start=1):
        stripped = line.strip()
        if not stripped:
            raise LogParseError("blank line is not a record", line_number=line_number)
        try:
            record = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise LogParseError(f"invalid JSON ({exc.msg})", line_number=line_number) from exc
        logs.append(_coerce_record(record, line_number))
    return logs


def read_logs(path) -> list[InteractionLog]:
    with open(path, "rb") as handle:
        return parse_logs(handle)


def serialize_log(log: InteractionLog) -> str:
    return json.dumps(log.to_record(), ensure_ascii=False)


def write_logs(logs: Iterable[InteractionLog], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for log in logs:
            handle.write(serialize_log(log))
            handle.write("\n")


# ---------------------------------------------------------------------------
# Synthetic stream generation


@dataclass(frozen=True)
class PlantedEffects:
    """Strength coefficients for the planted acceptance mechanisms.

    All coefficients act on the log-odds of acceptance:

    * ``developer_spread`` / ``project_spread`` — standard deviation of latent
      per-developer / per-project propensity offsets (higher past-acceptance
      developers/projects keep accepting: history features read "Greater").
    * ``version_drift`` — penalty per unit of normalized IDE-version rank, so
      newer versions are accepted less (version features read "Less").
    * ``interval_slope`` — gain per unit of standardized log trigger interval,
      so suggestions after longer pauses are accepted more ("Greater").
    """

    developer_spread: float = 0.0
    project_spread: float = 0.0
    version_drift: float = 0.0
    interval_slope: float = 0.0

    def as_dict(self) -> dict:
        return {
            "developer_spread": self.developer_spread,
            "project_spread": self.project_spread,
            "version_drift": self.version_drift,
            "interval_slope": self.interval_slope,
        }


@dataclass(frozen=True)
class SyntheticConfig:
    developer_count: int = 20
    project_count: int = 5
    event_count: int = 10_000
    start_instant: int = 1_735_689_600_000  # 2025-01-01T00:00:00Z
    duration_days: float = 30.0
    seed: int = 0
    planted_effects: PlantedEffects = field(default_factory=PlantedEffects)
    base_accept_rate: float = 0.3
    include_texts: bool = True

    def validate(self) -> None:
        if self.event_count <= 0:
            raise ValueError("event_count must be > 0")
        if not 0.0 < self.base_accept_rate < 1.0:
            raise ValueError("base_accept_rate must be in (0, 1)")
        if self.developer_count < 1 or self.project_count < 1:
            raise ValueError("developer_count and project_count must be >= 1")
        if self.duration_days <= 0:
            raise ValueError("duration_days must be > 0")

    def as_dict(self) -> dict:
        data = {
            "developer_count": self.developer_count,
            "project_count": self.project_count,
            "event_count": self.event_count,
            "start_instant": self.start_instant,
            "duration_days": self.duration_days,
            "seed": self.seed,
            "planted_effects": self.planted_effects.as_dict(),
            "base_accept_rate": self.base_accept_rate,
            "include_texts": self.include_texts,
        }
        return data

    @staticmethod
    def from_dict(data: dict) -> "SyntheticConfig":
        data = dict(data)
        effects = data.pop("planted_effects", {})
        if isinstance(effects, dict):
            effects = PlantedEffects(**effects)
        return SyntheticConfig(planted_effects=effects, **data)


@dataclass(frozen=True)
class SyntheticTruth:
    """The generator's own view of the stream: exact per-event accept probabilities."""

    true_probability: np.ndarray  # aligned with the generated log sequence
    developer_offsets: np.ndarray
    project_offsets: np.ndarray
    version_index: np.ndarray  # per-event index into the release sequence


_IDE_TYPES = ("vscode", "jetbrains", "neovim")
_IDE_VERSIONS = (
    "1.0.0", "1.1.0", "1.2.0", "1.3.0", "1.4.0", "1.5.0",
    "1.6.0", "1.7.0", "1.8.0", "1.9.0", "1.10.0", "2.0.0",
)

_WORDS = (
    "result", "buffer", "index", "count", "total", "node", "value", "items",
    "cache", "token", "parse", "build", "fetch", "merge", "score", "queue",
)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _make_text(rng: np.random.Generator, n_lines: int, comment_rate: float,
               incomplete: bool) -> tuple[str, int]:
    """Build a small code-shaped text; returns (text, comment_char_count)."""
    lines = []
    comment_chars = 0
    for _ in range(max(1, n_lines)):
        a, b = rng.integers(0, len(_WORDS), size=2)
        if rng.random() < comment_rate:
            line = f"# {_WORDS[a]} {_WORDS[b]} note"
            comment_chars += len(line)
        else:
            line = f"{_WORDS[a]}_{int(rng.integers(0, 100))} = {_WORDS[b]}({_WORDS[a]})"
        lines.append(line)
    lines.append("if pending:" if incomplete else "done = True")
    return "\n".join(lines), comment_chars


def generate_with_truth(config: SyntheticConfig) -> tuple[list[InteractionLog], SyntheticTruth]:
    """Generate a time-sorted synthetic stream plus its exact probability trace.

    Acceptance is sampled from a logistic model over the planted mechanisms;
    identical config (including seed) yields an identical stream.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    effects = config.planted_effects
    n = config.event_count
    duration_ms = int(config.duration_days * MS_PER_DAY)

    timestamps = np.sort(rng.integers(0, duration_ms, size=n)) + config.start_instant
    developers = rng.integers(0, config.developer_count, size=n)
    dev_offsets = rng.normal(0.0, 1.0, size=config.developer_count) * effects.developer_spread
    proj_offsets = rng.normal(0.0, 1.0, size=config.project_count) * effects.project_spread
    dev_project = np.arange(config.developer_count) % config.project_count
    dev_dominant_type = rng.integers(0, len(_IDE_TYPES), size=config.developer_count)
    dev_max_lines = rng.choice([5, 10, 20], size=config.developer_count)
    proj_comment_rate = rng.uniform(0.05, 0.35, size=config.project_count)

    # IDE releases spread evenly over the stream. Each developer sits a
    # persistent number of versions behind the newest release (upgrade
    # laggards), plus per-event jitter, so version variance survives at
    # every point in time rather than only across the whole stream.
    n_versions = len(_IDE_VERSIONS)
    release_points = config.start_instant + (np.arange(n_versions) * duration_ms) // n_versions
    released = np.searchsorted(release_points, timestamps, side="right") - 1
    dev_version_lag = rng.integers(0, 9, size=config.developer_count)
    lag = dev_version_lag[developers] + rng.geometric(0.7, size=n) - 1
    version_idx = np.maximum(released - lag, 0)
    version_rank = version_idx / max(n_versions - 1, 1)

    preceding_nlines = 1 + rng.poisson(8.0, size=n)
    generated_nlines = 1 + rng.poisson(2.0, size=n)
    written_lines = rng.poisson(5.0, size=n)
    written_char_mult = rng.integers(8, 30, size=n)
    gen_time = (rng.lognormal(math.log(300.0), 0.5, size=n) + 5.0 * generated_nlines).astype(int)
    type_switch = rng.random(size=n)
    type_alt = rng.integers(0, len(_IDE_TYPES), size=n)
    incomplete = rng.random(size=n) < 0.3
    accept_draw = rng.random(size=n)
    ratio_full = rng.random(size=n)
    ratio_partial = rng.uniform(0.3, 1.0, size=n)
    modified_draw = rng.random(size=n)

    base_logit = math.log(config.base_accept_rate / (1.0 - config.base_accept_rate))
    expected_gap = duration_ms * config.developer_count / n
    log_expected_gap = math.log1p(expected_gap)

    logs: list[InteractionLog] = []
    true_p = np.empty(n)
    last_seen: dict[int, int] = {}
    for i in range(n):
        dev = int(developers[i])
        proj = int(dev_project[dev])
        ts = int(timestamps[i])

        prev = last_seen.get(dev)
        if prev is None:
            interval_z = 0.0
        else:
            interval_z = (math.log1p(ts - prev) - log_expected_gap) / 1.5
            interval_z = max(-3.0, min(3.0, interval_z))
        last_seen[dev] = ts

        logit = (
            base_logit
            + dev_offsets[dev]
            + proj_offsets[proj]
            - effects.version_drift * version_rank[i]
            + effects.interval_slope * interval_z
        )
        p = _sigmoid(logit)
        true_p[i] = p
        accepted = bool(accept_draw[i] < p)

        if config.include_texts:
            preceding_text, comment_chars = _make_text(
                rng, int(preceding_nlines[i]) - 1, float(proj_comment_rate[proj]), bool(incomplete[i])
            )
            gen_text, _ = _make_text(rng, int(generated_nlines[i]) - 1, 0.05, False)
            p_lines = preceding_text.count("\n") + 1
            p_chars = len(preceding_text)
            last_line_chars = len(preceding_text.rsplit("\n", 1)[-1])
            g_lines = gen_text.count("\n") + 1
            g_chars = len(gen_text)
        else:
            preceding_text = None
            gen_text = None
            comment_chars = int(preceding_nlines[i])  # rough stand-in when text is scrubbed
            p_lines = int(preceding_nlines[i])
            p_chars = int(preceding_nlines[i]) * 24
            last_line_chars = 12
            g_lines = int(generated_nlines[i])
            g_chars = int(generated_nlines[i]) * 24

        if accepted:
            ratio = 1.0 if ratio_full[i] < 0.7 else round(float(ratio_partial[i]), 6)
            if gen_text is not None and modified_draw[i] < 0.3:
                modified_text = gen_text + "\n# reviewed"
            else:
                modified_text = None
        else:
            ratio = 0.0
            modified_text = None

        ide_type = _IDE_TYPES[int(dev_dominant_type[dev]) if type_switch[i] < 0.9 else int(type_alt[i])]
        max_lines = int(dev_max_lines[dev])

        logs.append(InteractionLog(
            event_id=f"evt{i:08d}",
            developer_id=f"dev{dev:03d}",
            project_id=f"proj{proj:02d}",
            trigger_timestamp=ts,
            preceding_lines=p_lines,
            preceding_chars=p_chars,
            preceding_last_line_chars=last_line_chars,
            preceding_comment_chars=comment_chars,
            preceding_is_incomplete=bool(incomplete[i]),
            generated_lines=g_lines,
            generated_chars=g_chars,
            written_lines=int(written_lines[i]),
            written_chars=int(written_lines[i] * written_char_mult[i]),
            max_generated_lines=max_lines,
            max_generated_chars=max_lines * 40,
            ide_type=ide_type,
            ide_version=_IDE_VERSIONS[int(version_idx[i])],
            generation_time_ms=int(gen_time[i]),
            accepted=accepted,
            accepted_length_ratio=ratio,
            preceding_text=preceding_text,
            generated_text=gen_text,
            modified_text=modified_text,
        ))

    truth = SyntheticTruth(
        true_probability=true_p,
        developer_offsets=dev_offsets,
        project_offsets=proj_offsets,
        version_index=version_idx,
    )
    return logs, truth


def generate_synthetic(config: SyntheticConfig) -> list[InteractionLog]:
    logs, _ = generate_with_truth(config)
    return logs


def synthetic_manifest(config: SyntheticConfig, logs: list[InteractionLog] | None = None) -> dict:
    """Manifest documenting the config and the direction each mechanism plants."""
    effects = config.planted_effects
    directions = {}
    if effects.developer_spread != 0.0:
        directions["developer_accepted_ratio"] = "Greater"
        directions["developer_accepted_counts"] = "Greater"
    if effects.project_spread != 0.0:
        directions["project_accepted_ratio"] = "Greater"
        directions["project_accepted_counts"] = "Greater"
    if effects.version_drift != 0.0:
        directions["in-situ_IDE_version"] = "Less"
    if effects.interval_slope != 0.0:
        directions["developer_generated_interval"] = "Greater"
    manifest = {
        "config": config.as_dict(),
        "seed": config.seed,
        "planted_effects": effects.as_dict(),
        "planted_directions": directions,
    }
    if logs is not None:
        accepted = sum(1 for log in logs if log.accepted)
        manifest["generated"] = {
            "event_count": len(logs),
            "accepted_count": accepted,
            "accept_rate": accepted / len(logs) if logs else 0.0,
        }
    return manifest
