"""Canonical feature catalog: names, groups, and fixed ordering.

Every feature vector in a run uses exactly this ordering. Names follow the
``<scope>_<quantity>`` convention, with the single-event scope spelled
``in-situ``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum


class FeatureGroup(str, Enum):
    DEVELOPER_HABIT = "developer_habit"
    PROJECT_PREFERENCE = "project_preference"
    IN_SITU = "in_situ"


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    group: FeatureGroup
    subcategory: str
    definition: str


def _dev(name: str, sub: str, definition: str) -> FeatureEntry:
    return FeatureEntry(name, FeatureGroup.DEVELOPER_HABIT, sub, definition)


def _proj(name: str, sub: str, definition: str) -> FeatureEntry:
    return FeatureEntry(name, FeatureGroup.PROJECT_PREFERENCE, sub, definition)


def _situ(name: str, sub: str, definition: str) -> FeatureEntry:
    return FeatureEntry(name, FeatureGroup.IN_SITU, sub, definition)


ENTRIES: tuple[FeatureEntry, ...] = (
    # Developer habit: trailing-window aggregates over one developer's events.
    _dev("developer_preceding_lines", "code", "mean context line count in the developer window"),
    _dev("developer_preceding_chars", "code", "mean context character count in the developer window"),
    _dev("developer_generated_lines", "code", "mean suggestion line count in the developer window"),
    _dev("developer_generated_chars", "code", "mean suggestion character count in the developer window"),
    _dev("developer_modified_chars", "code", "mean edit distance between accepted suggestions and their final text"),
    _dev("developer_modified_ratio", "code", "share of accepted suggestions the developer afterwards edited"),
    _dev("developer_written_lines", "code", "mean hand-written line count between triggers"),
    _dev("developer_written_chars", "code", "mean hand-written character count between triggers"),
    _dev("developer_presented_time", "code", "mean generation latency over the developer window"),
    _dev("developer_accepted_time", "code", "mean generation latency of accepted suggestions"),
    _dev("developer_rejected_time", "code", "mean generation latency of rejected suggestions"),
    _dev("developer_generated_interval", "code", "mean gap between consecutive triggers, up to the current one"),
    _dev("developer_generated_counts", "code", "number of suggestions shown in the developer window"),
    _dev("developer_accepted_length_ratio", "acceptance_preference", "mean accepted-length fraction in the developer window"),
    _dev("developer_accepted_ratio", "acceptance_preference", "accepted share of the developer window"),
    _dev("developer_accepted_counts", "acceptance_preference", "number of accepted suggestions in the developer window"),
    _dev("developer_IDE_version_counts", "coding_environment", "distinct IDE versions in the developer window"),
    _dev("developer_IDE_type_counts", "coding_environment", "distinct IDE products in the developer window"),
    _dev("developer_dominant_IDE_version", "coding_environment", "most frequent IDE version in the developer window"),
    _dev("developer_dominant_IDE_type", "coding_environment", "most frequent IDE product in the developer window"),
    # Project preference: the same aggregates keyed by project.
    _proj("project_comment_lines", "code", "comment lines per 1000 context lines in the project window"),
    _proj("project_preceding_lines", "code", "mean context line count in the project window"),
    _proj("project_preceding_chars", "code", "mean context character count in the project window"),
    _proj("project_generated_lines", "code", "mean suggestion line count in the project window"),
    _proj("project_generated_chars", "code", "mean suggestion character count in the project window"),
    _proj("project_written_lines", "code", "mean hand-written line count in the project window"),
    _proj("project_written_chars", "code", "mean hand-written character count in the project window"),
    _proj("project_presented_time", "code", "mean generation latency over the project window"),
    _proj("project_accepted_time", "code", "mean generation latency of accepted suggestions in the project window"),
    _proj("project_rejected_time", "code", "mean generation latency of rejected suggestions in the project window"),
    _proj("project_accepted_length_ratio", "acceptance_preference", "mean accepted-length fraction in the project window"),
    _proj("project_accepted_ratio", "acceptance_preference", "accepted share of the project window"),
    _proj("project_accepted_counts", "acceptance_preference", "number of accepted suggestions in the project window"),
    _proj("project_IDE_version_counts", "coding_environment", "distinct IDE versions in the project window"),
    _proj("project_IDE_type_counts", "coding_environment", "distinct IDE products in the project window"),
    _proj("project_dominant_IDE_version", "coding_environment", "most frequent IDE version in the project window"),
    _proj("project_dominant_IDE_type", "coding_environment", "most frequent IDE product in the project window"),
    # In-situ: the single current event, no history.
    _situ("in-situ_preceding_lines", "preceding_context", "context line count of the current event"),
    _situ("in-situ_preceding_chars", "preceding_context", "context character count of the current event"),
    _situ("in-situ_preceding_last_line_chars", "preceding_context", "character count of the last context line"),
    _situ("in-situ_preceding_comment_chars", "preceding_context", "comment character count in the context"),
    _situ("in-situ_preceding_is_incomplete", "preceding_context", "1 when the context ends in an open code block"),
    _situ("in-situ_generated_lines", "generated_suggestion", "line count of the current suggestion"),
    _situ("in-situ_generated_chars", "generated_suggestion", "character count of the current suggestion"),
    _situ("in-situ_generated_similarity", "generated_suggestion", "token-cosine between suggestion and context"),
    _situ("in-situ_generation_time", "coding_environment", "generation latency of the current event"),
    _situ("in-situ_is_workday", "coding_environment", "1 when triggered Monday through Friday (UTC)"),
    _situ("in-situ_time_period", "coding_environment", "6-hour bucket index of the trigger time (0..3)"),
    _situ("in-situ_IDE_type", "coding_environment", "frequency rank of the current IDE product"),
    _situ("in-situ_IDE_version", "coding_environment", "ordinal rank of the current IDE version"),
    _situ("in-situ_max_generated_line", "coding_environment", "developer-set line cap for suggestions"),
    _situ("in-situ_max_generated_char", "coding_environment", "developer-set character cap for suggestions"),
    _situ("in-situ_abs_lines_delta", "coding_environment", "absolute gap between line cap and actual lines"),
    _situ("in-situ_abs_chars_delta", "coding_environment", "absolute gap between character cap and actual characters"),
)


@dataclass(frozen=True)
class FeatureCatalog:
    entries: tuple[FeatureEntry, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(names) != len(set(names)):
            raise ValueError("catalog feature names must be unique")

    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def group_of(self, name: str) -> FeatureGroup:
        for entry in self.entries:
            if entry.name == name:
                return entry.group
        raise KeyError(name)

    def names_in_group(self, group: FeatureGroup) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries if e.group == group)

    def __len__(self) -> int:
        return len(self.entries)


CATALOG = FeatureCatalog(ENTRIES)


def catalog_fingerprint(names) -> str:
    """Stable 16-hex-digit fingerprint of an ordered feature-name list."""
    digest = hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()
    return digest[:16]
