"""Categorical encodings fit on training data only.

IDE versions get an ordinal rank under numeric component-wise ordering (a
stand-in for the age of the underlying generation model). IDE product names
get a frequency rank. Both encoders map unseen values deterministically:
versions to their nearest known predecessor, products to a reserved rank one
past the maximum.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from ..logs import InteractionLog


class VersionParseError(ValueError):
    pass


def parse_version(version: str) -> tuple[int, ...]:
    parts = version.split(".")
    try:
        parsed = tuple(int(p) for p in parts)
    except ValueError:
        raise VersionParseError(f"unparseable version string: {version!r}") from None
    return parsed


@dataclass(frozen=True)
class VersionEncoder:
    """0-based ordinal rank over the training versions, numerically ordered."""

    versions: tuple[str, ...]  # in rank order

    @staticmethod
    def fit(versions: Iterable[str]) -> "VersionEncoder":
        unique = sorted(set(versions), key=parse_version)
        return VersionEncoder(versions=tuple(unique))

    @cached_property
    def _keys(self) -> list[tuple[int, ...]]:
        return [parse_version(v) for v in self.versions]

    @cached_property
    def _ranks(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.versions)}

    def encode(self, version: str) -> int:
        rank = self._ranks.get(version)
        if rank is not None:
            return rank
        # Unseen version: rank of the greatest known version not above it,
        # or 0 when it predates every known version.
        key = parse_version(version)
        return max(bisect_right(self._keys, key) - 1, 0)


@dataclass(frozen=True)
class TypeEncoder:
    """Frequency rank: most frequent category is 0; unseen maps to one past the max."""

    categories: tuple[str, ...]  # in rank order

    @staticmethod
    def fit(values: Iterable[str]) -> "TypeEncoder":
        counts = Counter(values)
        ordered = sorted(counts, key=lambda v: (-counts[v], v))
        return TypeEncoder(categories=tuple(ordered))

    @cached_property
    def _ranks(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.categories)}

    def encode(self, value: str) -> int:
        return self._ranks.get(value, len(self.categories))


@dataclass(frozen=True)
class CategoricalEncoders:
    version: VersionEncoder
    ide_type: TypeEncoder

    @staticmethod
    def fit(logs: Iterable[InteractionLog]) -> "CategoricalEncoders":
        logs = list(logs)
        return CategoricalEncoders(
            version=VersionEncoder.fit(log.ide_version for log in logs),
            ide_type=TypeEncoder.fit(log.ide_type for log in logs),
        )

    def to_dict(self) -> dict:
        return {
            "versions": list(self.version.versions),
            "ide_types": list(self.ide_type.categories),
        }

    @staticmethod
    def from_dict(data: dict) -> "CategoricalEncoders":
        return CategoricalEncoders(
            version=VersionEncoder(versions=tuple(data["versions"])),
            ide_type=TypeEncoder(categories=tuple(data["ide_types"])),
        )


def encode_ide_version(version: str, encoder: VersionEncoder) -> int:
    """Ordinal rank of a release string against a training-time version catalog."""
    return encoder.encode(version)
