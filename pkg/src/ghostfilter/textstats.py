"""Small text metrics used by feature extraction.

Tokenization splits on non-alphanumeric boundaries and is case-sensitive:
cheap, deterministic, and language-agnostic over code. Comment detection is a
line-prefix heuristic with configurable prefixes (no parsing).
"""

from __future__ import annotations

import math
import re
from collections import Counter

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+")

DEFAULT_COMMENT_PREFIXES = ("#", "//", "/*", "*", "--")


def levenshtein(a: str, b: str) -> int:
    """Minimum single-character insert/delete/substitute edits turning a into b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(
                previous[j] + 1,       # delete from a
                current[j - 1] + 1,    # insert into a
                previous[j - 1] + cost,
            ))
        previous = current
    return previous[-1]


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def cosine_similarity(a: str, b: str) -> tuple[float, bool]:
    """Cosine of the token-frequency vectors of two texts.

    Returns ``(value, defined)``; when either side has no tokens the cosine
    is undefined and reported as ``(0.0, False)``.
    """
    counts_a = Counter(tokenize(a))
    counts_b = Counter(tokenize(b))
    if not counts_a or not counts_b:
        return 0.0, False
    dot = sum(count * counts_b[token] for token, count in counts_a.items())
    norm_a = math.sqrt(sum(c * c for c in counts_a.values()))
    norm_b = math.sqrt(sum(c * c for c in counts_b.values()))
    return dot / (norm_a * norm_b), True


def count_comment_lines(text: str, prefixes: tuple[str, ...] = DEFAULT_COMMENT_PREFIXES) -> int:
    count = 0
    for line in text.splitlines():
        stripped = line.lstrip()
        if stripped and stripped.startswith(prefixes):
            count += 1
    return count


def count_lines(text: str) -> int:
    if not text:
        return 0
    return text.count("\n") + 1
