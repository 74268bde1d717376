"""Nonparametric statistics for the accepted-vs-rejected feature analysis.

Implements the Mann-Whitney U test (exact permutation distribution for small
samples, tie-corrected normal approximation otherwise), Cliff's delta effect
size, Holm step-down adjustment for multiple comparisons, Spearman rank
correlation, and the two derived reports: per-feature significance and the
correlation-pruned feature set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features.matrix import FeatureMatrix
from .tables import format_table

ALPHA = 0.05
DELTA_THRESHOLD = 0.147  # |d| above this counts as a practical difference
RHO_THRESHOLD = 0.8
EXACT_LIMIT = 400  # exact U distribution while n*m <= this


def rankdata(values) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    new_group = np.r_[True, sorted_a[1:] != sorted_a[:-1]]
    group_ids = np.cumsum(new_group) - 1
    counts = np.bincount(group_ids)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    avg_rank = (starts + ends) / 2.0
    ranks = np.empty(len(a))
    ranks[order] = avg_rank[group_ids]
    return ranks


def _exact_two_sided_p(double_ranks: np.ndarray, n: int, u2_observed: int) -> float:
    """Exact permutation p over all n-subsets of the pooled (doubled) ranks.

    Subset-sum counting keeps this polynomial, so it covers sample sizes far
    beyond what direct enumeration could. Counts fit int64 comfortably for
    the n*m <= 400 regime this backs.
    """
    total_sum = int(double_ranks.sum())
    dp = np.zeros((n + 1, total_sum + 1), dtype=np.int64)
    dp[0, 0] = 1
    for r in double_ranks:
        r = int(r)
        for k in range(n, 0, -1):
            dp[k, r:] += dp[k - 1, : total_sum + 1 - r]
    distribution = dp[n]
    total = int(distribution.sum())
    # Doubled rank-sum s maps to doubled U statistic s - n(n+1).
    offsets = np.arange(total_sum + 1) - n * (n + 1)
    count_le = int(distribution[offsets <= u2_observed].sum())
    count_ge = int(distribution[offsets >= u2_observed].sum())
    return min(1.0, 2.0 * min(count_le, count_ge) / total)


def mann_whitney_u(sample_a, sample_b) -> tuple[float, float]:
    """U statistic for sample_a (pairs where a exceeds b, ties half) and two-sided p.

    Exact permutation p while ``len(a)*len(b) <= 400``; otherwise the normal
    approximation with tie and continuity corrections.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    rank_sum_a = ranks[:n].sum()
    u = rank_sum_a - n * (n + 1) / 2.0

    if n * m <= EXACT_LIMIT:
        double_ranks = np.rint(2.0 * ranks).astype(np.int64)
        u2 = int(round(2.0 * rank_sum_a)) - n * (n + 1)
        return u, _exact_two_sided_p(double_ranks, n, u2)

    big_n = n + m
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts.astype(float) ** 3 - tie_counts).sum())
    sigma2 = n * m / 12.0 * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
    if sigma2 <= 0:
        return u, 1.0  # every pooled value identical
    numerator = max(abs(u - n * m / 2.0) - 0.5, 0.0)
    z = numerator / math.sqrt(sigma2)
    return u, min(1.0, math.erfc(z / math.sqrt(2.0)))


def cliffs_delta(sample_a, sample_b) -> float:
    """Net share of cross-sample pairs where a exceeds b, in [-1, 1]."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("both samples must be non-empty")
    b_sorted = np.sort(b)
    greater = int(np.searchsorted(b_sorted, a, side="left").sum())
    less = int((m - np.searchsorted(b_sorted, a, side="right")).sum())
    return (greater - less) / (n * m)


def adjust_p_values(p_values: Sequence[float]) -> list[float]:
    """Holm step-down adjustment; preserves input order, never lowers a p."""
    p = list(p_values)
    for value in p:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"p-value out of range: {value}")
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    adjusted = [0.0] * m
    running = 0.0
    for position, idx in enumerate(order):
        running = max(running, min((m - position) * p[idx], 1.0))
        adjusted[idx] = running
    return adjusted


# --- Student-t tail via the regularized incomplete beta ---------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 200):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            break
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return _betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def spearman_rho(x, y) -> tuple[float, float]:
    """Spearman rank correlation and its two-sided t-approximation p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 paired observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("constant sequence has no rank correlation")
    rx = rankdata(x)
    ry = rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float((rx * ry).sum() / math.sqrt((rx * rx).sum() * (ry * ry).sum()))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, student_t_two_sided_p(abs(t), n - 2)


# --- Reports -----------------------------------------------------------------

@dataclass(frozen=True)
class SignificanceEntry:
    feature: str
    u_statistic: float
    p_value: float
    p_adjusted: float
    cliffs_delta: float
    direction: str  # Greater | Less | None
    statistically_significant: bool
    practically_significant: bool
    significant: bool

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "u_statistic": self.u_statistic,
            "p_value": self.p_value,
            "p_adjusted": self.p_adjusted,
            "cliffs_delta": self.cliffs_delta,
            "direction": self.direction,
            "statistically_significant": self.statistically_significant,
            "practically_significant": self.practically_significant,
            "significant": self.significant,
        }


def significance_pipeline(matrix: FeatureMatrix, alpha: float = ALPHA,
                          delta_threshold: float = DELTA_THRESHOLD) -> list[SignificanceEntry]:
    """Per-feature accepted-vs-rejected test battery.

    Splits each feature by label (missing values excluded pairwise), runs the
    U test, Holm-adjusts across all tested features, computes Cliff's delta,
    and applies both significance gates.
    """
    labels = matrix.labels
    if labels.all() or not labels.any():
        raise ValueError("matrix must contain both accepted and rejected events")

    tested: list[tuple[str, float, float, float]] = []  # (name, u, p, d)
    degenerate: list[str] = []
    for name in matrix.feature_names:
        column, present = matrix.column(name)
        a = column[labels & present]
        b = column[~labels & present]
        if len(a) == 0 or len(b) == 0:
            degenerate.append(name)  # nothing to compare after missing-mask exclusion
            continue
        u, p = mann_whitney_u(a, b)
        d = cliffs_delta(a, b)
        tested.append((name, u, p, d))

    adjusted = adjust_p_values([p for _, _, p, _ in tested])
    results: dict[str, SignificanceEntry] = {}
    for (name, u, p, d), p_adj in zip(tested, adjusted):
        stat_sig = p_adj < alpha
        pract_sig = abs(d) > delta_threshold
        sig = stat_sig and pract_sig
        direction = "None"
        if sig:
            direction = "Greater" if d > 0 else "Less"
        results[name] = SignificanceEntry(
            feature=name, u_statistic=u, p_value=p, p_adjusted=p_adj,
            cliffs_delta=d, direction=direction,
            statistically_significant=stat_sig, practically_significant=pract_sig,
            significant=sig,
        )
    for name in degenerate:
        results[name] = SignificanceEntry(
            feature=name, u_statistic=0.0, p_value=1.0, p_adjusted=1.0,
            cliffs_delta=0.0, direction="None",
            statistically_significant=False, practically_significant=False,
            significant=False,
        )
    return [results[name] for name in matrix.feature_names]


@dataclass(frozen=True)
class CorrelationReport:
    pairs: tuple[tuple[str, str, float], ...]  # strongly correlated pairs
    clusters: tuple[tuple[str, ...], ...]
    retained: tuple[str, ...]
    dropped: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "pairs": [{"feature_a": a, "feature_b": b, "rho": r} for a, b, r in self.pairs],
            "clusters": [list(c) for c in self.clusters],
            "retained": list(self.retained),
            "dropped": list(self.dropped),
        }


def correlation_prune(matrix: FeatureMatrix, significant: Sequence[str],
                      rho_threshold: float = RHO_THRESHOLD,
                      p_threshold: float = ALPHA) -> CorrelationReport:
    """Collapse clusters of strongly rank-correlated features to one member.

    Clusters are the transitive closure of pairs with |rho| above the
    threshold at p below 0.05; each cluster keeps its member with the largest
    |Cliff's delta| (ties to the lexicographically smallest name).
    """
    names = [n for n in significant]
    labels = matrix.labels
    columns = {}
    for name in names:
        column, present = matrix.column(name)
        columns[name] = (column, present)

    pairs = []
    adjacency: dict[str, set[str]] = {n: set() for n in names}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            col_a, pres_a = columns[a]
            col_b, pres_b = columns[b]
            both = pres_a & pres_b
            if both.sum() < 3:
                continue
            xa, xb = col_a[both], col_b[both]
            if np.all(xa == xa[0]) or np.all(xb == xb[0]):
                continue
            rho, p = spearman_rho(xa, xb)
            if abs(rho) > rho_threshold and p < p_threshold:
                pairs.append((a, b, rho))
                adjacency[a].add(b)
                adjacency[b].add(a)

    clusters = []
    seen: set[str] = set()
    for name in names:
        if name in seen or not adjacency[name]:
            continue
        stack, members = [name], []
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            members.append(node)
            stack.extend(adjacency[node] - seen)
        clusters.append(tuple(sorted(members)))

    def delta_magnitude(name: str) -> float:
        column, present = columns[name]
        a = column[labels & present]
        b = column[~labels & present]
        if len(a) == 0 or len(b) == 0:
            return 0.0
        return abs(cliffs_delta(a, b))

    dropped: list[str] = []
    for cluster in clusters:
        representative = min(cluster, key=lambda n: (-delta_magnitude(n), n))
        dropped.extend(n for n in cluster if n != representative)
    dropped_set = set(dropped)
    retained = tuple(n for n in names if n not in dropped_set)
    return CorrelationReport(
        pairs=tuple(pairs),
        clusters=tuple(clusters),
        retained=retained,
        dropped=tuple(n for n in names if n in dropped_set),
    )


def spearman_matrix(matrix: FeatureMatrix, names: Sequence[str]) -> np.ndarray:
    """Pairwise Spearman rho over overlapping present rows; NaN when undefined."""
    k = len(names)
    out = np.full((k, k), np.nan)
    columns = [matrix.column(n) for n in names]
    for i in range(k):
        out[i, i] = 1.0
        for j in range(i + 1, k):
            col_a, pres_a = columns[i]
            col_b, pres_b = columns[j]
            both = pres_a & pres_b
            if both.sum() < 3:
                continue
            xa, xb = col_a[both], col_b[both]
            if np.all(xa == xa[0]) or np.all(xb == xb[0]):
                continue
            rho, _ = spearman_rho(xa, xb)
            out[i, j] = out[j, i] = rho
    return out


def render_significance_table(entries: Sequence[SignificanceEntry]) -> str:
    rows = []
    for e in sorted(entries, key=lambda e: (not e.significant, e.feature)):
        rows.append([
            "Significant" if e.significant else "Insignificant",
            e.feature,
            f"{e.u_statistic:.1f}",
            f"{e.p_value:.3g}",
            f"{e.p_adjusted:.3g}",
            f"{e.cliffs_delta:+.3f}",
            e.direction,
        ])
    return format_table(
        ["Significance", "Feature", "U", "p", "p(adj)", "Cliff d", "Accepted vs Rejected"],
        rows,
        title="Feature significance (accepted vs rejected)",
    )


def render_correlation_report(report: CorrelationReport) -> str:
    lines = []
    rows = [[a, b, f"{r:+.3f}"] for a, b, r in report.pairs]
    lines.append(format_table(["Feature A", "Feature B", "rho"], rows,
                              title="Strongly correlated pairs (|rho| > threshold, p < 0.05)"))
    for i, cluster in enumerate(report.clusters, start=1):
        lines.append(f"cluster {i}: {', '.join(cluster)}")
    lines.append("")
    lines.append("retained: " + (", ".join(report.retained) or "(none)"))
    lines.append("dropped:  " + (", ".join(report.dropped) or "(none)"))
    return "\n".join(lines) + "\n"
