"""Segment-level correlation statistics and table arithmetic.

Pearson r, Spearman rho (Pearson over average ranks), and Kendall tau-b
with tie correction, plus the growth/aggregation/comparison arithmetic
used by the report tables. All functions are pure; degenerate inputs
raise explicit errors rather than returning 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .corpus import EvaluationSet, LanguagePair
    from .scoring import QualityScore


class StatsError(ValueError):
    pass


class DegenerateVariance(StatsError):
    pass


class ZeroBaseline(StatsError):
    pass


class EmptyList(StatsError):
    pass


@dataclass(frozen=True)
class PairedSample:
    """Paired (predicted, human) observations for one language pair."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise StatsError(f"length mismatch: {len(self.xs)} vs {len(self.ys)}")
        if len(self.xs) < 2:
            raise StatsError("need at least 2 paired observations")
        if not all(math.isfinite(v) for v in self.xs + self.ys):
            raise StatsError("sample contains non-finite values")

    @property
    def n(self) -> int:
        return len(self.xs)


def paired(xs: Iterable[float], ys: Iterable[float]) -> PairedSample:
    return PairedSample(tuple(xs), tuple(ys))


def average_ranks(xs: Sequence[float]) -> list[float]:
    """Fractional ranks, 1 = smallest; ties get the mean of the ranks they span."""
    if not xs:
        raise EmptyList("cannot rank an empty list")
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        # positions i..j (0-based) share the mean of ranks i+1..j+1
        mean_rank = (i + j + 2) / 2
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def pearson(s: PairedSample) -> float:
    mean_x = sum(s.xs) / s.n
    mean_y = sum(s.ys) / s.n
    dx = [x - mean_x for x in s.xs]
    dy = [y - mean_y for y in s.ys]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise DegenerateVariance("zero variance in at least one variable")
    cov = sum(a * b for a, b in zip(dx, dy))
    return max(-1.0, min(1.0, cov / math.sqrt(var_x * var_y)))


def spearman(s: PairedSample) -> float:
    """Pearson correlation over average ranks."""
    return pearson(paired(average_ranks(s.xs), average_ranks(s.ys)))


def kendall_tau_b(s: PairedSample) -> float:
    """Tau-b by exhaustive pair enumeration: (C - D) / sqrt((n0-n1)(n0-n2))."""
    concordant = 0
    discordant = 0
    ties_x = 0
    ties_y = 0
    n = s.n
    for i in range(n):
        for j in range(i + 1, n):
            dx = s.xs[i] - s.xs[j]
            dy = s.ys[i] - s.ys[j]
            if dx == 0 and dy == 0:
                ties_x += 1
                ties_y += 1
            elif dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    if ties_x == n0 or ties_y == n0:
        raise DegenerateVariance("all values tied in at least one variable")
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    return max(-1.0, min(1.0, (concordant - discordant) / denom))


@dataclass(frozen=True)
class CorrelationReport:
    """Per-pair correlation summary; absent statistics mark degenerate data."""

    lp: "LanguagePair"
    rho: float | None
    r: float | None
    tau: float | None
    n_used: int
    n_excluded: int

    @property
    def degenerate(self) -> bool:
        return self.rho is None or self.r is None or self.tau is None

    def to_record(self) -> dict:
        return {
            "lp": self.lp.file_key,
            "rho": self.rho,
            "r": self.r,
            "tau": self.tau,
            "n_used": self.n_used,
            "n_excluded": self.n_excluded,
        }


def correlate_sample(lp: "LanguagePair", xs: Sequence[float], ys: Sequence[float], n_excluded: int) -> CorrelationReport:
    if len(xs) < 2:
        return CorrelationReport(lp, None, None, None, len(xs), n_excluded)
    s = paired(xs, ys)

    def try_stat(fn):
        try:
            return fn(s)
        except DegenerateVariance:
            return None

    return CorrelationReport(
        lp=lp,
        rho=try_stat(spearman),
        r=try_stat(pearson),
        tau=try_stat(kendall_tau_b),
        n_used=s.n,
        n_excluded=n_excluded,
    )


def correlate_pair(
    scores: Iterable["QualityScore"], eval_set: "EvaluationSet", lp: "LanguagePair"
) -> CorrelationReport:
    """Join predicted scores to human scores by segment id within one pair.

    Invalid scores are excluded pairwise; n_used + n_excluded equals the
    pair's segment count. Fewer than 2 usable points yields a degenerate
    report rather than an error.
    """
    segments = {seg.id: seg for seg in eval_set.by_pair(lp)}
    xs: list[float] = []
    ys: list[float] = []
    n_excluded = 0
    matched: set[str] = set()
    for score in scores:
        seg = segments.get(score.segment_id)
        if seg is None:
            continue
        matched.add(score.segment_id)
        if score.valid and score.value is not None:
            xs.append(score.value)
            ys.append(seg.human_score)
        else:
            n_excluded += 1
    n_excluded += len(segments) - len(matched)  # segments with no score at all
    return correlate_sample(lp, xs, ys, n_excluded)


def round_half_away(value: float, ndigits: int = 0) -> float:
    """Round to ndigits with ties going away from zero (table convention)."""
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def growth_percent(ours: float, baseline: float) -> int:
    """Relative improvement over a baseline, as a signed integer percent."""
    if baseline == 0:
        raise ZeroBaseline("growth undefined for zero baseline")
    return int(round_half_away(100.0 * (ours - baseline) / baseline))


def format_growth(percent: int) -> str:
    return f"{percent:+d}%"


def mean(values: Sequence[float]) -> float:
    if not values:
        raise EmptyList("mean of empty list")
    return sum(values) / len(values)


def median(values: Sequence[float]) -> float:
    if not values:
        raise EmptyList("median of empty list")
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2


def aggregate(values: Sequence[float], stat: str, ndigits: int = 3) -> float:
    """Mean or median of a list, rounded for display (half away from zero)."""
    if not values:
        raise EmptyList("aggregate of empty list")
    if not all(math.isfinite(v) for v in values):
        raise StatsError("aggregate over non-finite values")
    if stat == "mean":
        raw = mean(values)
    elif stat == "median":
        raw = median(values)
    else:
        raise ValueError(f"unknown aggregation {stat!r}")
    return round_half_away(raw, ndigits)


@dataclass(frozen=True)
class ComparisonCell:
    """How one of our correlations compares against an external metric set."""

    ours: float
    exceeds_mean: bool
    exceeds_median: bool
    exceeds_best: bool


def compare_to_metric_set(ours: float, metrics: Sequence[float]) -> ComparisonCell:
    """Strict comparisons against the unrounded mean, median, and max."""
    if not metrics:
        raise EmptyList("no metric values to compare against")
    return ComparisonCell(
        ours=ours,
        exceeds_mean=ours > mean(metrics),
        exceeds_median=ours > median(metrics),
        exceeds_best=ours > max(metrics),
    )
