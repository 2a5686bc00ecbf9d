"""Markdown and CSV rendering for the two comparison tables.

Experiment 1: our correlations vs a direct-scoring baseline, with signed
growth percentages. Experiment 2: our correlations vs external
reference-free metric sets, with exceed flags and median/mean summary
rows. Rendering is a pure function of its inputs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .corpus import LanguagePair, MetricScoreSet, metric_values
from .stats import (
    ComparisonCell,
    ZeroBaseline,
    aggregate,
    compare_to_metric_set,
    format_growth,
    growth_percent,
    round_half_away,
)

EXP1_SERIES = ("ours", "baseline", "growth")


class ReportError(ValueError):
    pass


class InconsistentColumns(ReportError):
    pass


class MissingMetricValues(ReportError):
    pass


@dataclass(frozen=True)
class Experiment1Row:
    """One backend model's ours/baseline correlations, keyed by pair report key."""

    model_label: str
    # cells[report_key] = {"rho_ours": .., "r_ours": .., "rho_base": .., "r_base": ..}
    cells: dict[str, dict[str, float | None]] = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment2Row:
    """One of our systems' correlation values, keyed by (report key, stat)."""

    system_label: str
    values: dict[tuple[str, str], float | None] = field(default_factory=dict)


def _fmt(value: float | None, absent: str) -> str:
    if value is None:
        return absent
    return f"{round_half_away(value, 3):.3f}"


def _growth_cell(ours: float | None, base: float | None, absent: str) -> str:
    if ours is None or base is None:
        return absent
    try:
        return format_growth(growth_percent(ours, base))
    except ZeroBaseline:
        return absent


def _check_row_pairs(cells: dict, pair_keys: set[str], label: str) -> None:
    extra = set(cells) - pair_keys
    if extra:
        raise InconsistentColumns(f"row {label!r} has unknown pair column(s) {sorted(extra)}")


def render_experiment1(
    rows: list[Experiment1Row], pairs: list[LanguagePair], format: str = "markdown"
) -> str:
    """Ours/baseline/growth table over (pair x {rho, r}) columns."""
    pair_keys = [lp.report_key for lp in pairs]
    for row in rows:
        _check_row_pairs(row.cells, set(pair_keys), row.model_label)
    stat_cols = [(pk, stat) for pk in pair_keys for stat in ("rho", "r")]
    if format == "markdown":
        absent = "—"
        lines = [
            "| model | series | " + " | ".join(f"{pk} {stat}" for pk, stat in stat_cols) + " |",
            "| --- | --- |" + " --- |" * len(stat_cols),
        ]
        for row in rows:
            for series in EXP1_SERIES:
                cells = []
                for pk, stat in stat_cols:
                    cell = row.cells.get(pk, {})
                    if series == "growth":
                        cells.append(_growth_cell(cell.get(f"{stat}_ours"), cell.get(f"{stat}_base"), absent))
                    else:
                        suffix = "ours" if series == "ours" else "base"
                        cells.append(_fmt(cell.get(f"{stat}_{suffix}"), absent))
                lines.append(f"| {row.model_label} | {series} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", "series"] + [f"{pk}_{stat}" for pk, stat in stat_cols])
        for row in rows:
            for series in EXP1_SERIES:
                out = [row.model_label, series]
                for pk, stat in stat_cols:
                    cell = row.cells.get(pk, {})
                    if series == "growth":
                        out.append(_growth_cell(cell.get(f"{stat}_ours"), cell.get(f"{stat}_base"), ""))
                    else:
                        suffix = "ours" if series == "ours" else "base"
                        out.append(_fmt(cell.get(f"{stat}_{suffix}"), ""))
                writer.writerow(out)
        return buf.getvalue()
    raise ValueError(f"unknown format {format!r}")


def _metric_pool(
    metric_sets: list[MetricScoreSet], lp: LanguagePair, stat: str
) -> list[float]:
    pool = metric_values(metric_sets, lp, stat)
    if not pool:
        raise MissingMetricValues(f"no metric values for {lp.report_key}/{stat}")
    return pool


def compare_cell(
    ours: float, metric_sets: list[MetricScoreSet], lp: LanguagePair, stat: str
) -> ComparisonCell:
    return compare_to_metric_set(ours, _metric_pool(metric_sets, lp, stat))


def render_experiment2(
    ours_rows: list[Experiment2Row],
    metric_sets: list[MetricScoreSet],
    pairs: list[LanguagePair],
    stats: list[str] = ("rho", "r"),
    format: str = "markdown",
) -> str:
    """Ours-vs-external-metrics table with exceed flags and summary rows.

    Markdown bolds our cells that strictly exceed the metric-set mean;
    CSV carries explicit exceeds_mean/median/best flag columns instead.
    """
    not_noref = [ms.metric_name for ms in metric_sets if not ms.reference_free]
    if not_noref:
        raise ReportError(f"comparison requires reference-free metric sets, got {not_noref}")
    stats = list(stats)
    columns = [(lp, stat) for lp in pairs for stat in stats]
    pools = {(lp.report_key, stat): _metric_pool(metric_sets, lp, stat) for lp, stat in columns}

    if format == "markdown":
        absent = "—"
        header = [f"{lp.report_key} {stat}" for lp, stat in columns]
        lines = [
            "| system | " + " | ".join(header) + " |",
            "| --- |" + " --- |" * len(columns),
        ]
        for row in ours_rows:
            cells = []
            for lp, stat in columns:
                value = row.values.get((lp.report_key, stat))
                if value is None:
                    cells.append(absent)
                    continue
                flags = compare_to_metric_set(value, pools[(lp.report_key, stat)])
                text = _fmt(value, absent)
                cells.append(f"**{text}**" if flags.exceeds_mean else text)
            lines.append(f"| {row.system_label} | " + " | ".join(cells) + " |")
        for agg in ("median", "mean"):
            cells = [
                f"{aggregate(pools[(lp.report_key, stat)], agg):.3f}" for lp, stat in columns
            ]
            lines.append(f"| metrics {agg} | " + " | ".join(cells) + " |")
        for ms in metric_sets:
            cells = [_fmt(ms.get(lp, stat), absent) for lp, stat in columns]
            lines.append(f"| {ms.metric_name} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["system", "lp", "stat", "value", "exceeds_mean", "exceeds_median", "exceeds_best"]
        )
        for row in ours_rows:
            for lp, stat in columns:
                value = row.values.get((lp.report_key, stat))
                if value is None:
                    continue
                flags = compare_to_metric_set(value, pools[(lp.report_key, stat)])
                writer.writerow(
                    [
                        row.system_label,
                        lp.report_key,
                        stat,
                        _fmt(value, ""),
                        str(flags.exceeds_mean).lower(),
                        str(flags.exceeds_median).lower(),
                        str(flags.exceeds_best).lower(),
                    ]
                )
        for agg in ("median", "mean"):
            for lp, stat in columns:
                writer.writerow(
                    [
                        f"metrics {agg}",
                        lp.report_key,
                        stat,
                        f"{aggregate(pools[(lp.report_key, stat)], agg):.3f}",
                        "",
                        "",
                        "",
                    ]
                )
        for ms in metric_sets:
            for lp, stat in columns:
                value = ms.get(lp, stat)
                if value is None:
                    continue
                writer.writerow([ms.metric_name, lp.report_key, stat, _fmt(value, ""), "", "", ""])
        return buf.getvalue()
    raise ValueError(f"unknown format {format!r}")
