"""Data model for evaluation sets and external metric scores, plus disk loaders.

Evaluation sets arrive as JSONL (one object per line) or TSV (header row,
fixed column order). External metric correlations arrive as a CSV with
header ``metric,ref_mode,lp,stat,value``. Loaded values are immutable and
safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

_LANG_CODE_RE = re.compile(r"^[a-z]{2,3}$")

TSV_COLUMNS = ("id", "lp", "src", "mt", "human_score", "system")

VALID_STATS = ("rho", "r", "tau")


class CorpusError(ValueError):
    """Base class for dataset/metric-file validation errors."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MalformedLine(CorpusError):
    pass


class MissingField(CorpusError):
    pass


class EmptyText(CorpusError):
    pass


class NonFiniteScore(CorpusError):
    pass


class DuplicateId(CorpusError):
    pass


class UnknownStatistic(CorpusError):
    pass


class ValueOutOfRange(CorpusError):
    pass


class DuplicateCell(CorpusError):
    pass


@dataclass(frozen=True, order=True)
class LanguagePair:
    """A source->target language combination, e.g. ne->en."""

    source_lang: str
    target_lang: str

    def __post_init__(self):
        for code in (self.source_lang, self.target_lang):
            if not _LANG_CODE_RE.match(code):
                raise ValueError(f"bad language code {code!r}: want 2-3 lowercase ASCII letters")

    @classmethod
    def parse(cls, text: str) -> "LanguagePair":
        parts = text.strip().lower().split("-")
        if len(parts) != 2:
            raise ValueError(f"bad language pair {text!r}: want 'src-tgt'")
        return cls(parts[0], parts[1])

    @property
    def file_key(self) -> str:
        """Lowercase rendering used in data files, e.g. 'ne-en'."""
        return f"{self.source_lang}-{self.target_lang}"

    @property
    def report_key(self) -> str:
        """Uppercase rendering used in reports, e.g. 'NE-EN'."""
        return self.file_key.upper()

    def __str__(self) -> str:
        return self.file_key


@dataclass(frozen=True)
class Segment:
    """One evaluation unit: source text, MT output, human judgment."""

    id: str
    lp: LanguagePair
    src: str
    mt: str
    human_score: float
    system: str | None = None

    def __post_init__(self):
        if not self.src.strip():
            raise EmptyText(f"segment {self.id!r}: empty src")
        if not self.mt.strip():
            raise EmptyText(f"segment {self.id!r}: empty mt")
        if not math.isfinite(self.human_score):
            raise NonFiniteScore(f"segment {self.id!r}: non-finite human_score")


@dataclass(frozen=True)
class EvaluationSet:
    """An ordered, id-unique collection of segments."""

    name: str
    segments: tuple[Segment, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for seg in self.segments:
            if seg.id in seen:
                raise DuplicateId(f"duplicate segment id {seg.id!r}")
            seen.add(seg.id)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def language_pairs(self) -> list[LanguagePair]:
        """Distinct pairs in first-appearance order."""
        out: list[LanguagePair] = []
        for seg in self.segments:
            if seg.lp not in out:
                out.append(seg.lp)
        return out

    def by_pair(self, lp: LanguagePair) -> list[Segment]:
        return [seg for seg in self.segments if seg.lp == lp]

    def by_id(self) -> dict[str, Segment]:
        return {seg.id: seg for seg in self.segments}


@dataclass(frozen=True)
class MetricScoreSet:
    """Per-pair correlation values published for one external metric."""

    metric_name: str
    reference_free: bool
    values: dict[tuple[LanguagePair, str], float] = field(default_factory=dict)

    def __post_init__(self):
        for (lp, stat), value in self.values.items():
            if stat not in VALID_STATS:
                raise UnknownStatistic(f"{self.metric_name}: unknown statistic {stat!r}")
            if abs(value) > 1:
                raise ValueOutOfRange(f"{self.metric_name} {lp}/{stat}: |{value}| > 1")

    def get(self, lp: LanguagePair, stat: str) -> float | None:
        return self.values.get((lp, stat))


def _segment_from_record(record: dict, line: int) -> Segment:
    for name in ("id", "lp", "src", "mt", "human_score"):
        if name not in record or record[name] is None:
            raise MissingField(f"missing field {name!r}", line)
    try:
        lp = LanguagePair.parse(str(record["lp"]))
    except ValueError as exc:
        raise MalformedLine(str(exc), line) from exc
    try:
        score = float(record["human_score"])
    except (TypeError, ValueError) as exc:
        raise MalformedLine(f"bad human_score {record['human_score']!r}", line) from exc
    system = record.get("system")
    try:
        return Segment(
            id=str(record["id"]),
            lp=lp,
            src=str(record["src"]),
            mt=str(record["mt"]),
            human_score=score,
            system=str(system) if system is not None else None,
        )
    except CorpusError as exc:
        raise type(exc)(str(exc), line) from exc


def _load_jsonl_segments(path: Path) -> list[Segment]:
    segments = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedLine(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(record, dict):
                raise MalformedLine("expected a JSON object", lineno)
            segments.append(_segment_from_record(record, lineno))
    return segments


def _load_tsv_segments(path: Path) -> list[Segment]:
    segments = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            return []
        if tuple(header) not in (TSV_COLUMNS, TSV_COLUMNS[:-1]):
            raise MalformedLine(f"bad TSV header {header!r}, want {list(TSV_COLUMNS)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) not in (5, 6):
                raise MalformedLine(f"expected 5 or 6 columns, got {len(row)}", lineno)
            record = dict(zip(TSV_COLUMNS, row))
            if record.get("system") == "":
                record["system"] = None
            segments.append(_segment_from_record(record, lineno))
    return segments


def load_evaluation_set(path: str | Path, format: str = "jsonl", name: str | None = None) -> EvaluationSet:
    """Load an evaluation set from JSONL or TSV, validating every record.

    Raises a CorpusError subclass naming the offending line on any invalid
    record; duplicate ids are a hard error.
    """
    path = Path(path)
    if format == "jsonl":
        segments = _load_jsonl_segments(path)
    elif format == "tsv":
        segments = _load_tsv_segments(path)
    else:
        raise ValueError(f"unknown format {format!r}: want 'jsonl' or 'tsv'")
    seen: dict[str, int] = {}
    for i, seg in enumerate(segments):
        if seg.id in seen:
            raise DuplicateId(f"duplicate segment id {seg.id!r} (first at record {seen[seg.id] + 1})", i + 1)
        seen[seg.id] = i
    return EvaluationSet(name=name or path.stem, segments=tuple(segments))


def segment_to_record(seg: Segment) -> dict:
    record = {
        "id": seg.id,
        "lp": seg.lp.file_key,
        "src": seg.src,
        "mt": seg.mt,
        "human_score": seg.human_score,
    }
    if seg.system is not None:
        record["system"] = seg.system
    return record


def dump_evaluation_set(eval_set: EvaluationSet, path: str | Path) -> None:
    """Write an evaluation set back to JSONL (inverse of the JSONL loader)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for seg in eval_set:
            fh.write(json.dumps(segment_to_record(seg), ensure_ascii=False) + "\n")


def load_metric_scores(path: str | Path) -> list[MetricScoreSet]:
    """Load external metric correlations from the documented CSV.

    Header: metric,ref_mode,lp,stat,value with ref_mode in {noref, ref}
    and stat in {rho, r, tau}. Returns one MetricScoreSet per metric, in
    first-appearance order.
    """
    path = Path(path)
    order: list[str] = []
    ref_modes: dict[str, bool] = {}
    cells: dict[str, dict[tuple[LanguagePair, str], float]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["metric", "ref_mode", "lp", "stat", "value"]:
            raise MalformedLine(f"bad CSV header {reader.fieldnames!r}", 1)
        for lineno, row in enumerate(reader, start=2):
            metric = row["metric"]
            if row["ref_mode"] not in ("noref", "ref"):
                raise MalformedLine(f"bad ref_mode {row['ref_mode']!r}", lineno)
            if row["stat"] not in VALID_STATS:
                raise UnknownStatistic(f"unknown statistic {row['stat']!r}", lineno)
            try:
                lp = LanguagePair.parse(row["lp"])
            except ValueError as exc:
                raise MalformedLine(str(exc), lineno) from exc
            try:
                value = float(row["value"])
            except ValueError as exc:
                raise MalformedLine(f"bad value {row['value']!r}", lineno) from exc
            if not math.isfinite(value) or abs(value) > 1:
                raise ValueOutOfRange(f"correlation value {row['value']} outside [-1, 1]", lineno)
            reference_free = row["ref_mode"] == "noref"
            if metric not in cells:
                order.append(metric)
                cells[metric] = {}
                ref_modes[metric] = reference_free
            elif ref_modes[metric] != reference_free:
                raise MalformedLine(f"metric {metric!r} appears with both ref_modes", lineno)
            key = (lp, row["stat"])
            if key in cells[metric]:
                raise DuplicateCell(f"duplicate cell for {metric}/{lp}/{row['stat']}", lineno)
            cells[metric][key] = value
    return [
        MetricScoreSet(metric_name=m, reference_free=ref_modes[m], values=cells[m])
        for m in order
    ]


def metric_values(
    metric_sets: Iterable[MetricScoreSet], lp: LanguagePair, stat: str
) -> list[float]:
    """Collect one statistic across metric sets, skipping absent cells."""
    out = []
    for ms in metric_sets:
        value = ms.get(lp, stat)
        if value is not None:
            out.append(value)
    return out
