"""Scoring engines: generation-based (pseudo-reference + cosine) and the
direct 0-100 prompting baseline, with output cleanup, numeric parsing,
and per-run failure accounting.

One segment's failure never aborts a batch; failures surface as invalid
QualityScores and are counted in the RunManifest.
"""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import embeddings, llm
from .corpus import EvaluationSet, LanguagePair, Segment
from .langnames import display_name
from .prompts import PromptTemplate, build_direct_scoring_prompt, build_generation_prompt

GENERATION = "generation_based"
DIRECT = "direct_scoring"

# total generation attempts per segment: 1 + 2 retries on cleanup/backend failure
MAX_GENERATION_ATTEMPTS = 3

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")

_QUOTE_PAIRS = (('"', '"'), ("“", "”"))


class ScoringError(RuntimeError):
    pass


class EmptyAfterCleanup(ScoringError):
    pass


class NoNumberFound(ScoringError):
    pass


class OutOfRange(ScoringError):
    pass


class PipelineConfigError(ScoringError):
    """Raised when no segment can be scored for configuration reasons."""


@dataclass(frozen=True)
class GenerationRecord:
    segment_id: str
    raw_output: str
    reference: str | None
    status: str  # ok | empty_after_cleanup | backend_failed
    attempts: int


@dataclass(frozen=True)
class QualityScore:
    segment_id: str
    method: str  # generation_based | direct_scoring
    value: float | None
    valid: bool
    detail: str

    def __post_init__(self):
        if self.valid:
            assert self.value is not None
            low, high = (-1.0, 1.0) if self.method == GENERATION else (0.0, 100.0)
            if not low <= self.value <= high:
                raise ScoringError(f"{self.method} value {self.value} outside [{low}, {high}]")
        else:
            assert self.value is None


@dataclass
class RunManifest:
    dataset_name: str
    method: str
    backend: dict
    embedder: dict | None
    template_ids: list[str]
    pair_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    backend_calls: int = 0
    wall_time: float = 0.0

    def to_record(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "method": self.method,
            "backend": self.backend,
            "embedder": self.embedder,
            "template_ids": self.template_ids,
            "pair_counts": self.pair_counts,
            "backend_calls": self.backend_calls,
            "wall_time": self.wall_time,
        }


def postprocess_reference(raw: str) -> str:
    """Reduce a raw generation to one clean sentence.

    Strips whitespace, drops a leading "Translation:" label, keeps the
    first non-empty line, and removes one matched pair of surrounding
    double quotes (straight or curly).
    """
    text = raw.replace("\r\n", "\n").replace("\r", "\n").strip()
    if text.lower().startswith("translation:"):
        text = text[len("translation:"):].strip()
    for line in text.split("\n"):
        line = line.strip()
        if line:
            text = line
            break
    else:
        raise EmptyAfterCleanup("no non-empty line in generation output")
    for opening, closing in _QUOTE_PAIRS:
        if len(text) >= 2 and text.startswith(opening) and text.endswith(closing):
            text = text[1:-1].strip()
            break
    if not text:
        raise EmptyAfterCleanup("generation output empty after cleanup")
    return text


def parse_direct_score(raw: str) -> float:
    """First unsigned decimal number in the output, accepted iff in [0, 100].

    An echoed "(0-100)" scale annotation is ignored so a parroted prompt
    tail does not read as a score of 0.
    """
    match = _NUMBER_RE.search(raw.replace("(0-100)", ""))
    if match is None:
        raise NoNumberFound(f"no numeric score in {raw[:80]!r}")
    value = float(match.group(0))
    if not 0.0 <= value <= 100.0:
        raise OutOfRange(f"score {value} outside [0, 100]")
    return value


def score_segment_generation(
    seg: Segment,
    backend_spec: llm.BackendSpec,
    embedder_spec: embeddings.EmbeddingProviderSpec,
    backend: llm.Backend,
    completion_cache: llm.CompletionCache,
    vector_cache: embeddings.VectorCache,
    template: PromptTemplate | None = None,
) -> tuple[GenerationRecord, QualityScore]:
    """Pseudo-reference pipeline for one segment.

    Generate a reference from seg.src, clean it up, then score the MT
    output by embedding cosine. Cleanup or backend failures are retried
    up to two extra generation attempts before the segment is marked
    invalid.
    """
    prompt = build_generation_prompt(seg.src, template)
    raw_output = ""
    reference: str | None = None
    status = "backend_failed"
    detail = ""
    attempts = 0
    for attempts in range(1, MAX_GENERATION_ATTEMPTS + 1):
        try:
            result = llm.complete(backend_spec, prompt, backend, completion_cache, request_id=seg.id)
        except llm.LlmError as exc:
            status = "backend_failed"
            detail = f"{type(exc).__name__}: {exc}"
            continue
        raw_output = result.text
        try:
            reference = postprocess_reference(raw_output)
        except EmptyAfterCleanup as exc:
            status = "empty_after_cleanup"
            detail = str(exc)
            continue
        status = "ok"
        break
    record = GenerationRecord(
        segment_id=seg.id, raw_output=raw_output, reference=reference, status=status, attempts=attempts
    )
    if status != "ok":
        return record, QualityScore(seg.id, GENERATION, None, False, detail or status)
    try:
        ref_vec, mt_vec = embeddings.embed_batch(
            embedder_spec, [reference, seg.mt], cache=vector_cache
        )
        value = embeddings.cosine_similarity(ref_vec, mt_vec)
    except embeddings.EmbeddingError as exc:
        return record, QualityScore(seg.id, GENERATION, None, False, f"{type(exc).__name__}: {exc}")
    return record, QualityScore(seg.id, GENERATION, value, True, "ok")


def score_segment_direct(
    seg: Segment,
    backend_spec: llm.BackendSpec,
    backend: llm.Backend,
    completion_cache: llm.CompletionCache,
    template: PromptTemplate | None = None,
) -> QualityScore:
    """Direct 0-100 scoring for one segment; a single attempt, no parse retry."""
    prompt = build_direct_scoring_prompt(
        display_name(seg.lp.source_lang), display_name(seg.lp.target_lang), seg.mt, template
    )
    try:
        result = llm.complete(backend_spec, prompt, backend, completion_cache, request_id=seg.id)
    except llm.LlmError as exc:
        return QualityScore(seg.id, DIRECT, None, False, f"{type(exc).__name__}: {exc}")
    try:
        value = parse_direct_score(result.text)
    except ScoringError as exc:
        return QualityScore(seg.id, DIRECT, None, False, f"{type(exc).__name__}: {exc}")
    return QualityScore(seg.id, DIRECT, value, True, "ok")


def run_evaluation(
    eval_set: EvaluationSet,
    method: str,
    backend_spec: llm.BackendSpec,
    backend: llm.Backend,
    embedder_spec: embeddings.EmbeddingProviderSpec | None = None,
    parallelism: int = 1,
    completion_cache: llm.CompletionCache | None = None,
    vector_cache: embeddings.VectorCache | None = None,
    generation_template: PromptTemplate | None = None,
    scoring_template: PromptTemplate | None = None,
) -> tuple[list[QualityScore], RunManifest]:
    """Score a whole evaluation set with up to `parallelism` concurrent workers.

    Scores come back in dataset order regardless of completion order, so
    output files are byte-identical across parallelism levels.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if method not in (GENERATION, DIRECT):
        raise ValueError(f"unknown method {method!r}")
    if method == GENERATION and embedder_spec is None:
        raise PipelineConfigError("generation-based scoring requires an embedder spec")
    completion_cache = completion_cache or llm.CompletionCache()
    vector_cache = vector_cache or embeddings.VectorCache()
    calls_before = getattr(backend, "calls", 0)
    start = time.monotonic()

    def score_one(seg: Segment) -> QualityScore:
        if method == GENERATION:
            _, score = score_segment_generation(
                seg, backend_spec, embedder_spec, backend, completion_cache, vector_cache, generation_template
            )
        else:
            score = score_segment_direct(seg, backend_spec, backend, completion_cache, scoring_template)
        return score

    if parallelism == 1 or len(eval_set) <= 1:
        scores = [score_one(seg) for seg in eval_set]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            scores = list(pool.map(score_one, eval_set.segments))

    markers = ("ProviderUnreachable", "endpoint_url", "Connection", "Timeout", "RetriesExhausted")
    if scores and not any(s.valid for s in scores):
        transport_failures = [s for s in scores if any(m in s.detail for m in markers)]
        if transport_failures:
            raise PipelineConfigError(f"no segment could be scored: {transport_failures[0].detail}")

    manifest = RunManifest(
        dataset_name=eval_set.name,
        method=method,
        backend={
            "backend_id": backend_spec.backend_id,
            "model_id": backend_spec.model_id,
            "temperature": backend_spec.temperature,
            "max_output_tokens": backend_spec.max_output_tokens,
        },
        embedder=None
        if embedder_spec is None
        else {
            "provider_id": embedder_spec.provider_id,
            "model_id": embedder_spec.model_id,
            "expected_dim": embedder_spec.expected_dim,
        },
        template_ids=[
            t.template_id for t in (generation_template, scoring_template) if t is not None
        ]
        or (["generation"] if method == GENERATION else ["direct_scoring"]),
        backend_calls=getattr(backend, "calls", 0) - calls_before,
        wall_time=time.monotonic() - start,
    )
    by_id = eval_set.by_id()
    for seg in eval_set:
        counts = manifest.pair_counts.setdefault(
            seg.lp.report_key, {"total": 0, "scored": 0, "failed": 0}
        )
        counts["total"] += 1
    for score in scores:
        lp_key = by_id[score.segment_id].lp.report_key
        manifest.pair_counts[lp_key]["scored" if score.valid else "failed"] += 1
    return scores, manifest


def write_scores_jsonl(scores: Iterable[QualityScore], eval_set: EvaluationSet, path: str | Path) -> None:
    by_id = eval_set.by_id()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for score in scores:
            record = {
                "id": score.segment_id,
                "lp": by_id[score.segment_id].lp.file_key,
                "method": score.method,
                "value": score.value,
                "valid": score.valid,
                "detail": score.detail,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_scores_jsonl(path: str | Path) -> list[QualityScore]:
    scores = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            scores.append(
                QualityScore(
                    segment_id=record["id"],
                    method=record["method"],
                    value=record["value"],
                    valid=record["valid"],
                    detail=record.get("detail", ""),
                )
            )
    return scores


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_record(), indent=2) + "\n", encoding="utf-8")


def pair_of(eval_set: EvaluationSet, lp_key: str) -> LanguagePair:
    lp = LanguagePair.parse(lp_key)
    if lp not in eval_set.language_pairs():
        raise ValueError(f"language pair {lp_key!r} not present in dataset {eval_set.name!r}")
    return lp
