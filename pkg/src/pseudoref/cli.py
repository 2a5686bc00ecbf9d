"""Command-line entry point wiring the corpus loaders, scoring engines,
correlation statistics, and table renderers together.

One TOML config file describes a run; individual flags override the
config, and flags beat environment variables, which beat the config file.
Exit codes: 0 success, 1 configuration error, 2 data error, 3 backend
exhaustion. Diagnostics go to stderr; machine output goes to files or
stdout only.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import corpus, embeddings, llm, report, scoring, stats
from .corpus import CorpusError, LanguagePair
from .prompts import (
    DIRECT_SCORING_TEMPLATE_ID,
    GENERATION_TEMPLATE_ID,
    PromptError,
    load_template,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from exc
    # paths in a config file are relative to the file, not the cwd
    base = Path(path).resolve().parent
    for section, key in (
        ("dataset", "path"),
        ("backend", "lexicon"),
        ("prompts", "generation_file"),
        ("prompts", "direct_scoring_file"),
        ("exp2", "metric_scores"),
        ("run", "cache_dir"),
        ("run", "out"),
    ):
        value = cfg.get(section, {}).get(key)
        if isinstance(value, str) and value and not Path(value).is_absolute():
            cfg[section][key] = str(base / value)
    return cfg


def _resolve(flag, env_name: str | None, config: dict, *config_path, default=None):
    """flag > environment > config file > default."""
    if flag is not None:
        return flag
    if env_name and os.environ.get(env_name):
        return os.environ[env_name]
    node = config
    for part in config_path:
        if not isinstance(node, dict) or part not in node:
            return default
        node = node[part]
    return node


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _build_backend(cfg: dict, backend_id, endpoint, model, failure_rate):
    backend_id = _resolve(backend_id, None, cfg, "backend", "backend_id", default="mock")
    model = _resolve(model, None, cfg, "backend", "model_id", default="mock-model")
    endpoint = _resolve(endpoint, None, cfg, "backend", "endpoint", default=None) or None
    failure_rate = float(
        _resolve(failure_rate, None, cfg, "backend", "failure_rate", default=0.0)
    )
    spec = llm.BackendSpec(
        backend_id=backend_id,
        model_id=model,
        endpoint_url=endpoint,
        temperature=float(_resolve(None, None, cfg, "backend", "temperature", default=0.0)),
        max_output_tokens=int(
            _resolve(None, None, cfg, "backend", "max_output_tokens", default=256)
        ),
        max_retries=int(_resolve(None, None, cfg, "backend", "max_retries", default=2)),
        failure_rate=failure_rate,
    )
    if backend_id == "mock":
        lexicon_path = _resolve(None, None, cfg, "backend", "lexicon", default=None)
        lexicon = {}
        if lexicon_path:
            lexicon = json.loads(Path(lexicon_path).read_text(encoding="utf-8"))
        return spec, llm.MockBackend(lexicon)
    if backend_id == "openai-compatible":
        if not endpoint:
            raise ConfigError("remote backend requires --endpoint")
        return spec, llm.OpenAICompatibleBackend()
    raise ConfigError(f"unknown backend {backend_id!r}")


def _build_embedder(cfg: dict, provider, expected_dim, endpoint):
    provider = _resolve(provider, None, cfg, "embedder", "provider", default="mock")
    if provider not in ("mock", "remote", "file"):
        raise ConfigError(f"unknown embedder {provider!r}")
    return embeddings.EmbeddingProviderSpec(
        provider_id=provider,
        model_id=_resolve(None, None, cfg, "embedder", "model_id", default="mock-fnv"),
        endpoint_url=_resolve(endpoint, None, cfg, "embedder", "endpoint", default=None) or None,
        expected_dim=int(
            _resolve(expected_dim, None, cfg, "embedder", "expected_dim", default=16)
        ),
        batch_size=int(_resolve(None, None, cfg, "embedder", "batch_size", default=32)),
    )


def _load_dataset(cfg: dict, dataset, format) -> corpus.EvaluationSet:
    path = _resolve(dataset, None, cfg, "dataset", "path")
    if not path:
        raise ConfigError("no dataset given (use --dataset or [dataset].path)")
    format = _resolve(format, None, cfg, "dataset", "format", default="jsonl")
    return corpus.load_evaluation_set(path, format=format)


def _correlation_payload(
    scores: list[scoring.QualityScore], eval_set: corpus.EvaluationSet
) -> dict:
    known = set(eval_set.by_id())
    unknown = [s.segment_id for s in scores if s.segment_id not in known]
    if unknown:
        raise CorpusError(f"score file references unknown segment id(s), e.g. {unknown[0]!r}")
    pairs = {}
    for lp in eval_set.language_pairs():
        rep = stats.correlate_pair(scores, eval_set, lp)
        pairs[lp.report_key] = rep.to_record()
    return {"dataset": eval_set.name, "pairs": pairs}


@click.group()
def cli():
    """Reference-free MT quality estimation via generated pseudo-references."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--dataset", type=click.Path(), default=None)
@click.option("--format", type=click.Choice(["jsonl", "tsv"]), default=None)
@click.option("--method", type=click.Choice(["generation", "direct"]), default=None)
@click.option("--backend", "backend_id", type=str, default=None)
@click.option("--endpoint", type=str, default=None)
@click.option("--model", type=str, default=None)
@click.option("--embedder", type=str, default=None)
@click.option("--expected-dim", type=int, default=None)
@click.option("--parallelism", type=int, default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--prompt-file", type=click.Path(), default=None)
@click.option("--failure-rate", type=float, default=None)
def score(
    config_path, dataset, format, method, backend_id, endpoint, model,
    embedder, expected_dim, parallelism, cache_dir, out_dir, prompt_file, failure_rate,
):
    """Score a dataset; writes scores.jsonl and manifest.json to --out."""
    try:
        cfg = _load_config(config_path)
        method = _resolve(method, None, cfg, "run", "method", default="generation")
        method_id = scoring.GENERATION if method == "generation" else scoring.DIRECT
        parallelism = int(_resolve(parallelism, None, cfg, "run", "parallelism", default=1))
        cache_dir = _resolve(cache_dir, llm.CACHE_DIR_ENV, cfg, "run", "cache_dir", default="cache")
        out_dir = Path(_resolve(out_dir, None, cfg, "run", "out", default="out"))
        backend_spec, backend = _build_backend(cfg, backend_id, endpoint, model, failure_rate)
        embedder_spec = _build_embedder(cfg, embedder, expected_dim, None)
        gen_tpl = scr_tpl = None
        prompt_file = _resolve(
            prompt_file, None, cfg, "prompts",
            "generation_file" if method == "generation" else "direct_scoring_file",
            default=None,
        )
        if prompt_file:
            tpl_id = GENERATION_TEMPLATE_ID if method == "generation" else DIRECT_SCORING_TEMPLATE_ID
            tpl = load_template(prompt_file, tpl_id)
            gen_tpl, scr_tpl = (tpl, None) if method == "generation" else (None, tpl)
    except (ConfigError, ValueError, OSError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        eval_set = _load_dataset(cfg, dataset, format)
    except (CorpusError, OSError, ConfigError) as exc:
        _fail(EXIT_DATA if isinstance(exc, CorpusError) else EXIT_CONFIG, str(exc))
    try:
        scores, manifest = scoring.run_evaluation(
            eval_set,
            method_id,
            backend_spec,
            backend,
            embedder_spec=embedder_spec,
            parallelism=parallelism,
            completion_cache=llm.CompletionCache(cache_dir),
            vector_cache=embeddings.VectorCache(cache_dir),
            generation_template=gen_tpl,
            scoring_template=scr_tpl,
        )
    except (scoring.PipelineConfigError, llm.RetriesExhausted) as exc:
        _fail(EXIT_BACKEND, str(exc))
    except PromptError as exc:
        _fail(EXIT_DATA, str(exc))
    scoring.write_scores_jsonl(scores, eval_set, out_dir / "scores.jsonl")
    scoring.write_manifest(manifest, out_dir / "manifest.json")
    n_valid = sum(1 for s in scores if s.valid)
    click.echo(
        f"scored {n_valid}/{len(scores)} segments ({manifest.backend_calls} backend calls)",
        err=True,
    )


@cli.command()
@click.option("--scores", "scores_path", type=click.Path(), required=True)
@click.option("--dataset", type=click.Path(), default=None)
@click.option("--format", type=click.Choice(["jsonl", "tsv"]), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
def correlate(scores_path, dataset, format, config_path, out_path):
    """Correlate a score file against a dataset's human scores (JSON output)."""
    try:
        cfg = _load_config(config_path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        eval_set = _load_dataset(cfg, dataset, format)
        scores = scoring.load_scores_jsonl(scores_path)
        payload = _correlation_payload(scores, eval_set)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except (CorpusError, OSError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_DATA, str(exc))
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option("--ours", "ours_path", type=click.Path(), required=True)
@click.option("--baseline", "baseline_path", type=click.Path(), required=True)
@click.option("--dataset", type=click.Path(), default=None)
@click.option("--format", type=click.Choice(["jsonl", "tsv"]), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--label", type=str, default="model")
@click.option("--out", "out_dir", type=click.Path(), default="reports")
def exp1(ours_path, baseline_path, dataset, format, config_path, label, out_dir):
    """Render the ours/baseline/growth comparison table (markdown + CSV)."""
    try:
        cfg = _load_config(config_path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        eval_set = _load_dataset(cfg, dataset, format)
        ours = scoring.load_scores_jsonl(ours_path)
        base = scoring.load_scores_jsonl(baseline_path)
        _correlation_payload(ours, eval_set)
        _correlation_payload(base, eval_set)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except (CorpusError, OSError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_DATA, str(exc))
    pairs = eval_set.language_pairs()
    cells = {}
    for lp in pairs:
        ours_rep = stats.correlate_pair(ours, eval_set, lp)
        base_rep = stats.correlate_pair(base, eval_set, lp)
        cells[lp.report_key] = {
            "rho_ours": ours_rep.rho,
            "r_ours": ours_rep.r,
            "rho_base": base_rep.rho,
            "r_base": base_rep.r,
        }
    row = report.Experiment1Row(model_label=label, cells=cells)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "exp1.md").write_text(report.render_experiment1([row], pairs, "markdown"), encoding="utf-8")
    (out / "exp1.csv").write_text(report.render_experiment1([row], pairs, "csv"), encoding="utf-8")
    click.echo(f"wrote {out / 'exp1.md'} and {out / 'exp1.csv'}", err=True)


@cli.command()
@click.option(
    "--correlations", "correlation_paths", type=click.Path(), multiple=True, required=True,
    help="Correlation JSON file(s) from `correlate`; repeatable.",
)
@click.option("--metric-scores", "metric_scores_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--stats", "stats_arg", type=str, default="rho,r")
@click.option(
    "--pairs", "pairs_arg", type=str, default=None,
    help="Comma-separated pair filter, e.g. 'uk-en,cs-en'; default: all pairs present.",
)
@click.option("--out", "out_dir", type=click.Path(), default="reports")
def exp2(correlation_paths, metric_scores_path, config_path, stats_arg, pairs_arg, out_dir):
    """Render ours vs external reference-free metrics (markdown + CSV)."""
    try:
        cfg = _load_config(config_path)
        metric_scores_path = _resolve(metric_scores_path, None, cfg, "exp2", "metric_scores")
        if not metric_scores_path:
            raise ConfigError("no metric scores CSV given (--metric-scores)")
        stat_names = [s.strip() for s in stats_arg.split(",") if s.strip()]
        for s in stat_names:
            if s not in corpus.VALID_STATS:
                raise ConfigError(f"unknown statistic {s!r}")
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        metric_sets = [ms for ms in corpus.load_metric_scores(metric_scores_path) if ms.reference_free]
        if not metric_sets:
            raise CorpusError("metric scores CSV contains no reference-free metrics")
        rows = []
        pair_keys: list[str] = []
        for path in correlation_paths:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
            values = {}
            for pk, rec in payload["pairs"].items():
                if pk not in pair_keys:
                    pair_keys.append(pk)
                for stat in stat_names:
                    values[(pk, stat)] = rec.get(stat)
            rows.append(report.Experiment2Row(system_label=Path(path).stem, values=values))
        if pairs_arg:
            wanted = [LanguagePair.parse(p).report_key for p in pairs_arg.split(",") if p.strip()]
            pair_keys = [pk for pk in pair_keys if pk in wanted]
        pairs = [LanguagePair.parse(pk) for pk in pair_keys]
    except (CorpusError, OSError, KeyError, ValueError) as exc:
        _fail(EXIT_DATA, str(exc))
    try:
        md = report.render_experiment2(rows, metric_sets, pairs, stat_names, "markdown")
        csv_text = report.render_experiment2(rows, metric_sets, pairs, stat_names, "csv")
    except report.ReportError as exc:
        _fail(EXIT_DATA, str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "exp2.md").write_text(md, encoding="utf-8")
    (out / "exp2.csv").write_text(csv_text, encoding="utf-8")
    click.echo(f"wrote {out / 'exp2.md'} and {out / 'exp2.csv'}", err=True)


@cli.group()
def cache():
    """Cache inspection."""


@cache.command("stats")
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
def cache_stats(cache_dir, config_path):
    """Print completion- and vector-cache entry counts and sizes."""
    try:
        cfg = _load_config(config_path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    cache_dir = _resolve(cache_dir, llm.CACHE_DIR_ENV, cfg, "run", "cache_dir", default="cache")
    payload = {
        "cache_dir": str(cache_dir),
        "completions": llm.CompletionCache(cache_dir).stats(),
        "embeddings": embeddings.VectorCache(cache_dir).stats(),
    }
    click.echo(json.dumps(payload, indent=2))


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except click.Abort:
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
