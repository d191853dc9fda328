"""Subcommand front-end wiring the dataset pipeline end to end.

Stages mirror the build flow: ingest -> scrub -> genfeedback -> filter ->
split, plus stats/rouge/eval/train-config/serve. Every command reads the
pipeline config, supports --dry-run (validate and report, write nothing), and
writes a machine-readable JSON summary alongside its human output.

Exit codes: 0 ok, 2 config error, 3 input error, 4 gateway error,
5 partial failure (some items excluded for per-item errors).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from contextlib import contextmanager, nullcontext
from pathlib import Path

from filelock import FileLock, Timeout

from . import corpus as corpus_mod
from . import datasetio, evalharness, feedback, metrics, promptkit
from .annotation_server import load_items_jsonl, serve_annotation
from .config import ConfigError, PipelineConfig, load_config
from .corpus import CorpusError, LengthFilterPolicy
from .datasetio import DatasetError, InstructionRecord, SplitSpec
from .evalharness import EvalError
from .llmgateway import (
    ChatRequest,
    Gateway,
    GatewayError,
    HttpBackend,
    MockBackend,
    ParamError,
)
from .promptkit import TemplateError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_GATEWAY = 4
EXIT_PARTIAL = 5

LOCK_FILENAME = ".syntaxforge.lock"


@contextmanager
def _locked(directory: Path):
    """Advisory lock; two commands must not share an output directory."""
    directory.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(directory / LOCK_FILENAME))
    try:
        with lock.acquire(timeout=10):
            yield
    except Timeout:
        raise ConfigError(f"output directory {directory} is locked by another command") from None


def _write_summary(path: Path, summary: dict, dry_run: bool) -> None:
    text = json.dumps(summary, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    if dry_run:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _write_exclusions(path: Path, entries: list[dict]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def _load_template(cfg: PipelineConfig, name: str) -> promptkit.PromptTemplate:
    if cfg.paths.template_dir:
        return promptkit.load_template(Path(cfg.paths.template_dir) / f"{name}.prompt")
    return promptkit.load_bundled_template(name)


def _build_gateway(cfg: PipelineConfig) -> Gateway:
    if cfg.endpoint.mock_script:
        script = Path(cfg.endpoint.mock_script)
        if not script.exists():
            raise ConfigError(f"mock script not found: {script}")
        backend = MockBackend.from_file(script)
        label = f"mock:{script.name}"
    else:
        try:
            backend = HttpBackend(
                base_url=cfg.endpoint.base_url,
                completions_path=cfg.endpoint.completions_path,
                send_top_k=cfg.endpoint.send_top_k,
            )
        except GatewayError as exc:
            raise ConfigError(str(exc)) from exc
        label = backend.endpoint
    return Gateway(
        backend,
        cache_dir=cfg.paths.cache_dir,
        max_in_flight=cfg.concurrency,
        endpoint_label=label,
    )


def _params_digest(params) -> str:
    payload = json.dumps(
        {
            "temperature": float(params.temperature),
            "top_p": float(params.top_p),
            "top_k": params.top_k,
            "max_tokens": params.max_tokens,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("ascii")).hexdigest()[:12]


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    corpus_path = Path(args.corpus or cfg.paths.corpus)
    fmt = args.format or ("jsonl" if corpus_path.suffix == ".jsonl" else "tsv")
    essays = corpus_mod.load_corpus(corpus_path, format=fmt)
    per_set: dict[str, int] = {}
    span_total = 0
    essays_with_spans = 0
    for essay in essays:
        per_set[str(essay.essay_set)] = per_set.get(str(essay.essay_set), 0) + 1
        spans = corpus_mod.detect_placeholders(essay.text)
        span_total += len(spans)
        if spans:
            essays_with_spans += 1
    summary = {
        "command": "ingest",
        "source": str(corpus_path),
        "essays": len(essays),
        "per_set": dict(sorted(per_set.items())),
        "placeholder_spans": span_total,
        "essays_with_placeholders": essays_with_spans,
    }
    out = Path(args.out)
    print(f"{len(essays)} essays ingested from {corpus_path}")
    print(f"per-set counts: {summary['per_set']}")
    print(f"{span_total} placeholder spans across {essays_with_spans} essays")
    if args.dry_run:
        _write_summary(out, summary, dry_run=True)
        return EXIT_OK
    with _locked(out.parent):
        corpus_mod.save_corpus_jsonl(essays, out)
        _write_summary(out.with_suffix(out.suffix + ".summary.json"), summary, dry_run=False)
    return EXIT_OK


def _complete_with_retries(
    gateway: Gateway,
    request: ChatRequest,
    retries: int,
    is_good,
) -> tuple[str | None, int]:
    """First answer passing is_good, else None; returns (text, attempts_used).

    A cache hit failing is_good is treated as replayed exhaustion from an
    earlier run and is not retried, keeping warm-cache replays network-free.
    """
    response = gateway.complete(request)
    attempts = 1
    if is_good(response.content):
        return response.content, attempts
    if response.cached:
        return None, attempts
    while attempts <= retries:
        response = gateway.complete(request, refresh=True)
        attempts += 1
        if is_good(response.content):
            return response.content, attempts
    return None, attempts


def cmd_scrub(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    essays = corpus_mod.load_corpus(args.infile, format="jsonl")
    template = _load_template(cfg, "placeholder_replacement")
    out = Path(args.out)
    exclusions_path = Path(args.exclusions) if args.exclusions else out.with_suffix(out.suffix + ".exclusions.jsonl")
    if args.dry_run:
        needing = sum(1 for e in essays if corpus_mod.detect_placeholders(e.text))
        _write_summary(
            out,
            {"command": "scrub", "in": len(essays), "needing_scrub": needing},
            dry_run=True,
        )
        return EXIT_OK
    gateway = _build_gateway(cfg)
    scrubbed: list[corpus_mod.Essay] = []
    exclusions: list[dict] = []
    gateway_failures = 0
    for essay in essays:
        if not corpus_mod.detect_placeholders(essay.text):
            scrubbed.append(essay)
            continue
        prompt = promptkit.render(template, {"essay": essay.text})
        request = ChatRequest(
            model=cfg.endpoint.model, messages=prompt.messages, params=cfg.scrub_params
        )
        try:
            text, _ = _complete_with_retries(
                gateway,
                request,
                cfg.retries.scrub,
                is_good=lambda t: not corpus_mod.detect_placeholders(t),
            )
        except GatewayError as exc:
            logger.warning("essay %s: gateway failure: %s", essay.id, exc)
            exclusions.append({"id": essay.id, "reason": "gateway_error"})
            gateway_failures += 1
            continue
        if text is None:
            logger.warning("essay %s: placeholders survived every attempt", essay.id)
            exclusions.append({"id": essay.id, "reason": "unresolved_placeholders"})
            continue
        scrubbed.append(
            corpus_mod.Essay(
                id=essay.id,
                essay_set=essay.essay_set,
                text=text,
                word_count=corpus_mod.word_count(text),
                meta=essay.meta,
            )
        )
    if essays and not scrubbed:
        raise GatewayError("scrub failed for every essay")
    summary = {
        "command": "scrub",
        "in": len(essays),
        "out": len(scrubbed),
        "excluded": len(exclusions),
    }
    with _locked(out.parent):
        corpus_mod.save_corpus_jsonl(scrubbed, out)
        _write_exclusions(exclusions_path, exclusions)
        _write_summary(out.with_suffix(out.suffix + ".summary.json"), summary, dry_run=False)
    print(f"scrubbed {len(scrubbed)}/{len(essays)} essays ({len(exclusions)} excluded)")
    return EXIT_PARTIAL if exclusions else EXIT_OK


def cmd_genfeedback(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    essays = corpus_mod.load_corpus(args.infile, format="jsonl")
    template = _load_template(cfg, "syntax_feedback")
    out = Path(args.out)
    exclusions_path = Path(args.exclusions) if args.exclusions else out.with_suffix(out.suffix + ".exclusions.jsonl")
    if args.dry_run:
        _write_summary(out, {"command": "genfeedback", "in": len(essays)}, dry_run=True)
        return EXIT_OK
    gateway = _build_gateway(cfg)
    records: list[InstructionRecord] = []
    docs: list[feedback.FeedbackDocument] = []
    exclusions: list[dict] = []
    flag_counts = {flag.value: 0 for flag in feedback.ValidationFlag}
    valid_items = 0

    def parses(text: str) -> bool:
        try:
            feedback.parse_feedback(text)
            return True
        except feedback.FeedbackParseError:
            return False

    for essay in essays:
        prompt = promptkit.render(template, {"essay": essay.text})
        request = ChatRequest(
            model=cfg.endpoint.model, messages=prompt.messages, params=cfg.feedback_params
        )
        try:
            text, _ = _complete_with_retries(
                gateway, request, cfg.retries.feedback_parse, is_good=parses
            )
        except GatewayError as exc:
            logger.warning("essay %s: gateway failure: %s", essay.id, exc)
            exclusions.append({"id": essay.id, "reason": "gateway_error"})
            continue
        if text is None:
            exclusions.append({"id": essay.id, "reason": "parse_error"})
            continue
        doc = feedback.parse_feedback(text)
        report = feedback.validate_feedback(essay, doc)
        valid_items += report.valid_items
        for _, flag in report.flagged:
            flag_counts[flag.value] += 1
        docs.append(doc)
        records.append(
            InstructionRecord(
                instruction=datasetio.DEFAULT_INSTRUCTION,
                input=essay.text,
                output=feedback.serialize_feedback(doc),
                meta={
                    "essay_id": essay.id,
                    "essay_set": str(essay.essay_set),
                    "model": cfg.endpoint.model,
                    "params_digest": _params_digest(cfg.feedback_params),
                    "prompt_version": template.version,
                },
            )
        )
    if essays and not records:
        raise GatewayError("feedback generation failed for every essay")
    histogram = {c.value: n for c, n in feedback.category_histogram(docs).items()}
    summary = {
        "command": "genfeedback",
        "in": len(essays),
        "emitted": len(records),
        "excluded": len(exclusions),
        "validation": {"valid_items": valid_items, **flag_counts},
        "category_histogram": histogram,
    }
    with _locked(out.parent):
        datasetio.emit_jsonl(records, out, strict=True)
        _write_exclusions(exclusions_path, exclusions)
        _write_summary(out.with_suffix(out.suffix + ".summary.json"), summary, dry_run=False)
    print(f"emitted {len(records)}/{len(essays)} records ({len(exclusions)} excluded)")
    return EXIT_PARTIAL if exclusions else EXIT_OK


def cmd_filter(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    policy = LengthFilterPolicy(
        min_words=args.min_words if args.min_words is not None else cfg.filter.min_words,
        max_words=args.max_words if args.max_words is not None else cfg.filter.max_words,
    )
    out = Path(args.out)
    exclusions_path = Path(args.exclusions) if args.exclusions else out.with_suffix(out.suffix + ".exclusions.jsonl")
    if args.kind == "essays":
        essays = corpus_mod.load_corpus(args.infile, format="jsonl")
        kept, dropped = corpus_mod.filter_by_length(essays, policy)
        entries = [{"id": d.essay.id, "reason": d.reason} for d in dropped]
        total = len(essays)
        writer = lambda: corpus_mod.save_corpus_jsonl(kept, out)
    else:
        records = datasetio.read_jsonl(args.infile)
        kept_records: list[InstructionRecord] = []
        entries = []
        for record in records:
            count = corpus_mod.word_count(record.input)
            if count < policy.min_words:
                entries.append({"id": record.meta.get("essay_id", "?"), "reason": "too_short"})
            elif count > policy.max_words:
                entries.append({"id": record.meta.get("essay_id", "?"), "reason": "too_long"})
            else:
                kept_records.append(record)
        kept = kept_records
        total = len(records)
        writer = lambda: datasetio.emit_jsonl(kept_records, out, strict=False)
    reasons = {"too_short": 0, "too_long": 0}
    for entry in entries:
        reasons[entry["reason"]] += 1
    summary = {
        "command": "filter",
        "in": total,
        "kept": len(kept),
        "dropped": len(entries),
        "reasons": reasons,
        "policy": {"min_words": policy.min_words, "max_words": policy.max_words},
    }
    print(f"kept {len(kept)}/{total} ({reasons['too_short']} too short, {reasons['too_long']} too long)")
    if args.dry_run:
        _write_summary(out, summary, dry_run=True)
        return EXIT_OK
    with _locked(out.parent):
        writer()
        _write_exclusions(exclusions_path, entries)
        _write_summary(out.with_suffix(out.suffix + ".summary.json"), summary, dry_run=False)
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    spec = SplitSpec(
        test_size=args.test_size if args.test_size is not None else cfg.split.test_size,
        seed=args.seed if args.seed is not None else cfg.split.seed,
    )
    records = datasetio.read_jsonl(args.infile)
    stratify_key = (lambda r: r.meta.get("essay_set", "?")) if args.stratify else None
    train, test = datasetio.split(records, spec, stratify_key=stratify_key)
    out_dir = Path(args.out_dir)
    summary = {
        "command": "split",
        "in": len(records),
        "train": len(train),
        "test": len(test),
        "spec": {"test_size": spec.test_size, "seed": spec.seed},
        "stratified": bool(args.stratify),
    }
    print(f"split {len(records)} records into {len(train)} train / {len(test)} test")
    if args.dry_run:
        _write_summary(out_dir, summary, dry_run=True)
        return EXIT_OK
    manifest = {
        "dataset": "essay-syntax-instruct",
        "version": "1",
        "instruction": records[0].instruction if records else datasetio.DEFAULT_INSTRUCTION,
        "prompt_versions": sorted({r.meta.get("prompt_version", "") for r in records} - {""}),
        "filter_policy": {"min_words": cfg.filter.min_words, "max_words": cfg.filter.max_words},
        "split": {"test_size": spec.test_size, "seed": spec.seed, "stratified": bool(args.stratify)},
        "source": {
            "path": str(args.infile),
            "sha256": datasetio.file_digest(args.infile),
            "records": len(records),
        },
        "test_set_policy": "test split doubles as the annotation set",
    }
    with _locked(out_dir):
        datasetio.emit_jsonl(train, out_dir / "train.jsonl", strict=False)
        datasetio.emit_jsonl(test, out_dir / "test.jsonl", strict=False)
        datasetio.write_manifest(out_dir / "manifest.json", manifest)
        _write_summary(out_dir / "split.summary.json", summary, dry_run=False)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    load_config(args.config)
    records = datasetio.read_jsonl(args.infile)
    essay_hist = metrics.token_length_histogram(
        [r.input for r in records], scheme=args.scheme, bucket_width=args.bucket_width
    )
    feedback_hist = metrics.token_length_histogram(
        [r.output for r in records], scheme=args.scheme, bucket_width=args.bucket_width
    )
    docs = [feedback.parse_feedback(r.output) for r in records]
    histogram = feedback.category_histogram(docs)
    out_dir = Path(args.out_dir)
    summary = {
        "command": "stats",
        "records": len(records),
        "scheme": args.scheme,
        "bucket_width": args.bucket_width,
        "category_histogram": {c.value: n for c, n in histogram.items()},
    }
    print(f"{len(records)} records; categories: {summary['category_histogram']}")
    if args.dry_run:
        _write_summary(out_dir, summary, dry_run=True)
        return EXIT_OK
    with _locked(out_dir):
        metrics.write_histogram_csv(essay_hist, out_dir / "essay_token_histogram.csv")
        metrics.write_histogram_csv(feedback_hist, out_dir / "feedback_token_histogram.csv")
        with (out_dir / "category_histogram.csv").open("w", encoding="utf-8", newline="") as fh:
            fh.write("category,count\n")
            for category, count in histogram.items():
                fh.write(f'"{category.value}",{count}\n')
        _write_summary(out_dir / "stats.summary.json", summary, dry_run=False)
    return EXIT_OK


def cmd_rouge(args: argparse.Namespace) -> int:
    load_config(args.config)
    by_model: dict[str, list[tuple[str, str]]] = {}
    with Path(args.pairs).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            by_model.setdefault(obj.get("model", "default"), []).append(
                (obj["candidate"], obj["reference"])
            )
    if not by_model:
        raise DatasetError(f"{args.pairs}: no pairs found")
    rows = [(model, metrics.corpus_rouge(pairs, scheme=args.scheme)) for model, pairs in sorted(by_model.items())]
    out_dir = Path(args.out_dir)
    for model, scores in rows:
        print(
            f"{model}: {scores.rouge1.f1:.3f} / {scores.rouge2.f1:.3f} / {scores.rougeL.f1:.3f}"
            f"  (n={scores.n_pairs})"
        )
    if args.dry_run:
        return EXIT_OK
    with _locked(out_dir):
        metrics.write_rouge_csv(rows, out_dir / "rouge_report.csv")
        _write_summary(
            out_dir / "rouge.summary.json",
            {
                "command": "rouge",
                "models": {model: scores.n_pairs for model, scores in rows},
                "scheme": args.scheme,
            },
            dry_run=False,
        )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    test_set = datasetio.read_jsonl(args.test)
    template = _load_template(cfg, "syntax_feedback")
    out_dir = Path(args.out_dir)
    if args.dry_run:
        _write_summary(
            out_dir,
            {"command": "eval", "test_records": len(test_set), "models": args.models},
            dry_run=True,
        )
        return EXIT_OK
    gateway = _build_gateway(cfg)
    generated = evalharness.run_generation(
        args.models, test_set, gateway, template, params=cfg.feedback_params
    )
    references = {r.meta.get("essay_id", ""): r.output for r in test_set}
    scores = evalharness.score_run(generated, references)
    distributions: dict[str, evalharness.RatingDistribution] = {}
    per_rater: dict[str, dict[str, evalharness.RatingDistribution]] = {}
    agreement: tuple[float, float] | None = None
    if args.ratings:
        ratings = evalharness.read_ratings_jsonl(args.ratings)
        distributions = evalharness.aggregate_ratings(ratings)
        if args.per_rater:
            per_rater = evalharness.aggregate_ratings_by_rater(ratings)
        try:
            agreement = evalharness.inter_rater_agreement(ratings)
        except EvalError:
            agreement = None
    deltas: dict[str, evalharness.RunDelta] = {}
    for base_id, ft_id in args.pairs or []:
        for model_id in (base_id, ft_id):
            if model_id not in scores and model_id not in distributions:
                raise EvalError(f"--pair model '{model_id}' not among evaluated models")
        base_frag = evalharness.EvalFragment(
            rouge={base_id: scores[base_id].scores} if base_id in scores else {},
            ratings={base_id: distributions[base_id]} if base_id in distributions else {},
        )
        ft_frag = evalharness.EvalFragment(
            rouge={base_id: scores[ft_id].scores} if ft_id in scores else {},
            ratings={base_id: distributions[ft_id]} if ft_id in distributions else {},
        )
        deltas.update(evalharness.compare_runs(base_frag, ft_frag))
    report = evalharness.EvalReport(
        scores=scores,
        distributions=distributions,
        deltas=deltas,
        run_meta={
            "endpoint": gateway.endpoint_label,
            "params": _params_digest(cfg.feedback_params),
            "dataset_sha256": datasetio.file_digest(args.test),
            "rating_aggregation": "pooled per model (300-style denominator)",
        },
    )
    n_excluded = {model: score.n_excluded for model, score in report.scores.items()}
    sys.stdout.write(evalharness.render_score_table_text(report.scores))
    if report.distributions:
        sys.stdout.write(evalharness.render_distribution_text(report.distributions))
    for rater, dists in per_rater.items():
        print(f"-- rater {rater}")
        sys.stdout.write(evalharness.render_distribution_text(dists))
    if agreement:
        print(f"inter-rater agreement {agreement[0]:.4f}, kappa {agreement[1]:.4f}")
    with _locked(out_dir):
        with (out_dir / "generations.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
            for model in sorted(generated):
                for result in generated[model]:
                    fh.write(
                        json.dumps(
                            {
                                "model": model,
                                "item_id": result.item_id,
                                "text": result.text,
                                "error": result.error,
                            },
                            ensure_ascii=False,
                            sort_keys=True,
                        )
                    )
                    fh.write("\n")
        metrics.write_rouge_csv(
            [(model, report.scores[model].scores) for model in sorted(report.scores)],
            out_dir / "rouge_report.csv",
        )
        (out_dir / "scores.txt").write_text(
            evalharness.render_score_table_text(report.scores), encoding="utf-8"
        )
        if report.distributions:
            evalharness.write_distribution_csv(report.distributions, out_dir / "rating_report.csv")
            (out_dir / "ratings.txt").write_text(
                evalharness.render_distribution_text(report.distributions), encoding="utf-8"
            )
        for rater, dists in per_rater.items():
            evalharness.write_distribution_csv(
                dists, out_dir / f"rating_report.rater-{rater}.csv"
            )
        if report.deltas:
            evalharness.write_delta_csv(report.deltas, out_dir / "delta_report.csv")
        _write_summary(
            out_dir / "eval.summary.json",
            {
                "command": "eval",
                "models": sorted(report.scores),
                "test_records": len(test_set),
                "excluded": n_excluded,
                "agreement": None
                if agreement is None
                else {"observed": agreement[0], "kappa": agreement[1]},
                **report.run_meta,
            },
            dry_run=False,
        )
    return EXIT_PARTIAL if any(n_excluded.values()) else EXIT_OK


def cmd_train_config(args: argparse.Namespace) -> int:
    load_config(args.config)
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise DatasetError(f"--set expects key=value, got '{item}'")
        key, raw = item.split("=", 1)
        overrides[key.strip()] = _parse_scalar(raw.strip())
    models = list(args.base_model or [])
    if args.baselines:
        models.extend(datasetio.PAPER_BASELINES)
    if not models:
        raise DatasetError("no base model given (use --base-model or --baselines)")
    out_dir = Path(args.out_dir)
    ctx = nullcontext() if args.dry_run else _locked(out_dir)
    with ctx:
        for model in models:
            config, text = datasetio.emit_train_config(
                model, overrides=overrides or None, out_dir=None if args.dry_run else out_dir
            )
            print(f"train_config.{model}.txt:")
            sys.stdout.write(text)
    return EXIT_OK


def _parse_scalar(raw: str):
    lowered = raw.lower()
    if lowered in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    items = load_items_jsonl(args.items)
    if args.dry_run:
        print(f"would serve {len(items)} items on {args.bind}")
        return EXIT_OK
    store_path = Path(args.store or cfg.paths.store)
    serve_annotation(
        args.bind,
        items,
        store_path,
        seed=cfg.seed,
        ui_dir=args.ui_dir,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syntaxforge",
        description="Build and evaluate essay-to-syntax-feedback instruction datasets.",
        epilog=(
            "exit codes: 0 ok, 2 config error, 3 input error, 4 gateway error, "
            "5 partial failure (some items excluded)"
        ),
    )
    parser.add_argument("--config", default=None, help="pipeline config YAML")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a corpus file and emit essays JSONL")
    p.add_argument("--corpus", default=None, help="corpus path (default from config)")
    p.add_argument("--format", choices=["tsv", "jsonl"], default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("scrub", help="replace anonymization placeholders via the gateway")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--exclusions", default=None)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_scrub)

    p = sub.add_parser("genfeedback", help="generate syntax feedback and emit records")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--exclusions", default=None)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_genfeedback)

    p = sub.add_parser("filter", help="apply the word-count filter")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["records", "essays"], default="records")
    p.add_argument("--min-words", type=int, default=None)
    p.add_argument("--max-words", type=int, default=None)
    p.add_argument("--exclusions", default=None)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("split", help="deterministic train/test split + manifest")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--test-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--stratify", action="store_true", help="apportion the test set per essay_set"
    )
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="token-length and category histograms")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scheme", default="word")
    p.add_argument("--bucket-width", type=int, default=50)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("rouge", help="score candidate/reference pairs")
    p.add_argument("--pairs", required=True, help="JSONL with candidate/reference[/model]")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scheme", default="word")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_rouge)

    p = sub.add_parser("eval", help="run models over the test set and report")
    p.add_argument("--test", required=True, help="test split JSONL")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratings", default=None, help="ratings export JSONL")
    p.add_argument(
        "--per-rater", action="store_true", help="also report per-rater distributions"
    )
    p.add_argument(
        "--pair",
        dest="pairs",
        action="append",
        type=lambda s: tuple(s.split("=", 1)),
        help="BASE=FINETUNED model pair for delta reporting (repeatable)",
    )
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-config", help="emit fine-tuning config files")
    p.add_argument("--base-model", action="append", default=None)
    p.add_argument("--baselines", action="store_true", help="emit the three reference baselines")
    p.add_argument("--set", action="append", default=None, metavar="KEY=VALUE")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_train_config)

    p = sub.add_parser("serve", help="serve the annotation API (and UI when built)")
    p.add_argument("--items", required=True, help="items JSONL (item_id/essay/feedback/model_id)")
    p.add_argument("--store", default=None, help="ratings store path (default from config)")
    p.add_argument("--bind", default="127.0.0.1:8400")
    p.add_argument("--ui-dir", default=None, help="static UI assets directory")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusError, DatasetError, TemplateError, EvalError, ParamError, feedback.FeedbackParseError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GatewayError as exc:
        print(f"gateway error: {exc}", file=sys.stderr)
        return EXIT_GATEWAY


if __name__ == "__main__":
    sys.exit(main())
