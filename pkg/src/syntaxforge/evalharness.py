"""Run models over the test set, score with ROUGE, aggregate human ratings.

Rating distributions pool all raters' records per model (one column per model,
as reported); per-rater breakdowns stay available through the raw records.
Generation failures are excluded from ROUGE means with the exclusion count
reported, never silently scored as zero.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .datasetio import InstructionRecord
from .llmgateway import ChatRequest, GatewayError, Gateway, GenerationParams
from .metrics import CorpusRouge, corpus_rouge
from .promptkit import PromptTemplate, render

logger = logging.getLogger(__name__)


class EvalError(Exception):
    pass


class RatingGrade(Enum):
    """Five-tier quality scale, A (best) to E (worst)."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"


GRADE_ORDER: tuple[RatingGrade, ...] = tuple(RatingGrade)


def rubric_text() -> str:
    """The bundled five-tier rubric definitions, served verbatim to raters."""
    return resources.files("syntaxforge").joinpath("data/rubric.txt").read_text("utf-8")


@dataclass(frozen=True)
class RatingRecord:
    item_id: str
    model_id: str
    rater_id: str
    grade: RatingGrade
    note: str = ""
    timestamp: str = ""


def rating_to_json(record: RatingRecord) -> dict:
    return {
        "item_id": record.item_id,
        "model_id": record.model_id,
        "rater_id": record.rater_id,
        "grade": record.grade.value,
        "note": record.note,
        "timestamp": record.timestamp,
    }


def rating_from_json(obj: dict) -> RatingRecord:
    return RatingRecord(
        item_id=obj["item_id"],
        model_id=obj["model_id"],
        rater_id=obj["rater_id"],
        grade=RatingGrade(obj["grade"]),
        note=obj.get("note", "") or "",
        timestamp=obj.get("timestamp", "") or "",
    )


@dataclass(frozen=True)
class RatingDistribution:
    """Grade counts and 2-decimal percentages for one model."""

    model_id: str
    counts: dict[RatingGrade, int]
    percentages: dict[RatingGrade, float]
    total: int


def aggregate_ratings(ratings: Iterable[RatingRecord]) -> dict[str, RatingDistribution]:
    """Pool all raters' records into one distribution per model."""
    seen: set[tuple[str, str, str]] = set()
    counts: dict[str, dict[RatingGrade, int]] = {}
    for record in ratings:
        key = (record.item_id, record.model_id, record.rater_id)
        if key in seen:
            raise EvalError(f"duplicate rating for item={key[0]} model={key[1]} rater={key[2]}")
        seen.add(key)
        per_model = counts.setdefault(record.model_id, {g: 0 for g in GRADE_ORDER})
        per_model[record.grade] += 1
    out: dict[str, RatingDistribution] = {}
    for model_id, grade_counts in counts.items():
        total = sum(grade_counts.values())
        percentages = {g: round(100.0 * c / total, 2) for g, c in grade_counts.items()}
        out[model_id] = RatingDistribution(
            model_id=model_id, counts=grade_counts, percentages=percentages, total=total
        )
    return out


def aggregate_ratings_by_rater(
    ratings: Iterable[RatingRecord],
) -> dict[str, dict[str, RatingDistribution]]:
    """Per-rater breakdown: rater_id -> model_id -> distribution."""
    by_rater: dict[str, list[RatingRecord]] = {}
    for record in ratings:
        by_rater.setdefault(record.rater_id, []).append(record)
    return {rater: aggregate_ratings(records) for rater, records in sorted(by_rater.items())}


@dataclass
class GenerationResult:
    item_id: str
    text: str | None
    error: str | None = None


def run_generation(
    models: Sequence[str],
    test_set: Sequence[InstructionRecord],
    gateway: Gateway,
    template: PromptTemplate,
    params: GenerationParams = GenerationParams(temperature=0.3, top_p=0.95, top_k=50),
) -> dict[str, list[GenerationResult]]:
    """Generate feedback for every (model, record) pair via the feedback prompt.

    Per-item failures are recorded and the run continues; a model whose items
    all fail raises an EvalError naming it.
    """
    if not models:
        raise EvalError("no models given")
    if not test_set:
        raise EvalError("test set is empty")
    results: dict[str, list[GenerationResult]] = {}
    for model in models:
        per_item: list[GenerationResult] = []
        failures = 0
        requests_list = []
        item_ids = []
        for record in test_set:
            prompt = render(template, {"essay": record.input})
            requests_list.append(ChatRequest(model=model, messages=prompt.messages, params=params))
            item_ids.append(record.meta.get("essay_id", record.meta.get("item_id", "")))
        for index, outcome in gateway.batch_complete(requests_list):
            item_id = item_ids[index]
            if isinstance(outcome, GatewayError):
                failures += 1
                per_item.append(GenerationResult(item_id=item_id, text=None, error=str(outcome)))
            else:
                per_item.append(GenerationResult(item_id=item_id, text=outcome.content))
        if failures == len(test_set):
            raise EvalError(f"endpoint unreachable for model '{model}': every item failed")
        results[model] = per_item
    return results


@dataclass(frozen=True)
class ModelScore:
    model_id: str
    scores: CorpusRouge
    n_excluded: int = 0


def score_run(
    generated: dict[str, list[GenerationResult]],
    references: dict[str, str],
) -> dict[str, ModelScore]:
    """Corpus ROUGE per model against the reference feedback texts."""
    out: dict[str, ModelScore] = {}
    for model, results in generated.items():
        missing = [r.item_id for r in results if r.text is not None and r.item_id not in references]
        if missing:
            raise EvalError(f"missing references for items: {', '.join(sorted(missing))}")
        pairs = [(r.text, references[r.item_id]) for r in results if r.text is not None]
        excluded = sum(1 for r in results if r.text is None)
        if not pairs:
            raise EvalError(f"model '{model}': no scorable outputs")
        out[model] = ModelScore(model_id=model, scores=corpus_rouge(pairs), n_excluded=excluded)
    return out


@dataclass(frozen=True)
class RunDelta:
    """Fine-tuned minus base, per model family."""

    rouge_f1: dict[str, float]  # rouge1/rouge2/rougeL
    grade_points: dict[RatingGrade, float]


def compare_runs(
    base: "EvalFragment",
    finetuned: "EvalFragment",
) -> dict[str, RunDelta]:
    """Per-family deltas; sign convention is fine-tuned minus base."""
    deltas: dict[str, RunDelta] = {}
    families = set(base.rouge) | set(finetuned.rouge) | set(base.ratings) | set(finetuned.ratings)
    for family in sorted(families):
        for side, fragment in (("base", base), ("fine-tuned", finetuned)):
            if family not in fragment.rouge and family not in fragment.ratings:
                raise EvalError(f"model '{family}' missing from the {side} fragment")
        rouge_delta: dict[str, float] = {}
        if family in base.rouge and family in finetuned.rouge:
            b, f = base.rouge[family], finetuned.rouge[family]
            rouge_delta = {
                "rouge1": f.rouge1.f1 - b.rouge1.f1,
                "rouge2": f.rouge2.f1 - b.rouge2.f1,
                "rougeL": f.rougeL.f1 - b.rougeL.f1,
            }
        elif family in base.rouge or family in finetuned.rouge:
            raise EvalError(f"model '{family}' has ROUGE scores on only one side")
        grade_delta: dict[RatingGrade, float] = {}
        if family in base.ratings and family in finetuned.ratings:
            b_pct = base.ratings[family].percentages
            f_pct = finetuned.ratings[family].percentages
            grade_delta = {g: f_pct[g] - b_pct[g] for g in GRADE_ORDER}
        elif family in base.ratings or family in finetuned.ratings:
            raise EvalError(f"model '{family}' has ratings on only one side")
        deltas[family] = RunDelta(rouge_f1=rouge_delta, grade_points=grade_delta)
    return deltas


@dataclass
class EvalFragment:
    """One side of a base-vs-fine-tuned comparison, keyed by model family."""

    rouge: dict[str, CorpusRouge] = field(default_factory=dict)
    ratings: dict[str, RatingDistribution] = field(default_factory=dict)


@dataclass
class EvalReport:
    scores: dict[str, ModelScore]
    distributions: dict[str, RatingDistribution]
    deltas: dict[str, RunDelta]
    run_meta: dict


def inter_rater_agreement(ratings: Sequence[RatingRecord]) -> tuple[float, float]:
    """Observed agreement and Cohen's kappa over co-rated (item, model) pairs.

    Observations are unordered rater pairs on each co-rated item; expected
    agreement uses each pair's per-rater marginal grade frequencies. With two
    raters this is exactly the classic two-rater kappa.
    """
    by_item: dict[tuple[str, str], dict[str, RatingGrade]] = {}
    for record in ratings:
        by_item.setdefault((record.item_id, record.model_id), {})[record.rater_id] = record.grade
    pair_obs: dict[tuple[str, str], list[tuple[RatingGrade, RatingGrade]]] = {}
    for grades in by_item.values():
        raters = sorted(grades)
        for i in range(len(raters)):
            for j in range(i + 1, len(raters)):
                pair = (raters[i], raters[j])
                pair_obs.setdefault(pair, []).append((grades[raters[i]], grades[raters[j]]))
    total = sum(len(obs) for obs in pair_obs.values())
    if total == 0:
        raise EvalError("no co-rated items: need >= 2 raters sharing >= 1 item")
    agree = sum(1 for obs in pair_obs.values() for a, b in obs if a == b)
    p_o = agree / total
    p_e = 0.0
    for observations in pair_obs.values():
        n = len(observations)
        left = {g: 0 for g in GRADE_ORDER}
        right = {g: 0 for g in GRADE_ORDER}
        for a, b in observations:
            left[a] += 1
            right[b] += 1
        pair_pe = sum((left[g] / n) * (right[g] / n) for g in GRADE_ORDER)
        p_e += pair_pe * (n / total)
    if p_e >= 1.0:
        return p_o, 1.0 if p_o >= 1.0 else 0.0
    kappa = (p_o - p_e) / (1.0 - p_e)
    return p_o, kappa


def render_score_table_text(scores: dict[str, ModelScore]) -> str:
    """Plain-text score rows: 'model: rouge1 / rouge2 / rougeL' (F1, 3 decimals)."""
    lines = []
    for model in sorted(scores):
        s = scores[model].scores
        line = f"{model}: {s.rouge1.f1:.3f} / {s.rouge2.f1:.3f} / {s.rougeL.f1:.3f}"
        if scores[model].n_excluded:
            line += f"  [{scores[model].n_excluded} excluded]"
        lines.append(line)
    return "\n".join(lines) + "\n"


def render_distribution_text(distributions: dict[str, RatingDistribution]) -> str:
    lines = []
    for model in sorted(distributions):
        dist = distributions[model]
        cells = "  ".join(
            f"{g.value} {dist.percentages[g]:.2f}% ({dist.counts[g]})" for g in GRADE_ORDER
        )
        lines.append(f"{model} [n={dist.total}]: {cells}")
    return "\n".join(lines) + "\n"


def write_distribution_csv(distributions: dict[str, RatingDistribution], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["model", "total"]
        for g in GRADE_ORDER:
            header += [f"{g.value}_count", f"{g.value}_pct"]
        writer.writerow(header)
        for model in sorted(distributions):
            dist = distributions[model]
            row: list = [model, dist.total]
            for g in GRADE_ORDER:
                row += [dist.counts[g], f"{dist.percentages[g]:.2f}"]
            writer.writerow(row)


def write_delta_csv(deltas: dict[str, RunDelta], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["model", "rouge1_f1_delta", "rouge2_f1_delta", "rougeL_f1_delta"]
        header += [f"{g.value}_pct_delta" for g in GRADE_ORDER]
        writer.writerow(header)
        for model in sorted(deltas):
            delta = deltas[model]
            row: list = [model]
            for metric in ("rouge1", "rouge2", "rougeL"):
                row.append(f"{delta.rouge_f1[metric]:.6f}" if delta.rouge_f1 else "")
            for g in GRADE_ORDER:
                row.append(f"{delta.grade_points[g]:.2f}" if delta.grade_points else "")
            writer.writerow(row)


def read_ratings_jsonl(path: str | Path) -> list[RatingRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(rating_from_json(json.loads(line)))
    return records
