"""Instruction-dataset emission, deterministic train/test splitting, train config.

Records are (instruction, input essay, output feedback) triples. The split is
a seeded shuffle realized as a SHA-256-keyed permutation so membership is
reproducible across platforms and interpreter versions. The training config
carries the fine-tuning recipe (LoRA rank/alpha, epochs, batch size, schedule)
and the inference sampling defaults; actually running a trainer is out of
scope, only the config is emitted.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import detect_placeholders
from .feedback import FeedbackParseError, parse_feedback
from .llmgateway import GenerationParams

logger = logging.getLogger(__name__)

DEFAULT_INSTRUCTION = (
    "Review the following student essay and provide syntax feedback covering "
    "misspelled words, conjunctions and linking phrases, modifiers, prepositions, "
    "modal verbs, punctuation, and articles. Quote each erroneous passage, give "
    "a correction, and explain it briefly."
)

PAPER_BASELINES = (
    "Llama-2-7b-chat-hf",
    "Llama-2-13b-chat-hf",
    "Mistral-7B-Instruct-v0.2",
)


class DatasetError(Exception):
    pass


class RecordValidationError(DatasetError):
    def __init__(self, index: int, reasons: list[str]):
        super().__init__(f"record {index} violates invariants: {'; '.join(reasons)}")
        self.index = index
        self.reasons = reasons


@dataclass
class InstructionRecord:
    instruction: str
    input: str
    output: str
    meta: dict[str, str] = field(default_factory=dict)


def record_violations(record: InstructionRecord) -> list[str]:
    """Invariant check: scrubbed input, re-parseable output."""
    reasons = []
    spans = detect_placeholders(record.input)
    if spans:
        reasons.append(f"input contains placeholder-pattern matches (e.g. {spans[0].raw})")
    try:
        parse_feedback(record.output)
    except FeedbackParseError as exc:
        reasons.append(f"output does not parse as feedback: {exc}")
    return reasons


def record_to_json(record: InstructionRecord) -> dict:
    return {
        "instruction": record.instruction,
        "input": record.input,
        "output": record.output,
        "meta": record.meta,
    }


def record_from_json(obj: dict) -> InstructionRecord:
    return InstructionRecord(
        instruction=obj["instruction"],
        input=obj["input"],
        output=obj["output"],
        meta={str(k): str(v) for k, v in (obj.get("meta") or {}).items()},
    )


def emit_jsonl(records: list[InstructionRecord], path: str | Path, strict: bool = True) -> int:
    """Write records as JSONL (UTF-8, LF, stable key order); returns the count.

    Strict mode rejects the first invariant-violating record with its index;
    lenient mode logs a warning and writes it anyway.
    """
    path = Path(path)
    for index, record in enumerate(records):
        reasons = record_violations(record)
        if not reasons:
            continue
        if strict:
            raise RecordValidationError(index, reasons)
        logger.warning("record %d violates invariants: %s", index, "; ".join(reasons))
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record_to_json(record), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
    return len(records)


def read_jsonl(path: str | Path) -> list[InstructionRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(record_from_json(json.loads(line)))
    return records


@dataclass(frozen=True)
class SplitSpec:
    test_size: int
    seed: int = 0


def _shuffle_rank(seed: int, index: int) -> str:
    return hashlib.sha256(f"{seed}\x1f{index}".encode("ascii")).hexdigest()


def _allocate_per_stratum(sizes: dict[str, int], test_size: int) -> dict[str, int]:
    """Largest-remainder apportionment of test_size across strata."""
    total = sum(sizes.values())
    quotas = {k: test_size * n / total for k, n in sizes.items()}
    take = {k: int(q) for k, q in quotas.items()}
    remainder = test_size - sum(take.values())
    by_fraction = sorted(sizes, key=lambda k: (-(quotas[k] - take[k]), k))
    for key in by_fraction[:remainder]:
        take[key] += 1
    return take


def split(records: list, spec: SplitSpec, stratify_key=None) -> tuple[list, list]:
    """Deterministic (train, test) partition; both halves keep input order.

    With stratify_key (a record -> label function), test membership is
    apportioned proportionally across strata before the seeded selection,
    keeping stylistically distinct groups represented in both halves.
    """
    n = len(records)
    if spec.test_size > n:
        raise DatasetError(f"test_size {spec.test_size} exceeds corpus size {n}")
    if stratify_key is None:
        order = sorted(range(n), key=lambda i: _shuffle_rank(spec.seed, i))
        test_indices = set(order[: spec.test_size])
    else:
        strata: dict[str, list[int]] = {}
        for i, record in enumerate(records):
            strata.setdefault(str(stratify_key(record)), []).append(i)
        take = _allocate_per_stratum({k: len(v) for k, v in strata.items()}, spec.test_size)
        test_indices = set()
        for key, indices in strata.items():
            order = sorted(indices, key=lambda i: _shuffle_rank(spec.seed, i))
            test_indices.update(order[: take[key]])
    train = [records[i] for i in range(n) if i not in test_indices]
    test = [records[i] for i in range(n) if i in test_indices]
    return train, test


@dataclass(frozen=True)
class TrainConfig:
    """Fine-tuning recipe with the established defaults."""

    base_model: str
    lora_r: int = 32
    lora_alpha: int = 64
    epochs: int = 3
    total_batch_size: int = 16
    learning_rate: float = 3e-4
    schedule: str = "cosine"
    warmup_ratio: float = 0.1
    inference: GenerationParams = GenerationParams(temperature=0.3, top_p=0.95, top_k=50)


_TRAIN_CONFIG_KEYS = {
    "base_model",
    "lora_r",
    "lora_alpha",
    "epochs",
    "total_batch_size",
    "learning_rate",
    "schedule",
    "warmup_ratio",
    "inference.temperature",
    "inference.top_p",
    "inference.top_k",
    "inference.max_tokens",
}


def serialize_train_config(config: TrainConfig) -> str:
    """Flat sorted key=value lines; byte-stable for golden-file comparison."""
    flat: dict[str, object] = {
        "base_model": config.base_model,
        "lora_r": config.lora_r,
        "lora_alpha": config.lora_alpha,
        "epochs": config.epochs,
        "total_batch_size": config.total_batch_size,
        "learning_rate": config.learning_rate,
        "schedule": config.schedule,
        "warmup_ratio": config.warmup_ratio,
        "inference.temperature": config.inference.temperature,
        "inference.top_p": config.inference.top_p,
        "inference.top_k": config.inference.top_k,
        "inference.max_tokens": config.inference.max_tokens,
    }
    lines = []
    for key in sorted(flat):
        value = flat[key]
        lines.append(f"{key}={'' if value is None else value}")
    return "\n".join(lines) + "\n"


def emit_train_config(
    base_model: str,
    overrides: dict | None = None,
    out_dir: str | Path | None = None,
) -> tuple[TrainConfig, str]:
    """Build a TrainConfig from defaults plus overrides; optionally write it.

    Override keys are the flat serialized names; unknown keys are errors.
    Returns the config and its serialized text.
    """
    if not base_model:
        raise DatasetError("base_model must be non-empty")
    config = TrainConfig(base_model=base_model)
    if overrides:
        unknown = sorted(set(overrides) - _TRAIN_CONFIG_KEYS - {"base_model"})
        if unknown:
            raise DatasetError(f"unknown train-config keys: {', '.join(unknown)}")
        top = {k: v for k, v in overrides.items() if not k.startswith("inference.")}
        config = replace(config, **top)
        inf = {k.split(".", 1)[1]: v for k, v in overrides.items() if k.startswith("inference.")}
        if inf:
            config = replace(config, inference=replace(config.inference, **inf))
    text = serialize_train_config(config)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"train_config.{base_model}.txt").write_text(text, encoding="utf-8")
    return config, text


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
