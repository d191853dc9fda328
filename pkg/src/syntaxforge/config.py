"""Pipeline configuration: a YAML key/value tree mapped onto dataclasses.

Secrets never live in the file; the API key comes from SYNTAXFORGE_API_KEY
and the endpoint may come from SYNTAXFORGE_BASE_URL. A single seed drives all
randomness (split membership, annotation shuffles).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .corpus import LengthFilterPolicy
from .datasetio import SplitSpec
from .llmgateway import GenerationParams


class ConfigError(Exception):
    pass


@dataclass
class PathsConfig:
    corpus: str = "corpus.tsv"
    cache_dir: str = "out/cache"
    output_dir: str = "out"
    template_dir: str | None = None  # None -> bundled templates
    store: str = "out/ratings.jsonl"


@dataclass
class EndpointConfig:
    base_url: str | None = None  # None -> SYNTAXFORGE_BASE_URL
    model: str = "gpt-3.5-turbo-0125"
    completions_path: str = "/chat/completions"
    send_top_k: bool = False
    mock_script: str | None = None  # set -> offline scripted backend


@dataclass
class RetryLimits:
    scrub: int = 2
    feedback_parse: int = 1


@dataclass
class PipelineConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    filter: LengthFilterPolicy = field(default_factory=LengthFilterPolicy)
    split: SplitSpec = field(default_factory=lambda: SplitSpec(test_size=300, seed=0))
    scrub_params: GenerationParams = field(
        default_factory=lambda: GenerationParams(temperature=0.3, top_p=0.95, top_k=50)
    )
    feedback_params: GenerationParams = field(
        default_factory=lambda: GenerationParams(temperature=0.3, top_p=0.95, top_k=50)
    )
    concurrency: int = 4
    retries: RetryLimits = field(default_factory=RetryLimits)

    def validate(self) -> None:
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        try:
            self.scrub_params.validate()
            self.feedback_params.validate()
        except Exception as exc:
            raise ConfigError(f"bad generation params: {exc}") from exc
        if self.split.test_size < 0:
            raise ConfigError("split.test_size must be >= 0")


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys: {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    """Load a config file; a missing path yields pure defaults."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    cfg = PipelineConfig()
    plain = dict(data)
    if "seed" in plain:
        cfg.seed = int(plain.pop("seed"))
        cfg.split = SplitSpec(test_size=cfg.split.test_size, seed=cfg.seed)
    if "paths" in plain:
        cfg.paths = _build(PathsConfig, plain.pop("paths"), "paths")
    if "endpoint" in plain:
        cfg.endpoint = _build(EndpointConfig, plain.pop("endpoint"), "endpoint")
    if "filter" in plain:
        section = plain.pop("filter")
        try:
            cfg.filter = _build(LengthFilterPolicy, section, "filter")
        except ValueError as exc:
            raise ConfigError(f"filter: {exc}") from exc
    if "split" in plain:
        section = dict(plain.pop("split"))
        section.setdefault("seed", cfg.seed)
        cfg.split = _build(SplitSpec, section, "split")
    if "generation" in plain:
        gen = plain.pop("generation")
        if not isinstance(gen, dict):
            raise ConfigError("generation: expected a mapping")
        if "scrub" in gen:
            cfg.scrub_params = _build(GenerationParams, gen["scrub"], "generation.scrub")
        if "feedback" in gen:
            cfg.feedback_params = _build(GenerationParams, gen["feedback"], "generation.feedback")
        unknown = sorted(set(gen) - {"scrub", "feedback"})
        if unknown:
            raise ConfigError(f"generation: unknown keys: {', '.join(unknown)}")
    if "retries" in plain:
        cfg.retries = _build(RetryLimits, plain.pop("retries"), "retries")
    if "concurrency" in plain:
        cfg.concurrency = int(plain.pop("concurrency"))
    unknown = sorted(plain)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {', '.join(unknown)}")
    cfg.validate()
    return cfg
