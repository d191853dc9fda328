#!/usr/bin/env python3
"""End-to-end demo on the bundled 20-essay fixture with the scripted mock.

Runs ingest -> scrub -> genfeedback -> filter -> split, emits the baseline
train configs, scores the test split against the same mock (an echo, so every
ROUGE metric is 1.0), and writes annotation items for `syntaxforge serve`.

Everything is offline and deterministic; run it twice and the outputs under
out/demo are byte-identical.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from syntaxforge import cli
from syntaxforge.datasetio import read_jsonl

FIXTURES = ROOT / "tests" / "fixtures"
OUT = ROOT / "out" / "demo"


def sh(*argv: str) -> None:
    code = cli.main(list(argv))
    if code not in (0, 5):
        raise SystemExit(f"command {argv} exited {code}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    config = OUT / "config.yaml"
    config.write_text(
        "\n".join(
            [
                "seed: 20240513",
                "paths:",
                f"  cache_dir: {OUT / 'cache'}",
                "endpoint:",
                "  model: gpt-3.5-turbo-0125",
                f"  mock_script: {FIXTURES / 'mock_script.json'}",
                "split:",
                "  test_size: 5",
            ]
        )
        + "\n",
        encoding="utf-8",
    )

    sh("--config", str(config), "ingest",
       "--corpus", str(FIXTURES / "asap_sample.tsv"), "--out", str(OUT / "essays.jsonl"))
    sh("--config", str(config), "scrub",
       "--in", str(OUT / "essays.jsonl"), "--out", str(OUT / "scrubbed.jsonl"))
    sh("--config", str(config), "genfeedback",
       "--in", str(OUT / "scrubbed.jsonl"), "--out", str(OUT / "records.jsonl"))
    sh("--config", str(config), "filter",
       "--in", str(OUT / "records.jsonl"), "--out", str(OUT / "filtered.jsonl"))
    sh("--config", str(config), "split",
       "--in", str(OUT / "filtered.jsonl"), "--out-dir", str(OUT))
    sh("--config", str(config), "stats",
       "--in", str(OUT / "filtered.jsonl"), "--out-dir", str(OUT / "stats"))
    sh("--config", str(config), "train-config", "--baselines", "--out-dir", str(OUT / "configs"))
    sh("--config", str(config), "eval",
       "--test", str(OUT / "test.jsonl"), "--models", "gpt-3.5-turbo-0125",
       "--out-dir", str(OUT / "eval"))

    # Annotation items from the test split (model identity stays server-side).
    items_path = OUT / "annotation_items.jsonl"
    with items_path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in read_jsonl(OUT / "test.jsonl"):
            fh.write(
                json.dumps(
                    {
                        "item_id": record.meta["essay_id"],
                        "essay": record.input,
                        "feedback": record.output,
                        "model_id": record.meta["model"],
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
            fh.write("\n")

    print(f"\ndemo outputs in {OUT}")
    print("to rate the test split in a browser:")
    print(f"  syntaxforge serve --items {items_path} --store {OUT / 'ratings.jsonl'} "
          f"--ui-dir frontend/dist")


if __name__ == "__main__":
    main()
