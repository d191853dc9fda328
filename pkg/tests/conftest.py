from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def sample_tsv() -> Path:
    return FIXTURES / "asap_sample.tsv"


@pytest.fixture(scope="session")
def mock_script_path() -> Path:
    return FIXTURES / "mock_script.json"


def write_pipeline_config(
    path: Path,
    *,
    cache_dir: Path,
    mock_script: Path,
    seed: int = 20240513,
    test_size: int = 5,
) -> Path:
    """Config file pointing every stage at the scripted mock backend."""
    path.write_text(
        "\n".join(
            [
                f"seed: {seed}",
                "paths:",
                f"  cache_dir: {cache_dir}",
                "endpoint:",
                "  model: gpt-3.5-turbo-0125",
                f"  mock_script: {mock_script}",
                "split:",
                f"  test_size: {test_size}",
                "concurrency: 2",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return path
