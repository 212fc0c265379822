from importlib import resources
from pathlib import Path

import pytest

DATA = Path(str(resources.files("cohort_audit.data")))


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def study_path() -> Path:
    return DATA / "published_study.json"


@pytest.fixture
def benchmark_path() -> Path:
    return DATA / "korea_benchmark.json"


@pytest.fixture
def consistent_path() -> Path:
    return DATA / "consistent_study.json"
