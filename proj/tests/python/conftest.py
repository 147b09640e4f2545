import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture
def data_dir():
    return ROOT / "data"


@pytest.fixture
def golden_dir():
    return ROOT / "tests" / "golden"


@pytest.fixture
def cli():
    path = os.environ.get("PCNF_CLI")
    if not path:
        pytest.skip("PCNF_CLI is not set")
    return path
