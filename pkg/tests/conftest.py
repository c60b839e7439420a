import pathlib

import pytest

from symcap.modelfile import load_model

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

MODEL_NAMES = [
    "b2",
    "b2_lin",
    "e1x",
    "dgla",
    "cdga_aug",
    "complex",
    "broken",
]


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


@pytest.fixture(scope="session")
def models() -> dict:
    return {name: load_model(FIXTURES / f"{name}.model") for name in MODEL_NAMES}
