import asyncio
from pathlib import Path

import pytest

from services.caching import clear_all_cache
from services.parser import parse_file

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

BS_INPUTS = {"S": 100.0, "K": 102.0, "V": 0.15, "T": 0.5, "R": 0.01}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def bs_inputs() -> dict[str, float]:
    return dict(BS_INPUTS)


@pytest.fixture
def bs_program():
    return parse_file(str(FIXTURES / "black_scholes.ad"))


@pytest.fixture
def bs_vega_program():
    return parse_file(str(FIXTURES / "black_scholes_vega.ad"))


@pytest.fixture
def exp_cos_program():
    return parse_file(str(FIXTURES / "exp_cos.ad"))


@pytest.fixture(autouse=True)
def default_order_cap(monkeypatch):
    monkeypatch.delenv("ADTOOL_ORDER_CAP", raising=False)


@pytest.fixture
def empty_cache():
    asyncio.run(clear_all_cache())
    yield
    asyncio.run(clear_all_cache())
