import asyncio

import pytest

from errors import ConfigError
from services import settings
from services.caching import cached_or_build, gen_plan_key
from services.validators import (
    validate_assignment,
    validate_finite,
    validate_identifier,
    validate_order_list,
    validate_range_spec,
)


class TestValidators:

    def test_identifier(self):
        assert validate_identifier("d1") == {'is_valid': True, 'data': "d1"}
        assert not validate_identifier("1d")['is_valid']
        assert not validate_identifier("")['is_valid']

    def test_finite(self):
        assert validate_finite("2.5")['data'] == 2.5
        assert not validate_finite("inf")['is_valid']
        assert not validate_finite("nan")['is_valid']
        assert not validate_finite(None)['is_valid']

    def test_assignment(self):
        assert validate_assignment("S=100")['data'] == ("S", 100.0)
        assert validate_assignment(" V = -0.5")['data'] == ("V", -0.5)
        assert not validate_assignment("S")['is_valid']
        assert not validate_assignment("S=abc")['is_valid']

    def test_range_spec(self):
        assert validate_range_spec("S=90:110, V=0.1:0.2")['data'] == {"S": (90.0, 110.0), "V": (0.1, 0.2)}
        assert not validate_range_spec("S=110:90")['is_valid']
        assert not validate_range_spec("S=90")['is_valid']

    @pytest.mark.parametrize("text, orders", [
        ("0..5", [0, 1, 2, 3, 4, 5]),
        ("3,1,1", [1, 3]),
        ("2", [2]),
    ])
    def test_order_list(self, text, orders):
        assert validate_order_list(text, 16)['data'] == orders

    @pytest.mark.parametrize("text", ["", "a..b", "0..17", "-1,2", "3..1"])
    def test_bad_order_list(self, text):
        assert not validate_order_list(text, 16)['is_valid']


class TestSettings:

    def test_defaults(self, monkeypatch):
        for name in ("ADTOOL_CACHE_TTL", "ADTOOL_BENCH_SEED", "ADTOOL_LOG_LEVEL"):
            monkeypatch.delenv(name, raising=False)
        assert settings.get_order_cap() == settings.DEFAULT_ORDER_CAP
        assert settings.get_cache_ttl() == settings.DEFAULT_CACHE_TTL
        assert settings.get_bench_seed() == settings.DEFAULT_BENCH_SEED
        assert settings.get_log_level() == "WARNING"

    def test_order_cap_is_read_per_call(self, monkeypatch):
        monkeypatch.setenv("ADTOOL_ORDER_CAP", "4")
        assert settings.get_order_cap() == 4

    @pytest.mark.parametrize("raw", ["four", "0", "-3"])
    def test_bad_integers(self, monkeypatch, raw):
        monkeypatch.setenv("ADTOOL_ORDER_CAP", raw)
        with pytest.raises(ConfigError):
            settings.get_order_cap()


class TestCaching:

    def test_plan_keys(self):
        key = gen_plan_key("plan", "y = x;", ["y"], ["d(x)"])
        assert key.startswith("plan:")
        assert key == gen_plan_key("plan", "y = x;", ["y"], ["d(x)"])
        assert key != gen_plan_key("plan", "y = x;", ["y"], ["d<2>(x)"])

    def test_build_runs_once(self, empty_cache):
        calls = []

        def build():
            calls.append(1)
            return {"built": len(calls)}

        async def twice():
            first = await cached_or_build("test:once", build)
            second = await cached_or_build("test:once", build)
            return first, second

        first, second = asyncio.run(twice())
        assert first == second == {"built": 1}
        assert len(calls) == 1
