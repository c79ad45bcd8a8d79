import os

import dotenv

from errors import ConfigError

dotenv.load_dotenv()

DEFAULT_ORDER_CAP = 16
DEFAULT_CACHE_TTL = 600
DEFAULT_BENCH_SEED = 20240607


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def get_order_cap() -> int:
    return _int_env("ADTOOL_ORDER_CAP", DEFAULT_ORDER_CAP)


def get_cache_ttl() -> int:
    return _int_env("ADTOOL_CACHE_TTL", DEFAULT_CACHE_TTL)


def get_bench_seed() -> int:
    return _int_env("ADTOOL_BENCH_SEED", DEFAULT_BENCH_SEED)


def get_log_level() -> str:
    return os.getenv("ADTOOL_LOG_LEVEL", "WARNING").upper()


def get_cache_backend() -> str:
    return os.getenv("ADTOOL_CACHE", "memory").lower()
