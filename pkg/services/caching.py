import hashlib
import logging

from aiocache import caches

from services.settings import get_cache_backend, get_cache_ttl

logger = logging.getLogger(__name__)

MEMORY_CONFIG = {
    'default': {
        'cache': "aiocache.SimpleMemoryCache",
        'serializer': {
            'class': "aiocache.serializers.NullSerializer",
        },
    }
}

# plans hold numpy arrays and graph references, so redis pickles them
REDIS_CONFIG = {
    'default': {
        'cache': "aiocache.RedisCache",
        'endpoint': "127.0.0.1",
        'port': 6379,
        'timeout': 1,
        'serializer': {
            'class': "aiocache.serializers.PickleSerializer",
        },
    }
}

caches.set_config(REDIS_CONFIG if get_cache_backend() == "redis" else MEMORY_CONFIG)


def gen_plan_key(kind: str, source: str, *parts) -> str:
    digest = hashlib.md5(
        "\x1f".join([source, *map(str, parts)]).encode()
    ).hexdigest()[:16]
    return f"{kind}:{digest}"


async def cached_or_build(key: str, build):
    """Return the cached value under key, building and storing it on a miss."""
    cache = caches.get('default')
    try:
        value = await cache.get(key)
    except Exception as e:
        logger.warning("cache read failed for %s: %s", key, e)
        value = None
    if value is not None:
        return value
    value = build()
    try:
        await cache.set(key, value, ttl=get_cache_ttl())
    except Exception as e:
        logger.warning("cache write failed for %s: %s", key, e)
    return value


async def clear_all_cache():
    """Drop every cached program and plan."""
    try:
        cache = caches.get('default')
        await cache.clear()
        return True
    except Exception as e:
        logger.error("Error clearing cache: %s", e)
        return False
