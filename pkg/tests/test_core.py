import threading

import pytest

from metastab.core.cache import LRUCache
from metastab.core.config import get_settings
from metastab.core.rng import stream


def test_streams_depend_only_on_their_key():
    a = stream(5, "contact", 3).random(4)
    b = stream(5, "contact", 3).random(4)
    assert a.tolist() == b.tolist()
    assert a.tolist() != stream(5, "contact", 4).random(4).tolist()
    assert a.tolist() != stream(5, "pairing", 3).random(4).tolist()
    with pytest.raises(ValueError):
        stream(-1, "contact")


def test_lru_cache_evicts_least_recent():
    cache = LRUCache(maxsize=2)
    cache.set("a", 1)
    cache.set("b", 2)
    assert cache.get("a") == 1
    cache.set("c", 3)
    assert cache.get("b") is None
    assert len(cache) == 2
    calls = []
    assert cache.get_or_create("d", lambda: calls.append(1) or 4) == 4
    assert cache.get_or_create("d", lambda: calls.append(1) or 5) == 4
    assert calls == [1]


def test_lru_cache_under_threads():
    cache = LRUCache(maxsize=50)

    def work(offset):
        for i in range(200):
            cache.set((offset, i), i)
            cache.get((offset, i - 1))

    threads = [threading.Thread(target=work, args=(t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cache) == 50


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("METASTAB_ENUMERATION_CAP", "123")
    monkeypatch.setenv("METASTAB_THREADS", "0")
    settings = get_settings()
    assert settings.enumeration_cap == 123
    assert settings.resolved_threads() >= 1
    assert get_settings().default_seed == 20240917
