"""Reference cache database and the reference service."""

import asyncio

import aiosqlite
import numpy as np
import pytest

from amabench import init_cache
from amabench.config import get_settings
from amabench.models import ReferenceCacheDB, database_path, init_database, load_instance
from amabench.services import get_reference_service, solve_monolithic
from amabench.services import reference_service
from amabench.services.reference_service import REFERENCE_KIND, ReferenceService


def test_database_path_prefers_cache_dir(tmp_path):
    assert database_path(tmp_path / "x.json").parent == get_settings().cache_dir


def test_database_path_falls_back_to_instance_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(get_settings(), "cache_dir", None)
    assert database_path(tmp_path / "x.json").parent == tmp_path


def test_cache_roundtrip(tmp_path):
    path = tmp_path / "refs.db"

    async def scenario():
        await init_database(path)
        assert await ReferenceCacheDB.get(path, "abc", "dmpc", 10) is None
        await ReferenceCacheDB.put(path, "abc", "dmpc", 10, {"value": 1.5})
        await ReferenceCacheDB.put(path, "abc", "dmpc", 10, {"value": 2.5})
        await ReferenceCacheDB.put(path, "abc", "dmpc", 20, {"value": 3.5})
        assert await ReferenceCacheDB.get(path, "abc", "dmpc", 10) == {"value": 2.5}
        assert await ReferenceCacheDB.count(path) == 2
        assert await ReferenceCacheDB.clear(path, "other") == 0
        assert await ReferenceCacheDB.clear(path, "abc") == 2
        return await ReferenceCacheDB.count(path)

    assert asyncio.run(scenario()) == 0


def test_reference_service_caches_by_budget(instance_file):
    instance, _, digest = load_instance(instance_file)
    service = get_reference_service()
    assert service is get_reference_service()

    async def scenario():
        first = await service.get_reference(instance, digest, instance_file, 4)
        again = await service.get_reference(instance, digest, instance_file, 4)
        budget = get_settings().reference_multiplier * 4
        stored = await ReferenceCacheDB.get(database_path(instance_file), digest, REFERENCE_KIND, budget)
        removed = await service.clear(instance_file, digest)
        return first, again, stored, removed

    first, again, stored, removed = asyncio.run(scenario())
    assert first == again
    assert stored is not None and removed == 1
    assert first.budget == get_settings().reference_multiplier * 4
    u_star, cost = solve_monolithic(instance)
    np.testing.assert_allclose(first.u_star, u_star)
    assert first.primal_optimum == pytest.approx(cost)
    assert first.dual_optimum == first.primal_optimum


def test_init_cache_creates_the_database(tmp_path, capsys):
    asyncio.run(init_cache.main(tmp_path / "instance.json"))
    path = database_path(tmp_path / "instance.json")
    assert path.exists()
    assert str(path) in capsys.readouterr().out
    assert asyncio.run(ReferenceCacheDB.count(path)) == 0


def test_cache_operations_need_an_initialized_schema(tmp_path):
    with pytest.raises(aiosqlite.OperationalError):
        asyncio.run(ReferenceCacheDB.count(tmp_path / "refs.db"))


def test_reference_service_creates_the_schema_once(instance_file, monkeypatch):
    instance, _, digest = load_instance(instance_file)
    calls = []

    async def counting_init(path):
        calls.append(path)
        await init_database(path)

    monkeypatch.setattr(reference_service, "init_database", counting_init)
    service = ReferenceService()

    async def scenario():
        await service.get_reference(instance, digest, instance_file, 2)
        await service.get_reference(instance, digest, instance_file, 2)
        return await service.clear(instance_file, digest)

    assert asyncio.run(scenario()) == 1
    assert calls == [database_path(instance_file)]
