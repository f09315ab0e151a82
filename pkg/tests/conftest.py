import os

import numpy as np
import pytest

from ccdcluster.spatial import EnvelopeTable, envelope_cache_name, unit_ball_grid

SUITE_SEED = 0
REPLICATES = 99


def _table(cache_dir: str, dimension: int) -> EnvelopeTable:
    path = os.path.join(
        cache_dir, envelope_cache_name(dimension, REPLICATES, SUITE_SEED)
    )
    if os.path.exists(path):
        return EnvelopeTable.load(path)
    return EnvelopeTable(
        dimension=dimension,
        replicates=REPLICATES,
        seed=SUITE_SEED,
        cache_path=path,
    )


@pytest.fixture(scope="session")
def envelope_cache_dir(request) -> str:
    # persisted via pytest's own cache so repeated runs skip the Monte Carlo cost
    return str(request.config.cache.mkdir("envelopes"))


@pytest.fixture(scope="session")
def table2(envelope_cache_dir) -> EnvelopeTable:
    table = _table(envelope_cache_dir, 2)
    yield table
    if table.dirty and table.cache_path:
        table.save()


@pytest.fixture(scope="session")
def table5(envelope_cache_dir) -> EnvelopeTable:
    table = _table(envelope_cache_dir, 5)
    yield table
    if table.dirty and table.cache_path:
        table.save()


@pytest.fixture(scope="session")
def table4(envelope_cache_dir) -> EnvelopeTable:
    table = _table(envelope_cache_dir, 4)
    yield table
    if table.dirty and table.cache_path:
        table.save()


def two_blob_fixture(seed: int = 42, n: int = 50) -> np.ndarray:
    """Two unit-box uniform blobs separated by a 1.5-wide gap."""
    rng = np.random.default_rng(seed)
    left = rng.random((n, 2))
    right = rng.random((n, 2)) + [2.5, 0.0]
    return np.vstack([left, right])
