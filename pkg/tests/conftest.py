import os
import sys
from pathlib import Path

import pytest


# Make sure the repository root is on sys.path so `import metastab` works
# under every pytest import mode.
_REPO_DIR = Path(__file__).resolve().parents[1]
if str(_REPO_DIR) not in sys.path:
    sys.path.insert(0, str(_REPO_DIR))


@pytest.fixture(scope="session", autouse=True)
def settings_env(tmp_path_factory):
    # Settings are read per call, so env overrides apply immediately.
    scratch = tmp_path_factory.mktemp("settings")
    os.environ["METASTAB_THREADS"] = "1"
    os.environ["METASTAB_DEFAULT_SEED"] = "20240917"
    os.environ.setdefault("METASTAB_LOG_LEVEL", "WARNING")
    yield scratch


@pytest.fixture(scope="session")
def er16():
    from metastab.services.graph import gen_erdos_renyi

    return gen_erdos_renyi(16, 0.5, seed=7)


@pytest.fixture(scope="session")
def er10():
    from metastab.services.graph import gen_erdos_renyi

    return gen_erdos_renyi(10, 0.5, seed=3)


@pytest.fixture(scope="session")
def two_triangles():
    from metastab.services.graph import Graph

    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
