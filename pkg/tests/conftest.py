import numpy as np
import pytest

from floodlense.config import load_config
from floodlense.fixtures import write_fixtures


@pytest.fixture(scope="session")
def fixture_tree(tmp_path_factory):
    """One shared synthetic fixture tree per test session."""
    root = tmp_path_factory.mktemp("fixture_tree")
    paths = write_fixtures(root, seed=42)
    paths["root"] = root
    return paths


@pytest.fixture(scope="session")
def fixture_config(fixture_tree):
    return load_config(fixture_tree["config"])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_uint8_raster(rng, h, w, c=3):
    return rng.integers(0, 256, size=(h, w, c), dtype=np.uint8)
