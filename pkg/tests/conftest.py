import numpy as np
import pytest

from kinetic_manifold import build_canonical, build_decomposition, classify, registry_model, taylor_expand


@pytest.fixture(scope="session")
def models():
    return {name: registry_model(name) for name in ("gnl-min", "gnl-rich", "ldg-min", "nonchar")}


@pytest.fixture(scope="session")
def decs(models):
    return {name: build_decomposition(m) for name, m in models.items()}


@pytest.fixture(scope="session")
def frames(decs):
    return {name: build_canonical(d) for name, d in decs.items()}


@pytest.fixture(scope="session")
def classes(models):
    return {name: classify(m) for name, m in models.items()}


@pytest.fixture(scope="session")
def gnl(models, decs, frames, classes):
    """gnl-min bundle with a cubic expansion."""
    name = "gnl-min"
    exp = taylor_expand(decs[name], models[name], k=3, frame=frames[name])
    return models[name], decs[name], frames[name], classes[name], exp


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
