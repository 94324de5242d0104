import pytest

import hiddenconvex as hc

# Catalog instances are immutable; build each once per session.
_CACHE = {}


def catalog_problem(name, **overrides):
    key = (name, tuple(sorted(overrides.items())))
    if key not in _CACHE:
        _CACHE[key] = hc.build(name, **overrides)
    return _CACHE[key]


@pytest.fixture(scope="session")
def neg_square():
    return catalog_problem("neg_square")


@pytest.fixture(scope="session")
def cosine():
    return catalog_problem("cosine")


@pytest.fixture(scope="session")
def cosine_clean():
    return catalog_problem("cosine", sigma=0.0)


@pytest.fixture(scope="session")
def posy_1d():
    return catalog_problem("posynomial_1d")


@pytest.fixture(scope="session")
def posy_3d():
    return catalog_problem("posynomial_3d")


@pytest.fixture(scope="session")
def revenue_1d():
    return catalog_problem("revenue_1d")


@pytest.fixture(scope="session")
def revenue_2d():
    return catalog_problem("revenue_2d")


@pytest.fixture(scope="session")
def chain_smooth():
    return catalog_problem("chain_smooth")


@pytest.fixture(scope="session")
def chain_max():
    return catalog_problem("chain_max")


@pytest.fixture(scope="session")
def all_catalog():
    return {name: catalog_problem(name) for name in sorted(hc.CATALOG)}


def manual_schedule(eta, T, rho=4.0, beta=None, batch=1):
    return hc.Schedule(theorem=hc.MANUAL, eta=eta, alpha=0.0, rho=rho, T=T,
                       beta=beta, batch=batch)
