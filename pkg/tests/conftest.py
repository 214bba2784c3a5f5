import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from genusmaps.combmap import CombinatorialMap, plane_tree
from genusmaps.enumeration import labeled_maps, pointed_quads

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def connected_maps(draw, max_edges=6):
    """Random connected rooted maps: a random rotation on 2n half-edges,
    retried until connected."""
    n = draw(st.integers(1, max_edges))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    while True:
        perm = list(range(2 * n))
        rng.shuffle(perm)
        m = CombinatorialMap(tuple(perm), rng.randrange(2 * n))
        if m.is_connected():
            return m


@st.composite
def dyck_words(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    while True:
        w = [1] * n + [-1] * n
        rng.shuffle(w)
        h = 0
        ok = True
        for s in w:
            h += s
            if h < 0:
                ok = False
                break
        if ok:
            return w


@st.composite
def plane_trees(draw, max_n=12):
    return plane_tree(draw(dyck_words(max_n)))


@pytest.fixture(scope="session")
def exhaustive_pointed():
    """Exhaustive pointed quadrangulations keyed by (g, k, n)."""
    cache = {}

    def get(g, k, n):
        if (g, k, n) not in cache:
            cache[g, k, n] = pointed_quads(g, k, n)
        return cache[g, k, n]
    return get


@pytest.fixture(scope="session")
def exhaustive_labeled():
    cache = {}

    def get(g, k, n):
        if (g, k, n) not in cache:
            cache[g, k, n] = labeled_maps(g, k, n)
        return cache[g, k, n]
    return get
