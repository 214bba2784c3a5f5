from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from genusmaps.bijection import pointed_key, round_trip_ok
from genusmaps.combmap import bfs_distances, canonical_form
from genusmaps.enumeration import exhaustive_quads, forest_contours, pointed_quads
from genusmaps.quad import enumerate_delays, validate_pointed
from genusmaps.sampler import (
    SamplerConfig,
    attach_marks,
    exact_scheme_table,
    rng_for,
    sample,
    sample_labeled,
    uniform_dyck,
    uniform_forest,
)


@given(st.integers(1, 4), st.integers(0, 12), st.integers(0, 2**32))
def test_uniform_forest_is_a_forest(r, extra, seed):
    tau = r + 2 * extra
    c, z = uniform_forest(r, tau, np.random.default_rng(seed))
    assert len(c) == len(z) == tau + 1
    assert c[-1] == -r and min(c[:-1]) > -r
    assert all(abs(b - a) == 1 for a, b in zip(c, c[1:]))
    assert z[0] == 0


def test_uniform_forest_law():
    rng = np.random.default_rng(1)
    r, tau = 2, 8
    support = list(forest_contours(r, tau))
    counts = Counter()
    n = 6000
    for _ in range(n):
        c, _ = uniform_forest(r, tau, rng)
        counts[tuple(np.diff(c))] += 1
    assert set(counts) == set(support)
    assert chisquare([counts[s] for s in support]).pvalue > 1e-4


def test_uniform_forest_rejects_impossible_sizes():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        uniform_forest(2, 3, rng)
    with pytest.raises(ValueError):
        uniform_forest(0, 2, rng)
    assert uniform_forest(0, 0, rng) == ((0,), (0,))


def test_uniform_dyck_law():
    rng = np.random.default_rng(2)
    counts = Counter(tuple(uniform_dyck(3, rng)) for _ in range(5000))
    assert len(counts) == 5
    assert chisquare(list(counts.values())).pvalue > 1e-4


def _law_check(cfg, n_samples):
    """Chi-square of sampled pointed quadrangulations against weights 12^-n
    over the exhaustive list."""
    expected = {}
    for n in range(cfg.faces_min, cfg.faces_max + 1):
        for pq in pointed_quads(cfg.genus, cfg.k, n):
            expected[pointed_key(pq)] = 12.0 ** -n
    seen = Counter(pointed_key(sample(cfg, i)) for i in range(n_samples))
    assert set(seen) <= set(expected)
    keys = sorted(expected)
    total = sum(expected.values())
    f_exp = [n_samples * expected[k] / total for k in keys]
    return chisquare([seen[k] for k in keys], f_exp).pvalue


@pytest.mark.parametrize("g, k, lo, hi, method", [
    (0, 1, 1, 2, "exact"),
    (0, 1, 1, 2, "rejection"),
    (0, 2, 1, 2, "exact"),
    (0, 2, 1, 2, "rejection"),
    (1, 1, 2, 3, "exact"),
    (1, 2, 3, 3, "exact"),
])
def test_sampler_law(g, k, lo, hi, method):
    cfg = SamplerConfig(genus=g, k=k, faces_min=lo, faces_max=hi, seed=11, method=method)
    assert _law_check(cfg, 3000) > 1e-4


def test_single_face_window_is_uniform():
    cfg = SamplerConfig(faces_min=1, faces_max=1, seed=3)
    n = 10_000
    quads = Counter(canonical_form(sample(cfg, i).quad) for i in range(n))
    assert len(quads) == len(exhaustive_quads(0, 1)) == 2
    # within three standard deviations of n / 2
    assert all(abs(c - n / 2) <= 3 * (n / 4) ** 0.5 for c in quads.values())


@pytest.mark.parametrize("g, k, lo, hi", [(0, 1, 5, 30), (0, 2, 3, 15), (1, 1, 2, 10), (1, 2, 3, 8)])
def test_samples_are_valid_and_in_window(g, k, lo, hi):
    cfg = SamplerConfig(genus=g, k=k, faces_min=lo, faces_max=hi, seed=5)
    for i in range(40):
        pq = sample(cfg, i)
        assert validate_pointed(pq).ok
        assert pq.quad.genus == g and pq.k == k
        assert lo <= pq.n_faces <= hi
        assert round_trip_ok(pq)


def test_sampling_is_deterministic():
    cfg = SamplerConfig(genus=1, k=2, faces_min=3, faces_max=8, seed=42)
    a = [sample(cfg, i) for i in range(5)]
    b = [sample(cfg, i) for i in range(5)]
    assert a == b
    assert sample(cfg, 7) == sample(cfg, 7)
    assert sample_labeled(cfg, 3).key == sample_labeled(cfg, 3).key
    other = SamplerConfig(genus=1, k=2, faces_min=3, faces_max=8, seed=43)
    assert [sample(other, i) for i in range(5)] != a


def test_tilt_shortens_chains():
    base = SamplerConfig(genus=1, k=1, faces_min=1, faces_max=12, seed=0)
    tilted = SamplerConfig(genus=1, k=1, faces_min=1, faces_max=12, seed=0, tilt=0.3)
    mean = lambda cfg: np.mean([sample(cfg, i).n_faces for i in range(300)])
    assert mean(tilted) < mean(base)


def test_scheme_masses_are_positive():
    items, _, masses = exact_scheme_table(1, 1, 2, 20, 1.0)
    assert len(items) == len(masses) == 2
    assert all(m > 0 for m in masses)


@pytest.mark.parametrize("bad", [
    dict(faces_min=0), dict(faces_min=5, faces_max=4), dict(tilt=0), dict(tilt=1.5),
    dict(k=0), dict(genus=-1), dict(method="mcmc"),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SamplerConfig(**bad)


def test_attach_marks():
    rng = rng_for(0, 0)
    q = sample(SamplerConfig(faces_min=10, faces_max=10, seed=1)).quad
    pq = attach_marks(q, 1, rng)
    assert pq.delays == (0,)
    hits = 0
    for _ in range(200):
        pq = attach_marks(q, 2, rng)
        if pq.delays is None:
            a, b = pq.sources
            assert a == b or bfs_distances(q, a)[b] == 1
        else:
            assert validate_pointed(pq).ok
            hits += 1
    assert hits > 0


def test_marks_are_uniform_vertices():
    q = sample(SamplerConfig(faces_min=6, faces_max=6, seed=8)).quad
    rng = rng_for(8, 1)
    counts = Counter(attach_marks(q, 1, rng).sources[0] for _ in range(10_000))
    assert chisquare([counts[v] for v in range(q.n_vertices)]).pvalue > 1e-4


def test_two_marks_have_d_minus_one_delays():
    cfg = SamplerConfig(k=2, faces_min=3, faces_max=12, seed=6)
    for i in range(50):
        pq = sample(cfg, i)
        d = bfs_distances(pq.quad, pq.sources[0])[pq.sources[1]]
        delays = enumerate_delays(pq.quad, pq.sources)
        assert len(delays) == max(d - 1, 0)
        assert pq.delays in delays


def test_vertex_bias_moves_vertex_counts():
    plain = SamplerConfig(faces_min=2, faces_max=6, seed=9)
    biased = SamplerConfig(faces_min=2, faces_max=6, seed=9, vertex_bias=3)
    mean = lambda cfg: np.mean([sample(cfg, i).quad.n_vertices for i in range(400)])
    assert mean(biased) > mean(plain)
