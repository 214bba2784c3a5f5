import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genusmaps.enumeration import exhaustive_quads
from genusmaps.metricspace import (
    FiniteMetricMeasureSpace,
    GraphMetric,
    MetricSpaceError,
    canonical_space,
    delta_ghp,
    distortion,
    epsilon_net,
    from_quad,
    geodesic_count,
    grouped_median,
    gh_bounds,
    gh_bruteforce,
    gh_distance,
    ghp_distance,
    max_coupling_mass,
    max_coupling_mass_vertices,
    median_quasi_geodesic,
    prokhorov,
    prokhorov_coupling,
    radius_slope,
    random_space,
    sample_row,
    scaling_stats,
    summarize_radii,
)
from genusmaps.sampler import SamplerConfig, sample

seeds = st.integers(0, 2**32 - 1)


def _space(seed, lo=1, hi=4, weighted=True):
    rng = np.random.default_rng(seed)
    return random_space(rng, int(rng.integers(lo, hi + 1)), weighted=weighted)


def _point():
    return FiniteMetricMeasureSpace.uniform([[0]])


def _two(a):
    return FiniteMetricMeasureSpace.uniform([[0, a], [a, 0]])


def test_from_quad_single_face():
    for q in exhaustive_quads(0, 1):
        X = from_quad(q)
        assert X.n == 3
        assert X.diameter <= 2
        assert np.allclose(X.weights, 1 / 3)


@pytest.mark.parametrize("d, message", [
    ([[0, 1], [2, 0]], "symmetric"),
    ([[1, 1], [1, 0]], "diagonal"),
    ([[0, 0], [0, 0]], "<= 0"),
    ([[0, 1, 5], [1, 0, 1], [5, 1, 0]], "triangle"),
])
def test_metric_validation(d, message):
    with pytest.raises(MetricSpaceError, match=message):
        FiniteMetricMeasureSpace.uniform(d)


def test_weight_validation():
    with pytest.raises(MetricSpaceError):
        FiniteMetricMeasureSpace([[0, 1], [1, 0]], [0.7, 0.7])
    with pytest.raises(MetricSpaceError):
        FiniteMetricMeasureSpace([[0, 1], [1, 0]], [1.0])


def test_gh_closed_forms():
    # two two-point spaces: half the gap in diameters
    assert gh_distance(_two(1), _two(4)) == 1.5
    # a point against anything: half the diameter
    for seed in range(20):
        X = _space(seed)
        assert gh_distance(_point(), X) == X.diameter / 2


@given(seeds, seeds)
def test_gh_matches_brute_force(a, b):
    X, Y = _space(a, hi=3), _space(b, hi=3)
    if X.n * Y.n > 16:
        return
    assert gh_distance(X, Y) == pytest.approx(gh_bruteforce(X, Y), abs=1e-12)


@given(seeds, seeds, seeds)
def test_gh_and_ghp_triangle_and_symmetry(a, b, c):
    X, Y, Z = _space(a), _space(b), _space(c)
    for dist in (gh_distance, ghp_distance):
        xy, yz, xz = dist(X, Y), dist(Y, Z), dist(X, Z)
        assert xy == pytest.approx(dist(Y, X), abs=1e-12)
        assert xz <= xy + yz + 1e-12
    assert gh_distance(X, Y) <= ghp_distance(X, Y) + 1e-12


@given(seeds)
def test_ghp_vanishes_on_relabelled_copies(seed):
    X = _space(seed, hi=5)
    rng = np.random.default_rng(seed + 1)
    p = rng.permutation(X.n)
    Y = FiniteMetricMeasureSpace(X.dist[np.ix_(p, p)], X.weights[p])
    assert canonical_space(X) == canonical_space(Y)
    assert ghp_distance(X, Y) == 0
    assert gh_distance(X, Y) == 0


@given(seeds, seeds)
def test_ghp_zero_iff_isometric(a, b):
    X, Y = _space(a, hi=5, weighted=False), _space(b, hi=5, weighted=False)
    same = X.n == Y.n and canonical_space(X) == canonical_space(Y)
    assert (ghp_distance(X, Y) == 0) == same


def test_ghp_sees_weights():
    d = [[0, 1], [1, 0]]
    X = FiniteMetricMeasureSpace(d, [0.5, 0.5])
    Y = FiniteMetricMeasureSpace(d, [0.9, 0.1])
    assert gh_distance(X, Y) == 0
    assert ghp_distance(X, Y) == pytest.approx(0.4)


@given(seeds, seeds)
def test_sandwich(a, b):
    X, Y = _space(a), _space(b)
    big = delta_ghp(X, Y)
    d = ghp_distance(X, Y)
    assert big / 3 <= d + 1e-12
    assert d <= 2 * big + 1e-12


@given(seeds)
def test_prokhorov_two_routes(seed):
    rng = np.random.default_rng(seed)
    X = random_space(rng, int(rng.integers(1, 6)))
    nu = rng.dirichlet(np.ones(X.n))
    p = prokhorov(X.dist, X.weights, nu)
    assert p == pytest.approx(prokhorov_coupling(X.dist, X.weights, nu), abs=1e-12)
    assert prokhorov(X.dist, X.weights, X.weights) == 0


@given(seeds)
def test_coupling_mass_two_routes(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 4, size=2)
    mu, nu = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
    allowed = [(i, j) for i in range(m) for j in range(n) if rng.random() < 0.5]
    a = max_coupling_mass(mu, nu, allowed)
    b = max_coupling_mass_vertices(mu, nu, allowed)
    assert a == pytest.approx(b, abs=1e-9)


def test_distortion_of_identity():
    X = _space(3)
    assert distortion(X, X, [(i, i) for i in range(X.n)]) == 0


def test_gh_bounds_bracket_the_exact_value():
    for seed in range(30):
        X, Y = _space(seed, hi=5), _space(seed + 100, hi=5)
        lo, hi = gh_bounds(X, Y)
        exact = gh_distance(X, Y)
        assert lo - 1e-12 <= exact <= hi + 1e-12
    # past the limit only bounds are returned
    X, Y = _space(1, lo=6, hi=6), _space(2, lo=6, hi=6)
    assert isinstance(gh_distance(X, Y, exact_limit=5), tuple)
    with pytest.raises(MetricSpaceError):
        gh_distance(X, Y, exact_limit=5, exact=True)
    with pytest.raises(MetricSpaceError):
        ghp_distance(X, Y)


def test_epsilon_net():
    X = _space(7, lo=5, hi=5)
    net = epsilon_net(X, 2)
    for p in range(X.n):
        assert min(X.dist[c, p] for c in net) < 2
    for a in net:
        for b in net:
            assert a == b or X.dist[a, b] >= 2


def _path(n):
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return FiniteMetricMeasureSpace.uniform(d)


def test_median_points_on_a_path():
    P = _path(7)
    # on a path the D-median points form a single vertex
    pts, diam = median_quasi_geodesic(P, 0, 6, 0)
    assert pts == [3] and diam == 0
    pts, _ = median_quasi_geodesic(P, 0, 6, 2)
    assert pts == [4]
    with pytest.raises(ValueError):
        median_quasi_geodesic(P, 0, 6, 6)


def test_median_points_with_large_slack():
    # on a 6-cycle with slack everything with the right difference qualifies
    n = 6
    i = np.arange(n)
    gap = np.abs(np.subtract.outer(i, i))
    C = FiniteMetricMeasureSpace.uniform(np.minimum(gap, n - gap))
    pts, diam = median_quasi_geodesic(C, 0, 2, 0, delta=10)
    assert sorted(pts) == [1, 4]
    assert diam == 3


def test_geodesic_count():
    gap = np.abs(np.subtract.outer(np.arange(4), np.arange(4)))
    square = FiniteMetricMeasureSpace.uniform(np.minimum(gap, 4 - gap))
    assert geodesic_count(square, 0, 2) == 2
    assert geodesic_count(_path(5), 0, 4) == 1


def test_graph_metric_matches_dense():
    q = sample(SamplerConfig(faces_min=20, faces_max=20, seed=4)).quad
    X = from_quad(q)
    G = GraphMetric(q)
    for u in range(q.n_vertices):
        assert np.array_equal(G.row(u), X.row(u))
        assert G.neighbours(u) == X.neighbours(u)


def test_sample_rows_and_summary():
    cfg = SamplerConfig(k=2, faces_min=10, faces_max=30, seed=2)
    samples = [sample(cfg, i) for i in range(20)]
    rows, summary, slope = scaling_stats(samples)
    assert len(rows) == 20
    for r in rows:
        assert r["d_xy_bfs"] == r["d_xy_formula"]
        assert -r["d_xy_bfs"] < r["D"] < r["d_xy_bfs"]
    assert [s["n"] for s in summary] == sorted({r["n_faces"] for r in rows})
    assert slope is None or np.isfinite(slope)
    with pytest.raises(ValueError):
        scaling_stats([])


def test_tree_sample_row_has_blank_pair_columns():
    from genusmaps.quad import PointedQuad
    q = exhaustive_quads(0, 2)[0]
    row = sample_row(0, PointedQuad(q, (0,), (0,)))
    assert row["d_xy_bfs"] == "" and row["radius"] >= 1


def test_radius_slope():
    summary = [{"n": n, "median_radius": 2 * n ** 0.25} for n in (100, 1000, 10000)]
    assert radius_slope(summary) == pytest.approx(0.25)
    assert radius_slope(summary[:1]) is None
    rows = [{"n_faces": 5, "radius": r} for r in (1, 2, 3, 4)]
    assert summarize_radii(rows) == [{"n": 5, "median_radius": 2.5, "q25": 1.75, "q75": 3.25}]


def test_grouped_median():
    assert grouped_median([5]) == 5
    assert grouped_median([1, 2, 3, 4]) == 2.5
    assert grouped_median([1, 1, 2, 2]) == 1.5
    # mostly 13 with a few 14: just above 13 - 1/2 + 1/2
    assert 13 < grouped_median([13] * 6 + [14] * 4) < 13.5
    with pytest.raises(ValueError):
        grouped_median([])


@given(st.lists(st.integers(0, 20), min_size=1, max_size=40))
def test_grouped_median_stays_in_the_middle_classes(xs):
    x = sorted(xs)
    lo, hi = x[(len(x) - 1) // 2], x[len(x) // 2]
    assert lo - 0.5 <= grouped_median(xs) <= hi + 0.5
