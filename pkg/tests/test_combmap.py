from collections import Counter

import pytest
from hypothesis import given

from conftest import connected_maps, dyck_words
from genusmaps.combmap import (
    CombinatorialMap,
    InvalidMapError,
    automorphism_count,
    bfs_distances,
    bipartite_colouring,
    canonical_form,
    canonical_map,
    check_valid,
    from_permutations,
    is_bipartite_quadrangulation,
    plane_tree,
    relabel,
    unrooted_canonical_form,
    validate,
)


def test_alpha_sigma_phi_relation():
    m = CombinatorialMap((2, 3, 1, 0), 0)
    for h in range(m.n_half):
        # phi = sigma^-1 o alpha
        assert m.phi[h] == m.sigma_inv[h ^ 1]
        assert m.sigma[m.phi[h]] == h ^ 1


def test_single_edge_is_planar_tree():
    m = CombinatorialMap((0, 1), 0)
    assert (m.n_vertices, m.n_edges, m.n_faces, m.genus) == (2, 1, 1, 0)


def test_loop_on_one_vertex():
    m = CombinatorialMap((1, 0), 0)
    assert (m.n_vertices, m.n_faces, m.genus) == (1, 2, 0)


def test_torus_one_vertex_one_face():
    # sigma = (0 2 1 3): the standard one-vertex one-face torus
    m = CombinatorialMap((2, 3, 1, 0), 0)
    assert m.n_vertices == 1
    assert m.n_faces == 1
    assert m.genus == 1


def test_vertex_ids_follow_smallest_half_edge():
    m = CombinatorialMap((2, 3, 1, 0), 0)
    firsts = [min(cyc) for cyc in m.vertices]
    assert firsts == sorted(firsts)
    faces_first = [min(cyc) for cyc in m.faces]
    assert faces_first == sorted(faces_first)


@pytest.mark.parametrize("sigma, message", [
    ((0, 0), "permutation"),
    ((1, 0, 2), "even"),
    ((), "even"),
    ((0, 1, 2, 3), "connected"),
])
def test_validate_reports_errors(sigma, message):
    rep = validate(CombinatorialMap(sigma, 0))
    assert not rep.ok
    assert any(message in e for e in rep.errors)
    with pytest.raises(InvalidMapError):
        check_valid(CombinatorialMap(sigma, 0))


def test_validate_root_range_and_labels():
    m = CombinatorialMap((0, 1), 5)
    assert any("root" in e for e in validate(m).errors)
    m = CombinatorialMap((0, 1), 0)
    assert validate(m, labels=[0, 1]).ok
    assert not validate(m, labels=[0, 2]).ok
    assert not validate(m, labels=[0]).ok
    assert validate(m, face_index=[1]).ok
    assert not validate(m, face_index=[2]).ok


def test_report_to_dict():
    d = validate(CombinatorialMap((0, 1), 0)).to_dict()
    assert d == {"ok": True, "errors": [], "genus": 0}


@given(connected_maps())
def test_euler_formula_gives_non_negative_integer_genus(m):
    rep = validate(m)
    assert rep.ok
    chi = m.n_vertices - m.n_edges + m.n_faces
    assert chi == 2 - 2 * rep.genus
    assert rep.genus >= 0


@given(connected_maps())
def test_phi_is_a_permutation_and_faces_partition_half_edges(m):
    assert sorted(m.phi) == list(range(m.n_half))
    assert sorted(h for f in m.faces for h in f) == list(range(m.n_half))
    assert sorted(h for v in m.vertices for h in v) == list(range(m.n_half))


@given(connected_maps())
def test_canonical_form_invariant_under_relabelling(m):
    import random
    rng = random.Random(len(m.sigma))
    # random relabelling that keeps alpha = h ^ 1: permute edges and flip ends
    edges = list(range(m.n_edges))
    rng.shuffle(edges)
    new = [0] * m.n_half
    for e, f in enumerate(edges):
        flip = rng.random() < 0.5
        new[2 * e] = 2 * f + flip
        new[2 * e + 1] = 2 * f + (not flip)
    m2 = CombinatorialMap(relabel(m.sigma, new), new[m.root])
    assert canonical_form(m2) == canonical_form(m)
    assert unrooted_canonical_form(m2) == unrooted_canonical_form(m)


@given(connected_maps())
def test_canonical_map_is_idempotent(m):
    c = canonical_map(m)
    assert canonical_map(c) == c
    assert canonical_form(c) == canonical_form(m)


@given(connected_maps())
def test_automorphisms_divide_rootings(m):
    a = automorphism_count(m)
    assert m.n_half % a == 0
    roots = {canonical_form(m, r) for r in range(m.n_half)}
    assert len(roots) * a == m.n_half


def test_from_permutations_relabels_alpha():
    # alpha pairs 0-3 and 1-2, sigma a single cycle
    sigma = [1, 2, 3, 0]
    alpha = [3, 2, 1, 0]
    m, new = from_permutations(sigma, alpha, root=0)
    for h in range(4):
        assert new[alpha[h]] == new[h] ^ 1
    assert m.n_vertices == 1 and m.n_edges == 2


def test_from_permutations_rejects_bad_alpha():
    with pytest.raises(InvalidMapError):
        from_permutations([0, 1], [0, 1])


@given(dyck_words())
def test_plane_tree_counts(w):
    t = plane_tree(w)
    n = len(w) // 2
    assert t.n_edges == n
    assert t.n_vertices == n + 1
    assert t.n_faces == 1
    assert t.genus == 0


def test_plane_tree_contour_heights():
    w = [1, 1, -1, 1, -1, -1]
    t = plane_tree(w)
    d = bfs_distances(t, t.vertex_of[t.root])
    # contour along phi from the root visits heights 0 1 2 1 2 1 (then 0)
    h, heights = t.root, []
    for _ in range(t.n_half):
        heights.append(d[t.vertex_of[h]])
        h = t.phi[h]
    assert heights == [0, 1, 2, 1, 2, 1]


def test_bipartite_quadrangulation_checks():
    # the two rooted planar quadrangulations with one face
    from genusmaps.enumeration import exhaustive_quads
    for q in exhaustive_quads(0, 1):
        assert is_bipartite_quadrangulation(q)
        col = bipartite_colouring(q)
        for h in range(0, q.n_half, 2):
            assert col[q.vertex_of[h]] != col[q.vertex_of[h + 1]]
    # a 3-cycle has two faces of degree 3
    tri = CombinatorialMap((5, 2, 1, 4, 3, 0), 0)
    assert validate(tri).ok and sorted(len(f) for f in tri.faces) == [3, 3]
    assert not is_bipartite_quadrangulation(tri)


def test_bfs_distances_on_path():
    # path a - b - c as a plane tree
    t = plane_tree([1, 1, -1, -1])
    d = bfs_distances(t, t.vertex_of[t.root])
    assert Counter(d) == Counter({0: 1, 1: 1, 2: 1})
