import json
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given

from conftest import dyck_words
from genusmaps.combmap import InvalidMapError, plane_tree
from genusmaps.decomp import (
    EncodedLabeledMap,
    core_half_edges,
    decode,
    encode,
    reduce_map,
    two_point_distance_encoded,
)
from genusmaps.bijection import two_point_distance
from genusmaps.serialize import from_dict, to_dict

FIXTURES = Path(__file__).parents[1] / "src" / "genusmaps" / "fixtures"


def _fixture(name):
    return json.loads((FIXTURES / name).read_text())


def test_projection_fixture():
    d = _fixture("projection.json")
    m = from_dict(d["labeled"]).map
    red = reduce_map(m)
    assert to_dict(red.core) == d["core"]
    assert to_dict(red.scheme) == d["scheme"]
    assert [int(x) for x in red.in_core] == d["in_core"]
    assert not red.in_core[m.root]
    assert red.scheme.genus == m.genus == 1
    # every vertex of the scheme has degree at least 3
    assert all(len(v) >= 3 for v in red.scheme.vertices)


def test_contour_fixture():
    d = _fixture("contour.json")
    lm = from_dict(d["labeled"])
    enc = encode(lm)
    assert enc.to_dict() == d["encoding"]
    assert enc.t_star == 5
    assert enc.c[0] == (0, 1, 0, -1, 0, -1, -2, -3)
    assert decode(enc).key == lm.key


def test_chains_cover_the_core():
    d = _fixture("projection.json")
    red = reduce_map(from_dict(d["labeled"]).map)
    covered = sorted(h for ch in red.chains for h in ch)
    assert covered == sorted(h for h, k in enumerate(red.in_core) if k)


def test_tree_has_empty_core():
    t = plane_tree([1, 1, -1, 1, -1, -1])
    assert not any(core_half_edges(t))


@pytest.mark.parametrize("g, k, n", [(0, 1, 3), (0, 2, 3), (1, 1, 3), (1, 2, 3), (0, 3, 3)])
def test_encode_decode_round_trip(exhaustive_labeled, g, k, n):
    for lm in exhaustive_labeled(g, k, n):
        enc = encode(lm)
        assert enc.size == 2 * n + (enc.scheme is None)
        assert decode(enc).key == lm.key
        # and through JSON
        back = EncodedLabeledMap.from_dict(json.loads(json.dumps(enc.to_dict())))
        assert decode(back).key == lm.key


@given(dyck_words(max_n=10))
def test_tree_snake_duration(w):
    from genusmaps.bijection import LabeledMap
    t = plane_tree(w)
    lm = LabeledMap(t, (1,), [0] * t.n_vertices)
    enc = encode(lm)
    n = len(w) // 2
    c, z = enc.tree
    # contour of a tree with n edges, closed by the final floor step
    assert len(c) - 1 == 2 * n + 1
    assert c[-1] == -1
    assert decode(enc).key == lm.key


def test_zero_forest_on_the_root_edge(exhaustive_labeled):
    # planar two-face maps whose root sits on the cycle carry an empty forest
    seen = 0
    for lm in exhaustive_labeled(0, 2, 2):
        enc = encode(lm)
        r = len(enc.w[0]) - 1
        if r == 1:
            assert enc.c[0] in ((0,), ())
            seen += 1
        assert decode(enc).key == lm.key
    assert seen > 0


def test_loop_walk_must_close(exhaustive_labeled):
    lm = next(x for x in exhaustive_labeled(0, 2, 3) if len(encode(x).w[0]) >= 3)
    enc = encode(lm)
    r = len(enc.w[0]) - 1
    w = (0,) * r + (1,)
    bad_w = [w, tuple(w[r - t] - 1 for t in range(r + 1))]
    with pytest.raises(InvalidMapError, match="return to 0"):
        decode(replace(enc, w=bad_w))


@pytest.mark.parametrize("mutate", [
    lambda e: replace(e, t_star=10**6),
    lambda e: replace(e, w=e.w[:-1]),
    lambda e: replace(e, w=[(1,) + tuple(e.w[0][1:])] + list(e.w[1:])),
    lambda e: replace(e, c=[tuple(e.c[0]) + (5,)] + list(e.c[1:])),
])
def test_decode_rejects_corrupt_encodings(exhaustive_labeled, mutate):
    enc = encode(exhaustive_labeled(1, 1, 3)[0])
    with pytest.raises(InvalidMapError):
        decode(mutate(enc))


def test_two_point_distance_from_encoding(exhaustive_labeled):
    for lm in exhaustive_labeled(0, 2, 3) + exhaustive_labeled(1, 2, 3):
        assert two_point_distance_encoded(encode(lm)) == two_point_distance(lm)
