import json
from pathlib import Path

import pytest

from genusmaps.bijection import forward
from genusmaps.combmap import InvalidMapError
from genusmaps.decomp import encode
from genusmaps.sampler import SamplerConfig, sample
from genusmaps.serialize import dump, dumps, from_dict, load, loads, to_dict

FIXTURES = Path(__file__).parents[1] / "src" / "genusmaps" / "fixtures"


def _objects():
    cfg = SamplerConfig(genus=1, k=2, faces_min=3, faces_max=8, seed=0)
    pq = sample(cfg, 0)
    lm = forward(pq)
    planar = sample(SamplerConfig(k=2, faces_min=2, faces_max=6, seed=1), 0)
    return [pq, pq.quad, lm, encode(lm), planar, encode(forward(planar))]


@pytest.mark.parametrize("i", range(6))
def test_dump_load_dump_is_byte_exact(i, tmp_path):
    obj = _objects()[i]
    text = dumps(obj)
    back = loads(text)
    assert type(back) is type(obj)
    assert dumps(back) == text
    path = tmp_path / "x.json"
    dump(obj, path)
    first = path.read_bytes()
    dump(load(path), path)
    assert path.read_bytes() == first


@pytest.mark.parametrize("name", ["two_pointed.json", "two_pointed_labeled.json"])
def test_fixtures_round_trip(name):
    text = (FIXTURES / name).read_text().strip()
    assert dumps(loads(text)) == json.dumps(json.loads(text), separators=(",", ":"))


def test_pointed_quad_without_delays():
    pq = sample(SamplerConfig(faces_min=3, faces_max=3), 0)
    d = to_dict(pq)
    d["delays"] = None
    assert from_dict(d).delays is None


def test_length_mismatch_and_unknown_type():
    with pytest.raises(InvalidMapError):
        from_dict({"n_half": 4, "sigma": [0, 1], "root": 0})
    with pytest.raises(TypeError):
        to_dict(object())
