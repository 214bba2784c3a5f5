"""JSON for maps, pointed quadrangulations, labelled maps and encodings.

All objects share the map keys ``n_half``, ``sigma`` and ``root``; pointed
quadrangulations add ``sources`` and ``delays``, labelled maps add per-vertex
``labels`` and per-face ``face_index``, and encodings are recognised by
``t_star``.  Dumping is deterministic, so dump/load/dump is byte-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

from .bijection import LabeledMap
from .combmap import CombinatorialMap, InvalidMapError
from .decomp import EncodedLabeledMap
from .quad import PointedQuad


def map_to_dict(m: CombinatorialMap) -> dict:
    return {"n_half": m.n_half, "sigma": list(m.sigma), "root": m.root}


def map_from_dict(d: dict) -> CombinatorialMap:
    sigma = tuple(int(x) for x in d["sigma"])
    if "n_half" in d and d["n_half"] != len(sigma):
        raise InvalidMapError(f"n_half = {d['n_half']} but sigma has {len(sigma)} entries")
    return CombinatorialMap(sigma, int(d["root"]))


def to_dict(obj) -> dict:
    if isinstance(obj, CombinatorialMap):
        return map_to_dict(obj)
    if isinstance(obj, PointedQuad):
        d = map_to_dict(obj.quad)
        d["sources"] = list(obj.sources)
        d["delays"] = None if obj.delays is None else list(obj.delays)
        return d
    if isinstance(obj, LabeledMap):
        d = map_to_dict(obj.map)
        d["labels"] = list(obj.labels)
        d["face_index"] = list(obj.face_index)
        return d
    if isinstance(obj, EncodedLabeledMap):
        return obj.to_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def from_dict(d: dict):
    """Inverse of to_dict, dispatching on the keys present."""
    if "t_star" in d:
        return EncodedLabeledMap.from_dict(d)
    m = map_from_dict(d)
    if "sources" in d:
        delays = d.get("delays")
        return PointedQuad(m, tuple(d["sources"]), None if delays is None else tuple(delays))
    if "labels" in d and "face_index" in d:
        return LabeledMap(m, tuple(d["face_index"]), tuple(d["labels"]))
    return m


def dumps(obj) -> str:
    return json.dumps(to_dict(obj), separators=(",", ":"))


def loads(text: str):
    return from_dict(json.loads(text))


def dump(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def load(path):
    return loads(Path(path).read_text())
