"""Command line: ``genusmaps {sample,verify,enumerate,constants,stats,metric}``.

Settings resolve as command-line flag, then ``GENUSMAPS_<FLAG>`` environment
variable, then built-in default.  Every run that writes files also writes
``manifest.json`` with the resolved configuration and a SHA-256 per output,
and contains nothing time-dependent, so identical settings give identical
manifests.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bijection import (
    bij_properties,
    check_two_to_one,
    forward,
    round_trip_ok,
    two_point_distance,
    validate_labeled,
)
from .combmap import bfs_distances
from .decomp import decode, encode, reduce_map
from .enumeration import cg_constant, exhaustive_quads, labeled_maps, pointed_quads
from .metricspace import (
    SAMPLE_COLUMNS,
    SUMMARY_COLUMNS,
    from_quad,
    gh_distance,
    ghp_distance,
    radius_slope,
    sample_row,
    summarize_radii,
)
from .quad import validate_pointed
from .sampler import SamplerConfig, attach_marks, rng_for, sample
from .serialize import dumps, from_dict, load, to_dict

FIXTURES = Path(__file__).parent / "fixtures"

DEFAULTS = {
    "genus": 0,
    "k": 1,
    "faces": None,
    "faces_min": 1,
    "faces_max": 10,
    "count": None,          # each command has its own default
    "seed": 0,
    "threads": 1,
    "out": None,
    "rel_err": 1e-3,
    "exact_limit": 7,
}

INT_SETTINGS = {"genus", "k", "faces_min", "faces_max", "count", "seed", "threads", "exact_limit"}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str = __version__
    outputs: dict = field(default_factory=dict)

    def add(self, path: Path) -> None:
        self.outputs[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def write(self, out: Path) -> Path:
        path = out / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


# ------------------------------------------------------------- settings

def _env_value(name: str):
    raw = os.environ.get("GENUSMAPS_" + name.upper())
    if raw is None or raw == "":
        return None
    if name in INT_SETTINGS:
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"GENUSMAPS_{name.upper()}={raw!r} is not an integer")
    if name == "rel_err":
        try:
            return float(raw)
        except ValueError:
            raise UsageError(f"GENUSMAPS_REL_ERR={raw!r} is not a number")
    if name == "faces":
        try:
            return [int(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            raise UsageError(f"GENUSMAPS_FACES={raw!r} is not a list of integers")
    return raw


def resolve(args: argparse.Namespace) -> dict:
    """Flag, else environment, else default, for every known setting."""
    cfg = {}
    for name, default in DEFAULTS.items():
        if not hasattr(args, name):
            continue
        val = getattr(args, name)
        if val is None:
            val = _env_value(name)
        cfg[name] = default if val is None else val
    if cfg.get("faces"):
        if len(cfg["faces"]) == 1 and "faces_min" in cfg:
            cfg["faces_min"] = cfg["faces_max"] = cfg["faces"][0]
    if cfg.get("threads", 1) < 1:
        raise UsageError("--threads must be at least 1")
    if cfg.get("count") is not None and cfg["count"] < 1:
        raise UsageError("--count must be at least 1")
    return cfg


def _sampler_config(cfg: dict, **over) -> SamplerConfig:
    try:
        return SamplerConfig(genus=cfg["genus"], k=cfg["k"], faces_min=cfg["faces_min"],
                             faces_max=cfg["faces_max"], seed=cfg["seed"], **over)
    except ValueError as exc:
        raise UsageError(str(exc))


def _out_dir(cfg: dict, required: bool = False) -> Path | None:
    if cfg.get("out") is None:
        if required:
            raise UsageError("--out (or GENUSMAPS_OUT) is required")
        return None
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parallel_map(fn, items, threads: int):
    """Ordered map; worker processes only when ``threads > 1``."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r[c] for c in header] if isinstance(r, dict) else r)
    return buf.getvalue()


# --------------------------------------------------------------- sample

class _SampleTask:
    def __init__(self, scfg: SamplerConfig):
        self.scfg = scfg

    def __call__(self, i: int):
        pq = sample(self.scfg, i)
        errors = list(validate_pointed(pq).errors)
        if not errors and not round_trip_ok(pq):
            errors.append("round trip failed")
        return dumps(pq), pq.quad.n_faces, pq.quad.n_vertices, errors


def cmd_sample(cfg: dict) -> tuple[int, dict]:
    out = _out_dir(cfg, required=True)
    scfg = _sampler_config(cfg)
    results = _parallel_map(_SampleTask(scfg), list(range(cfg["count"] or 10)), cfg["threads"])
    manifest = RunManifest("sample", cfg, cfg["seed"])
    rows, failures = [], []
    for i, (text, nf, nv, errors) in enumerate(results):
        path = out / f"sample_{i:05d}.json"
        path.write_text(text + "\n")
        manifest.add(path)
        rows.append([i, path.name, nf, nv, cfg["genus"], cfg["k"]])
        failures += [{"sample_id": i, "error": e} for e in errors]
    index = out / "samples.csv"
    index.write_text(_csv_text(["sample_id", "file", "n_faces", "n_vertices", "genus", "k"], rows))
    manifest.add(index)
    manifest.write(out)
    report = {"ok": not failures, "samples": len(rows), "failures": failures}
    return (0 if not failures else 1), report


# --------------------------------------------------------------- verify

def _check(name: str, items, test) -> dict:
    """Run ``test`` on every item; it returns a list of error strings."""
    failures, count = [], 0
    for i, item in enumerate(items):
        count += 1
        errs = test(item)
        if errs:
            failures.append({"item": i, "errors": errs})
    return {"name": name, "count": count, "ok": not failures, "failures": failures[:20]}


def _pointed_checks(pq) -> list[str]:
    errs = list(validate_pointed(pq).errors)
    if errs:
        return errs
    lm = forward(pq)
    errs += list(validate_labeled(lm).errors)
    if not round_trip_ok(pq):
        errs.append("backward(forward(pq)) != pq")
    errs += bij_properties(pq, lm)
    if decode(encode(lm)).key != lm.key:
        errs.append("decode(encode(lm)) != lm")
    if pq.k == 2:
        d = bfs_distances(pq.quad, pq.sources[0])[pq.sources[1]]
        if two_point_distance(lm) != d:
            errs.append(f"two-point formula {two_point_distance(lm)} != BFS {d}")
    return errs


def _fixture_checks() -> list[str]:
    errs = []
    pq = load(FIXTURES / "two_pointed.json")
    lm = load(FIXTURES / "two_pointed_labeled.json")
    if forward(pq).key != lm.key:
        errs.append("two-pointed fixture: forward image differs from the stored labelled map")
    threes = [v for v, lab in enumerate(pq.labels) if lab == 3]
    if len(threes) != 1:
        errs.append("two-pointed fixture: expected a single vertex with label 3")
    if two_point_distance(lm) != 3:
        errs.append("two-pointed fixture: two-point distance should be 3")
    d = json.loads((FIXTURES / "projection.json").read_text())
    red = reduce_map(from_dict(d["labeled"]).map)
    if to_dict(red.core) != d["core"] or to_dict(red.scheme) != d["scheme"]:
        errs.append("projection fixture: core or scheme differs")
    d = json.loads((FIXTURES / "contour.json").read_text())
    if encode(from_dict(d["labeled"])).to_dict() != d["encoding"]:
        errs.append("contour fixture: encoding differs")
    return errs


def cmd_verify(cfg: dict, quick: bool) -> tuple[int, dict]:
    seed = cfg["seed"]
    count = cfg["count"] or (50 if quick else 1000)
    n_exh = 2 if quick else 3
    checks = [_check("fixtures", [None], lambda _: _fixture_checks())]
    for g, k, n in [(0, 1, n_exh), (0, 2, n_exh)] + ([] if quick else [(1, 1, 3)]):
        res = check_two_to_one(pointed_quads(g, k, n), labeled_maps(g, k, n))
        ok = res["once"] == res["more"] == res["missed"] == res["spurious"] == 0
        checks.append({"name": f"two-to-one g={g} k={k} n={n}", "count": res["labeled"],
                       "ok": ok, "failures": [] if ok else [res]})
        checks.append(_check(f"exhaustive g={g} k={k} n={n}", pointed_quads(g, k, n), _pointed_checks))
    windows = {(0, 1): (1, 30), (0, 2): (1, 20), (1, 1): (1, 10), (1, 2): (1, 8)}
    for (g, k), (lo, hi) in windows.items():
        scfg = SamplerConfig(genus=g, k=k, faces_min=lo, faces_max=hi, seed=seed)
        items = (sample(scfg, i) for i in range(count))
        checks.append(_check(f"samples g={g} k={k} faces {lo}..{hi}", items, _pointed_checks))
    report = {"ok": all(c["ok"] for c in checks), "seed": seed, "quick": quick, "checks": checks}
    out = _out_dir(cfg)
    if out is not None:
        path = out / "verify_report.json"
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        manifest = RunManifest("verify", dict(cfg, quick=quick), seed)
        manifest.add(path)
        manifest.write(out)
    return (0 if report["ok"] else 1), report


# ------------------------------------------------ enumerate / constants

def cmd_enumerate(cfg: dict) -> tuple[int, str]:
    sizes = cfg["faces"] or [cfg["faces_min"]]
    rows = []
    for n in sizes:
        if n < 1:
            raise UsageError("--faces must be positive")
        try:
            rows.append([cfg["genus"], n, len(exhaustive_quads(cfg["genus"], n))])
        except ValueError as exc:
            raise UsageError(str(exc))
    return 0, _csv_text(["g", "n", "count"], rows)


def cmd_constants(cfg: dict) -> tuple[int, str]:
    val, err, n = cg_constant(cfg["genus"], rel_err=cfg["rel_err"], seed=cfg["seed"])
    return 0, _csv_text(["g", "Cg", "stderr", "samples"], [[cfg["genus"], repr(float(val)), repr(float(err)), int(n)]])


# ---------------------------------------------------------------- stats

class _StatsTask:
    def __init__(self, seed: int):
        self.seed = seed

    def __call__(self, job):
        n, i, sample_id = job
        scfg = SamplerConfig(genus=0, k=1, faces_min=n, faces_max=n, seed=self.seed + n)
        pq = sample(scfg, i)
        two = attach_marks(pq.quad, 2, rng_for(self.seed + n, 10**9 + i))
        if two.delays is None:
            two = type(two)(two.quad, (pq.sources[0],), (0,))
        return sample_row(sample_id, two)


def cmd_stats(cfg: dict) -> tuple[int, dict]:
    sizes = cfg["faces"] or [500, 1000, 2000, 4000]
    per = cfg["count"] or 200
    jobs = [(n, i, j * per + i) for j, n in enumerate(sizes) for i in range(per)]
    rows = _parallel_map(_StatsTask(cfg["seed"]), jobs, cfg["threads"])
    bad = [r["sample_id"] for r in rows if r["d_xy_bfs"] != r["d_xy_formula"]]
    summary = summarize_radii(rows)
    report = {"ok": not bad, "slope": radius_slope(summary), "summary": summary,
              "formula_mismatches": bad}
    out = _out_dir(cfg)
    if out is not None:
        manifest = RunManifest("stats", cfg, cfg["seed"])
        for name, header, data in (("stats_samples.csv", SAMPLE_COLUMNS, rows),
                                   ("stats_summary.csv", SUMMARY_COLUMNS, summary)):
            path = out / name
            path.write_text(_csv_text(header, data))
            manifest.add(path)
        manifest.write(out)
    return (0 if not bad else 1), report


# --------------------------------------------------------------- metric

def cmd_metric(cfg: dict, files) -> tuple[int, dict]:
    if files:
        if len(files) != 2:
            raise UsageError("metric takes exactly two JSON files")
        objs = [load(f) for f in files]
        quads = [getattr(o, "quad", o) for o in objs]
    else:
        n = (cfg["faces"] or [2])[0]
        scfg = SamplerConfig(genus=cfg["genus"], k=1, faces_min=n, faces_max=n, seed=cfg["seed"])
        quads = [sample(scfg, 0).quad, sample(scfg, 1).quad]
    X, Y = (from_quad(q) for q in quads)
    gh = gh_distance(X, Y, exact_limit=cfg["exact_limit"])
    report = {"points": [X.n, Y.n], "diameters": [X.diameter, Y.diameter]}
    if isinstance(gh, tuple):
        report["gh_bounds"] = list(gh)
    else:
        report["gh"] = gh
    if max(X.n, Y.n) <= min(cfg["exact_limit"], 5):
        report["ghp"] = ghp_distance(X, Y)
    if not files:
        report["inputs"] = [to_dict(q) for q in quads]
    return 0, report


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="genusmaps", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *names):
        if "genus" in names:
            sp.add_argument("--genus", type=int)
        if "k" in names:
            sp.add_argument("--k", type=int)
        if "faces" in names:
            sp.add_argument("--faces", type=int, nargs="+")
            sp.add_argument("--faces-min", type=int)
            sp.add_argument("--faces-max", type=int)
        if "count" in names:
            sp.add_argument("--count", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out")
        if "rel_err" in names:
            sp.add_argument("--rel-err", type=float)
        if "exact_limit" in names:
            sp.add_argument("--exact-limit", type=int)

    common(sub.add_parser("sample", help="sample pointed quadrangulations to JSON"),
           "genus", "k", "faces", "count")
    sp = sub.add_parser("verify", help="run the invariant suites")
    common(sp, "count")
    sp.add_argument("--quick", action="store_true")
    common(sub.add_parser("enumerate", help="count rooted quadrangulations"), "genus", "faces")
    common(sub.add_parser("constants", help="the genus constant C_g"), "genus", "rel_err")
    common(sub.add_parser("stats", help="radius and two-point statistics"), "faces", "count")
    sp = sub.add_parser("metric", help="GH / GHP distance between two quadrangulations")
    common(sp, "genus", "faces", "exact_limit")
    sp.add_argument("files", nargs="*")
    return p


def _emit(report) -> None:
    if isinstance(report, str):
        sys.stdout.write(report)
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)          # exits with status 2 on malformed flags
    try:
        cfg = resolve(args)
        if args.command == "sample":
            code, report = cmd_sample(cfg)
        elif args.command == "verify":
            code, report = cmd_verify(cfg, args.quick)
        elif args.command == "enumerate":
            code, report = cmd_enumerate(cfg)
        elif args.command == "constants":
            code, report = cmd_constants(cfg)
        elif args.command == "stats":
            code, report = cmd_stats(cfg)
        else:
            code, report = cmd_metric(cfg, args.files)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"genusmaps: error: {exc}", file=sys.stderr)
        return 2
    _emit(report)
    return code


if __name__ == "__main__":
    sys.exit(main())
