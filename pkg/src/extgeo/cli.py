"""Command line entry point: one JSON config in, reports out.

Config schema (all keys optional unless marked):

    {
      "immersion": {"catalog": "<name>", "params": {...}}     (required)
                   | {"source": "<chart source text>"},
      "resolution": 33 | [200, 64],                           (required)
      "pole": null | [ambient coordinates],
      "truncation": null | positive number (catalog override),
      "exhaustion_radii": null | [increasing positive reals],
      "volume_radii": null | [increasing positive reals],
      "epsilon_crit": 0.001,
      "delta": {"kind": "zero"} | {"kind": "power", "d0": x, "t0": y},
      "threads": null | integer,
      "seed": 0,
      "samples": 48
    }

Exit codes: 0 success, 1 verification checks failed, 2 malformed config,
3 numeric pipeline failure.  Errors print one JSON object on stderr.
Identical configs produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .catalog import CATALOG, catalog_build
from .errors import (ConfigError, DomainError, ExtGeoError,
                     HypothesisViolatedError, ParseError)
from .exprchart import parse_chart
from .immersion import extrinsic_sphere_curvature, point_geometry
from .invariants import (DeltaModel, default_tail_radii, invariant_tails,
                         pinching_functions, threshold_c_star)
from .mesh import (EPSILON_CRIT, ambient_for, build_mesh, count_ends,
                   critical_free_radius, ends_stability, mesh_dump)
from .reporting import dumps_json, write_csv, write_json
from .spaceform import c_kappa, s_kappa
from .volumetrics import (GrowthVerdict, gap_ratio, verify_growth_bounds,
                          volume_curve)

__all__ = ["RunConfig", "load_config", "main"]


@dataclass
class RunConfig:
    immersion: dict
    resolution: object
    pole: list = None
    truncation: float = None
    exhaustion_radii: list = None
    volume_radii: list = None
    epsilon_crit: float = EPSILON_CRIT
    delta: DeltaModel = field(default_factory=DeltaModel)
    threads: int = None
    seed: int = 0
    samples: int = 48


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _number_list(value, name):
    _require(isinstance(value, list) and value, f"{name} must be a nonempty list")
    for x in value:
        _require(isinstance(x, (int, float)) and not isinstance(x, bool),
                 f"{name} entries must be numbers")
    return [float(x) for x in value]


def parse_config(data: dict) -> RunConfig:
    _require(isinstance(data, dict), "config must be a JSON object")
    known = {"immersion", "resolution", "pole", "truncation",
             "exhaustion_radii", "volume_radii", "epsilon_crit", "delta",
             "threads", "seed", "samples"}
    extra = set(data) - known
    _require(not extra, f"unknown config keys: {sorted(extra)}")

    imm = data.get("immersion")
    _require(isinstance(imm, dict), "config needs an 'immersion' object")
    keys = set(imm)
    if "catalog" in keys:
        _require(keys <= {"catalog", "params"},
                 "catalog immersion takes only 'catalog' and 'params'")
        _require(isinstance(imm["catalog"], str), "'catalog' must be a name")
        params = imm.get("params", {})
        _require(isinstance(params, dict), "'params' must be an object")
    elif "source" in keys:
        _require(keys == {"source"}, "inline immersion takes only 'source'")
        _require(isinstance(imm["source"], str) and imm["source"].strip(),
                 "'source' must be nonempty chart text")
    else:
        raise ConfigError("immersion needs either 'catalog' or 'source'")

    res = data.get("resolution")
    if isinstance(res, int) and not isinstance(res, bool):
        _require(res > 0, "resolution must be positive")
    elif isinstance(res, list):
        _require(res and all(isinstance(k, int) and not isinstance(k, bool)
                             and k > 0 for k in res),
                 "resolution list must hold positive integers")
    else:
        raise ConfigError("config needs 'resolution' (int or list of ints)")

    pole = data.get("pole")
    if pole is not None:
        pole = _number_list(pole, "pole")

    trunc = data.get("truncation")
    if trunc is not None:
        _require(isinstance(trunc, (int, float)) and not isinstance(trunc, bool)
                 and trunc > 0, "truncation must be a positive number")
        trunc = float(trunc)

    radii = data.get("exhaustion_radii")
    if radii is not None:
        radii = _number_list(radii, "exhaustion_radii")
    vradii = data.get("volume_radii")
    if vradii is not None:
        vradii = _number_list(vradii, "volume_radii")

    eps = data.get("epsilon_crit", EPSILON_CRIT)
    _require(isinstance(eps, (int, float)) and not isinstance(eps, bool)
             and eps > 0, "epsilon_crit must be a positive number")

    delta_raw = data.get("delta", {"kind": "zero"})
    _require(isinstance(delta_raw, dict), "delta must be an object")
    try:
        delta = DeltaModel(kind=delta_raw.get("kind", "zero"),
                           d0=float(delta_raw.get("d0", 0.0)),
                           t0=float(delta_raw.get("t0", 1.0)))
    except DomainError as exc:
        raise ConfigError(f"delta model: {exc}")

    threads = data.get("threads")
    if threads is not None:
        _require(isinstance(threads, int) and not isinstance(threads, bool)
                 and threads >= 0, "threads must be a nonnegative integer")

    seed = data.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool),
             "seed must be an integer")
    samples = data.get("samples", 48)
    _require(isinstance(samples, int) and not isinstance(samples, bool)
             and samples > 0, "samples must be a positive integer")

    return RunConfig(immersion=imm, resolution=res, pole=pole,
                     truncation=trunc, exhaustion_radii=radii,
                     volume_radii=vradii, epsilon_crit=float(eps),
                     delta=delta, threads=threads, seed=seed, samples=samples)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    return parse_config(data)


# ---------------------------------------------------------------------------
# pipeline assembly

def _build_immersion(cfg: RunConfig):
    """(chart, ground_truth_or_None, descriptor dict)"""
    imm = cfg.immersion
    if "source" in imm:
        if cfg.truncation is not None:
            raise ConfigError(
                "truncation override applies to catalog entries; inline "
                "charts fix their own domain")
        chart = parse_chart(imm["source"], name="inline")
        return chart, None, {"kind": "inline", "name": chart.name}
    name = imm["catalog"]
    params = dict(imm.get("params", {}))
    if cfg.truncation is not None:
        entry = CATALOG.get(name)
        if entry is not None and "truncation" not in entry.defaults:
            raise ConfigError(
                f"catalog entry '{name}' has no truncation parameter")
        params["truncation"] = cfg.truncation
    try:
        chart, gt = catalog_build(name, **params)
    except DomainError as exc:
        # bad names or parameter values come from the config file
        raise ConfigError(f"immersion: {exc}")
    desc = {"kind": "catalog", "name": name, "params": params}
    return chart, gt, desc


def _mesh_for(cfg: RunConfig, chart):
    threads = cfg.threads
    if threads is None:
        threads = os.cpu_count() or 1
    return build_mesh(chart, cfg.resolution, pole=cfg.pole, threads=threads)


def _mesh_header(mesh, desc) -> dict:
    return {
        "immersion": desc,
        "m": mesh.m,
        "kappa": mesh.vertices.kappa,
        "resolution": list(mesh.shape),
        "vertices": mesh.n_vertices,
        "edges": int(mesh.edges.shape[0]),
        "basepoint": int(mesh.basepoint),
        "r_max": mesh.r_max,
        "r_truncation_min": mesh.r_truncation_min,
        "unreachable": mesh.unreachable,
    }


def _out_path(out_dir, name):
    if out_dir is None:
        return None
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


# ---------------------------------------------------------------------------
# subcommands

def run_invariants(cfg: RunConfig, out_dir) -> dict:
    chart, gt, desc = _build_immersion(cfg)
    mesh = _mesh_for(cfg, chart)
    radii = cfg.exhaustion_radii
    if radii is None:
        radii = default_tail_radii(mesh)
    report = invariant_tails(mesh, radii)
    payload = _mesh_header(mesh, desc)
    payload["invariants"] = report.summary()
    payload["critical_free_radius"] = critical_free_radius(
        mesh, cfg.epsilon_crit)
    payload["delta_model"] = cfg.delta.label

    kappa = mesh.vertices.kappa
    if kappa < 0.0:
        block = {"c_star": threshold_c_star()}
        c_val = report.a_estimate
        t_last = float(report.a_tail.x[-1])
        try:
            pv = pinching_functions(c_val, t=t_last,
                                    delta=cfg.delta.value(t_last),
                                    kappa=kappa)
            block["at_estimate"] = {
                "c": c_val, "t": t_last, "F": pv.F, "lambda0": pv.lambda0,
                "lambda": pv.lambda_full, "u_c": pv.u_c,
            }
        except DomainError as exc:
            block["at_estimate"] = {"skipped": str(exc)}
        payload["pinching"] = block

    csv_path = _out_path(out_dir, "tails.csv")
    if csv_path:
        write_csv(csv_path, ["t", "a_tail", "b_tail"],
                  zip(report.a_tail.x, report.a_tail.y, report.b_tail.y))
        write_json(_out_path(out_dir, "invariants.json"), payload)
        mesh_dump(mesh, _out_path(out_dir, "mesh.csv"))
    return payload


def run_volume(cfg: RunConfig, out_dir) -> dict:
    chart, gt, desc = _build_immersion(cfg)
    mesh = _mesh_for(cfg, chart)
    curve = volume_curve(mesh, cfg.volume_radii)
    tail_radii = cfg.exhaustion_radii
    if tail_radii is None:
        tail_radii = default_tail_radii(mesh)
    report = invariant_tails(mesh, tail_radii)

    try:
        stab = ends_stability(mesh, epsilon_crit=cfg.epsilon_crit)
        ends = stab["n_ends"]
    except (DomainError, ExtGeoError) as exc:
        stab = {"error": str(exc)}
        ends = None

    if ends is None:
        growth = GrowthVerdict(
            verdict="inconclusive",
            reason=f"end count unavailable: {stab.get('error', 'unknown')}",
            rows=[], exploratory=mesh.m < 3, ends=-1,
            a_estimate=report.a_estimate)
    else:
        growth = verify_growth_bounds(mesh, report, ends=ends, curve=curve)

    try:
        gap = gap_ratio(mesh, radii=cfg.volume_radii, samples=cfg.samples,
                        seed=cfg.seed).summary()
        gap["verdict"] = "satisfied" if gap["min_ratio"] >= 0.99 else "violated"
    except HypothesisViolatedError as exc:
        gap = {"verdict": "inconclusive", "reason": str(exc),
               "offenders": exc.offenders}

    payload = _mesh_header(mesh, desc)
    payload["volume"] = curve.summary()
    payload["coarea_max_dev"] = curve.coarea_max_dev()
    payload["growth"] = growth.summary()
    payload["gap"] = gap
    payload["ends_stability"] = stab

    csv_path = _out_path(out_dir, "volume.csv")
    if csv_path:
        write_csv(csv_path,
                  ["t", "ball_vol", "sphere_vol", "ball_ratio", "sphere_ratio"],
                  zip(curve.radii, curve.ball, curve.sphere,
                      curve.ball_ratio, curve.sphere_ratio))
        write_json(_out_path(out_dir, "volume.json"), payload)
    return payload


def run_ends(cfg: RunConfig, out_dir) -> dict:
    chart, gt, desc = _build_immersion(cfg)
    mesh = _mesh_for(cfg, chart)
    stab = ends_stability(mesh, epsilon_crit=cfg.epsilon_crit)
    final = count_ends(mesh, stab["radii"][-1], cfg.epsilon_crit)
    payload = _mesh_header(mesh, desc)
    payload["ends"] = {
        "count": final.n_ends,
        "bounded_components": final.n_bounded,
        "components": final.component_sizes,
        "critical_free_radius": final.critical_free_radius,
        "stability": stab,
    }
    csv_path = _out_path(out_dir, "ends.csv")
    if csv_path:
        write_csv(csv_path, ["R", "n_ends"],
                  zip(stab["radii"], stab["counts"]))
        write_json(_out_path(out_dir, "ends.json"), payload)
    return payload


def run_curvature(cfg: RunConfig, out_dir) -> dict:
    chart, gt, desc = _build_immersion(cfg)
    if chart.m < 3:
        raise DomainError(
            "distance-sphere curvature sampling needs m >= 3 "
            f"(chart has m = {chart.m})")
    rng = np.random.default_rng(cfg.seed)
    amb = ambient_for(chart, cfg.pole)
    lows = np.array([chart.domain[i][0] for i in range(chart.m)])
    spans = np.array([chart.domain[i][1] - chart.domain[i][0]
                      for i in range(chart.m)])
    rows = []
    skipped = 0
    attempts = 0
    while len(rows) < cfg.samples and attempts < 20 * cfg.samples:
        attempts += 1
        pt = lows + spans * rng.uniform(0.02, 0.98, size=chart.m)
        try:
            geom = point_geometry(chart, pt, amb=amb)
            exact = extrinsic_sphere_curvature(geom, mode="exact")
            lower, upper, valid = extrinsic_sphere_curvature(geom, mode="bounds")
        except ExtGeoError:
            skipped += 1
            continue
        rows.append([*(float(c) for c in pt), float(geom.r), exact,
                     lower, upper, valid])
    if not rows:
        raise DomainError("no admissible sample points for curvature rows")
    payload = {"immersion": desc, "samples": len(rows), "skipped": skipped,
               "header": [f"u{i + 1}" for i in range(chart.m)]
               + ["r", "exact", "lower", "upper", "valid"]}
    sandwich = [r for r in rows if r[-1]]
    payload["admissible"] = len(sandwich)
    payload["sandwich_ok"] = sum(
        1 for r in sandwich if r[-4] >= r[-3] - 1e-9 and r[-4] <= r[-2] + 1e-9)
    csv_path = _out_path(out_dir, "curvature.csv")
    if csv_path:
        write_csv(csv_path, payload["header"], rows)
        write_json(_out_path(out_dir, "curvature.json"), payload)
    return payload


def run_verify(cfg: RunConfig, out_dir) -> dict:
    """Battery of internal checks on one configured immersion."""
    chart, gt, desc = _build_immersion(cfg)
    mesh = _mesh_for(cfg, chart)
    checks = []

    def check(name, passed, detail):
        checks.append({"check": name, "passed": bool(passed),
                       "detail": detail})

    check("edge-lengths-positive", bool(np.all(mesh.edge_lengths > 0.0)),
          {"min": float(np.min(mesh.edge_lengths))})

    rho = mesh.rho
    finite = np.isfinite(rho[mesh.edges[:, 0]]) & np.isfinite(rho[mesh.edges[:, 1]])
    lhs = np.abs(rho[mesh.edges[finite, 0]] - rho[mesh.edges[finite, 1]])
    viol = float(np.max(lhs - mesh.edge_lengths[finite], initial=0.0))
    check("distance-triangle-inequality", viol <= 1e-9, {"max_violation": viol})
    check("basepoint-distance-zero", rho[mesh.basepoint] == 0.0,
          {"value": float(rho[mesh.basepoint])})

    kappa = mesh.vertices.kappa
    rng = np.random.default_rng(cfg.seed)
    ts = rng.uniform(0.0, 5.0, size=64)
    ident = np.max(np.abs(c_kappa(kappa, ts) ** 2
                          + kappa * s_kappa(kappa, ts) ** 2 - 1.0))
    check("comparison-identity", ident < 1e-12, {"max_residual": float(ident)})

    radii = cfg.exhaustion_radii
    if radii is None:
        radii = default_tail_radii(mesh)
    report = invariant_tails(mesh, radii)
    a_mono = bool(np.all(np.diff(report.a_tail.y) <= 1e-12))
    b_mono = bool(np.all(np.diff(report.b_tail.y) <= 1e-12))
    check("tails-non-increasing", a_mono and b_mono,
          {"a": a_mono, "b": b_mono})

    if gt is not None and gt.alpha_norm_sq is not None:
        want = np.asarray(gt.alpha_norm_sq(mesh.points), dtype=float)
        got = mesh.vertices.norm_alpha_sq
        scale = np.maximum(np.abs(want), 1e-10)
        err = float(np.max(np.abs(got - want) / scale))
        check("bending-ground-truth", err < 1e-6, {"max_rel_err": err})
    if gt is not None and gt.expected_class is not None:
        check("classification-expected",
              report.classification == gt.expected_class,
              {"expected": gt.expected_class, "got": report.classification})
    if gt is not None and gt.ends is not None:
        try:
            stab = ends_stability(mesh, epsilon_crit=cfg.epsilon_crit)
            check("ends-expected",
                  stab["stable"] and stab["n_ends"] == gt.ends,
                  {"expected": gt.ends, "got": stab["n_ends"],
                   "stable": stab["stable"]})
        except DomainError as exc:
            check("ends-expected", False, {"error": str(exc)})

    payload = _mesh_header(mesh, desc)
    payload["checks"] = checks
    payload["passed"] = all(c["passed"] for c in checks)
    if out_dir is not None:
        write_json(_out_path(out_dir, "verify.json"), payload)
    return payload


def run_catalog_list() -> dict:
    rows = []
    for name, entry in CATALOG.items():
        chart, gt = entry.build()
        rows.append({
            "name": name,
            "summary": entry.summary,
            "defaults": entry.defaults,
            "validity": entry.validity,
            "expected_class": gt.expected_class,
            "ends": gt.ends,
            "a_value": gt.a_value,
            "b_value": gt.b_value,
            "compact": gt.compact,
        })
    return {"entries": rows}


# ---------------------------------------------------------------------------
# argument handling

def _parse_resolution(text: str):
    parts = text.replace("x", ",").split(",")
    try:
        vals = [int(p) for p in parts if p != ""]
    except ValueError:
        raise ConfigError(f"cannot parse resolution {text!r}")
    if not vals:
        raise ConfigError(f"cannot parse resolution {text!r}")
    return vals[0] if len(vals) == 1 else vals


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="extgeo",
        description="Numerical invariants of immersed submanifolds of "
                    "nonpositively curved space forms")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("invariants", "bending tail invariants and classification"),
            ("volume", "volume curves and growth-bound verdicts"),
            ("ends", "end counting with a stability window"),
            ("curvature", "distance-sphere curvature samples"),
            ("verify", "internal check battery for one immersion")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--immersion", help="catalog entry name (shortcut "
                                           "when no config file is given)")
        p.add_argument("--out", help="directory for report files")
        p.add_argument("--threads", type=int)
        p.add_argument("--resolution", type=_parse_resolution)
        p.add_argument("--truncation", type=float)
        p.add_argument("--seed", type=int)
    pc = sub.add_parser("catalog", help="catalog inspection")
    pc.add_argument("action", choices=["list"])
    return ap


_DEFAULT_RESOLUTION = 33


def _config_from_args(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.immersion:
            raise ConfigError("give either --config or --immersion, not both")
    elif args.immersion:
        cfg = parse_config({
            "immersion": {"catalog": args.immersion},
            "resolution": _DEFAULT_RESOLUTION,
        })
    else:
        raise ConfigError("a config file (--config) or a catalog immersion "
                          "(--immersion) is required")
    if args.resolution is not None:
        cfg.resolution = args.resolution
    if args.threads is not None:
        if args.threads < 0:
            raise ConfigError("threads must be nonnegative")
        cfg.threads = args.threads
    if args.truncation is not None:
        if args.truncation <= 0:
            raise ConfigError("truncation must be positive")
        cfg.truncation = args.truncation
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _emit_error(exc: Exception) -> None:
    body = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        if getattr(exc, "line", None) is not None:
            body["line"] = exc.line
        if getattr(exc, "col", None) is not None:
            body["col"] = exc.col
    if isinstance(exc, HypothesisViolatedError) and exc.offenders:
        body["offenders"] = exc.offenders
    sys.stderr.write(dumps_json(body))


def main(argv=None) -> int:
    try:
        # inside the try: --resolution raises ConfigError during parsing
        args = _build_parser().parse_args(argv)
        if args.command == "catalog":
            payload = run_catalog_list()
            sys.stdout.write(dumps_json(payload))
            return 0
        cfg = _config_from_args(args)
        runner = {
            "invariants": run_invariants,
            "volume": run_volume,
            "ends": run_ends,
            "curvature": run_curvature,
            "verify": run_verify,
        }[args.command]
        payload = runner(cfg, args.out)
    except (ConfigError, ParseError) as exc:
        _emit_error(exc)
        return 2
    except ExtGeoError as exc:
        _emit_error(exc)
        return 3
    sys.stdout.write(dumps_json(payload))
    if args.command == "verify" and not payload["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
