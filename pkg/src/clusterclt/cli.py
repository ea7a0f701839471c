"""Command-line pipelines: simulate, estimate, diagnose, clt-check, sweep.

Every subcommand reads one JSON config, validates it before computing anything and
writes its outputs plus a manifest into ``--out``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import io as fio
from .diagnostics import (draw_w, estimate_delta_n, estimate_T, field_source, lemma_bounds,
                          moment_sums)
from .extremogram import NoExceedanceError, estimate_via_blocks
from .functionals import ExceedanceCount, ExtremogramFunctional
from .harness import ConfigurationError, EstimatorConfig, path_sweep, report_summary, run_clt_experiment
from .lattice import BlockGrid, LatticeShape, max_spatial_lag
from .relevance import estimate_v_n, normalize_field, relevance_from_dict, scale_field
from .simulate import RNG_ALGORITHM, generate_field, marginal_scale, spec_from_dict

EXIT_CONFIG = 2
EXIT_NO_EXCEEDANCE = 3

_REL = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["norm-exceedance", "ball-complement", "box"]},
        "theta": {"type": "number", "exclusiveMinimum": 0},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "norm": {"enum": ["linf", "l2"]},
        "lower": {"type": "array", "items": {"type": ["number", "null"]}},
        "upper": {"type": "array", "items": {"type": ["number", "null"]}},
        "lower_closed": {"type": "boolean"},
        "upper_closed": {"type": "boolean"},
    },
    "additionalProperties": False,
}
_POSINT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "required": ["generator"],
    "properties": {
        "generator": {
            "type": "object",
            "required": ["kind", "shape"],
            "properties": {
                "kind": {"enum": ["iid-pareto", "gaussian-iid", "max-moving-maxima", "m-dependent-average"]},
                "shape": _POSINT_LIST,
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "weights": {"type": "array"},
            },
            "additionalProperties": False,
        },
        "blocks": _POSINT_LIST,
        "relevance": {
            "type": "object",
            "required": ["A"],
            "properties": {"A": _REL, "B": _REL},
            "additionalProperties": False,
        },
        "lags": {
            "type": "object",
            "required": ["L_s", "L_t"],
            "properties": {"L_s": {"type": "integer", "minimum": 0}, "L_t": {"type": "integer", "minimum": 0}},
            "additionalProperties": False,
        },
        "k_n": {"type": "number", "exclusiveMinimum": 1},
        "normalization": {"enum": ["empirical", "marginal"]},
        "u_n": {"type": "number", "exclusiveMinimum": 0},
        "replicates": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "field": {"type": "string"},
        "mc_pairs": {"type": "integer", "minimum": 1000},
        "diagnose": {
            "type": "object",
            "properties": {
                "t": {"type": "array", "items": {"type": ["number", "array"]}},
                "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "eps": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "functionals": {
                    "type": "array", "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {
                            "kind": {"enum": ["extremogram", "exceedance-count"]},
                            "h_s": {"type": "integer", "minimum": 0},
                            "h_t": {"type": "integer", "minimum": 0},
                        },
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "required": ["path"],
            "properties": {
                "path": {
                    "type": "array", "minItems": 1,
                    "items": {
                        "type": "object", "required": ["shape", "r"],
                        "properties": {"shape": _POSINT_LIST, "r": _POSINT_LIST},
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

NEEDS = {
    "simulate": (),
    "estimate": ("blocks", "relevance", "lags"),
    "diagnose": ("blocks", "relevance", "replicates", "diagnose"),
    "clt-check": ("blocks", "relevance", "lags", "replicates"),
    "sweep": ("relevance", "lags", "replicates", "sweep"),
}


class ConfigError(ValueError):
    pass


def _key(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def validate_config(cfg: dict, subcommand: str) -> None:
    """Schema check, then cross-field consistency; raises ``ConfigError`` naming the key."""
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(SCHEMA).iter_errors(cfg))
    if err is not None:
        raise ConfigError(f"config error at '{_key(err.absolute_path)}': {err.message}")
    for k in NEEDS[subcommand]:
        if k not in cfg:
            raise ConfigError(f"config error at '{k}': required by '{subcommand}'")
    shape = cfg["generator"]["shape"]
    pairs = [(shape, cfg["blocks"], "blocks")] if "blocks" in cfg else []
    if subcommand == "sweep":
        pairs = [(p["shape"], p["r"], f"sweep.path.{i}.r") for i, p in enumerate(cfg["sweep"]["path"])]
    for shp, r, key in pairs:
        if len(r) != len(shp):
            raise ConfigError(f"config error at '{key}': need {len(shp)} block sides, got {len(r)}")
        if any(ri > ni for ri, ni in zip(r, shp)):
            raise ConfigError(f"config error at '{key}': block side exceeds lattice side")
        if "lags" in cfg and subcommand != "diagnose":
            if len(shp) != 3:
                raise ConfigError(f"config error at '{key}': the iso-extremogram needs (s1, s2, t) lattices")
            cap = max_spatial_lag(r[0], r[1])
            L_s, L_t = cfg["lags"]["L_s"], cfg["lags"]["L_t"]
            if L_s > cap:
                raise ConfigError(f"config error at 'lags.L_s': L_s={L_s} violates the lag cap "
                                  f"L_s <= ceil(min(r1,r2)/2)-1 = {cap}")
            if L_t > shp[2] - 1:
                raise ConfigError(f"config error at 'lags.L_t': L_t={L_t} must be <= n3-1 = {shp[2] - 1}")
    if subcommand == "diagnose":
        for i, f in enumerate(cfg["diagnose"].get("functionals", [])):
            if f["kind"] == "extremogram":
                r = cfg["blocks"]
                if len(r) != 3 or f.get("h_s", 0) > max_spatial_lag(r[0], r[1]) or f.get("h_t", 0) >= r[2]:
                    raise ConfigError(f"config error at 'diagnose.functionals.{i}': lag does not fit the block")
    try:
        spec_from_dict(cfg["generator"])
        if "relevance" in cfg:
            for rel in cfg["relevance"].values():
                relevance_from_dict(rel)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"config error at 'generator' or 'relevance': {exc}") from exc


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _spec(cfg, seed):
    return spec_from_dict(cfg["generator"]).with_seed(seed)


def _sets(cfg):
    A = relevance_from_dict(cfg["relevance"]["A"])
    B = relevance_from_dict(cfg["relevance"]["B"]) if "B" in cfg["relevance"] else A
    return A, B


def _resolve(cfg_path, p):
    p = Path(p)
    return p if p.is_absolute() else Path(cfg_path).parent / p


# ------------------------------------------------------------------ subcommands

def cmd_simulate(cfg, seed, out, threads, cfg_path):
    spec = _spec(cfg, seed)
    fld = generate_field(spec)
    fio.write_field(out / "field.bin", fld)
    fio.write_json(out / "simulate.json", fio.manifest("simulate", cfg, seed, RNG_ALGORITHM,
                                                       outputs=["field.bin"]))
    return 0


def cmd_estimate(cfg, seed, out, threads, cfg_path):
    A, B = _sets(cfg)
    k_n = float(cfg.get("k_n", 10.0))
    if "field" in cfg:
        fld = fio.read_field(_resolve(cfg_path, cfg["field"]))
        source = "file"
    else:
        spec = _spec(cfg, seed)
        fld = generate_field(spec)
        source = "simulated"
    if tuple(fld.values.shape[:3]) != tuple(cfg["generator"]["shape"]):
        raise ConfigError(f"config error at 'generator.shape': field has shape {list(fld.values.shape[:3])}")
    mode = cfg.get("normalization", "empirical")
    if "u_n" in cfg:
        nf = scale_field(fld, cfg["u_n"], k_n)
        v_n, mode = estimate_v_n(nf, A), "fixed"
    elif mode == "marginal":
        ms = marginal_scale(_spec(cfg, seed), k_n, A)
        nf = scale_field(fld, ms.u_n, k_n)
        v_n = ms.v_n
    else:
        nf = normalize_field(fld, k_n)
        v_n = estimate_v_n(nf, A)
    grid = BlockGrid(LatticeShape(nf.values.shape[:3]), tuple(cfg["blocks"]))
    try:
        est = estimate_via_blocks(nf, grid, A, B, cfg["lags"]["L_s"], cfg["lags"]["L_t"])
    except NoExceedanceError as exc:
        count = int(A.mask(nf.values).sum())
        print(f"error: {exc} (center exceedances: 0, relevant points in field: {count})", file=sys.stderr)
        return EXIT_NO_EXCEEDANCE
    fio.write_text(out / "extremogram.csv", fio.extremogram_csv(est))
    fio.write_json(out / "estimate.json", fio.manifest(
        "estimate", cfg, seed, RNG_ALGORITHM, u_n=nf.u_n, v_n=v_n, normalization=mode,
        field_source=source, denominator_count=est.denominator_count, outputs=["extremogram.csv"]))
    return 0


def _functionals(cfg, A, B):
    out = []
    for f in cfg["diagnose"].get("functionals", [{"kind": "extremogram"}]):
        if f["kind"] == "extremogram":
            out.append(ExtremogramFunctional(A, B, f.get("h_s", 0), f.get("h_t", 0)))
        else:
            out.append(ExceedanceCount(A))
    return out


def cmd_diagnose(cfg, seed, out, threads, cfg_path):
    A, B = _sets(cfg)
    k_n = float(cfg.get("k_n", 10.0))
    d = cfg["diagnose"]
    fs = _functionals(cfg, A, B)
    spec = _spec(cfg, seed)
    src = field_source(spec, cfg["blocks"], fs, k_n, A, pilot_seed=seed)
    w = draw_w(src, cfg["replicates"], seed, threads)
    delta = float(d.get("delta", 1.0))
    eps = [float(e) for e in d.get("eps", [0.5])]
    summary = moment_sums(w, delta, eps)
    rows = []
    for i, t in enumerate(d.get("t", [1.0])):
        t = np.broadcast_to(np.atleast_1d(np.asarray(t, dtype=float)), (len(fs),))
        de = estimate_delta_n(w, t, seed=seed + 1 + i)
        T = estimate_T(w, t) if len(w.m) in (2, 3) else None
        b = lemma_bounds(summary, t, eps, T)
        rows.append({
            "t": t.tolist(),
            "delta_hat": de.value, "delta_stderr": de.stderr, "covariance_clipped": de.clipped,
            "T_hat": None if T is None else T.value, "T_stderr": None if T is None else T.stderr,
            "lemma1_bound": b.lemma1, "lemma2_bound": b.lemma2,
            "remark1_bound": {repr(k): v for k, v in b.remark1.items()},
            "remark1_via_moments": {repr(k): v for k, v in b.remark1_via_moments.items()},
        })
    fio.write_json(out / "diagnostics.json", fio.manifest(
        "diagnose", cfg, seed, RNG_ALGORITHM, v_n=src.v_n, centering=w.centering,
        functionals=[getattr(f, "name", str(f)) for f in fs],
        moments={"A_n": summary.A_n, "A_n_stderr": summary.A_n_stderr, "a_n": summary.a_n,
                 "a_n_stderr": summary.a_n_stderr, "delta": summary.delta,
                 "B_n": {repr(k): v for k, v in summary.B_n.items()},
                 "blocks": summary.blocks, "replicates": summary.replicates},
        per_t=rows, outputs=["diagnostics.json"]))
    return 0


def _estimator_config(cfg, r):
    A, B = _sets(cfg)
    return EstimatorConfig(tuple(r), cfg["lags"]["L_s"], cfg["lags"]["L_t"], float(cfg.get("k_n", 10.0)),
                           A, B, int(cfg.get("mc_pairs", 400_000)))


def cmd_clt_check(cfg, seed, out, threads, cfg_path):
    spec = _spec(cfg, seed)
    rep = run_clt_experiment(spec, _estimator_config(cfg, cfg["blocks"]), cfg["replicates"], seed, threads)
    fio.write_text(out / "clt_samples.csv", fio.samples_csv(rep.lags, rep.samples))
    fio.write_json(out / "clt_report.json", fio.manifest(
        "clt-check", cfg, seed, RNG_ALGORITHM, report=report_summary(rep),
        outputs=["clt_samples.csv", "clt_report.json"]))
    return 0


def cmd_sweep(cfg, seed, out, threads, cfg_path):
    spec = _spec(cfg, seed)
    path = [(p["shape"], p["r"]) for p in cfg["sweep"]["path"]]
    res = path_sweep(spec, path, _estimator_config(cfg, path[0][1]), cfg["replicates"], seed, threads)
    fio.write_json(out / "sweep.json", fio.manifest("sweep", cfg, seed, RNG_ALGORITHM, steps=res,
                                                    outputs=["sweep.json"]))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "diagnose": cmd_diagnose,
    "clt-check": cmd_clt_check,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clusterclt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run config")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--out", default=".", help="output directory (created if missing)")
        s.add_argument("--threads", type=int, default=None, help="worker cap; default all cores")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        validate_config(cfg, args.command)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = int(cfg.get("seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, seed, out, args.threads, args.config)
    except (ConfigError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
