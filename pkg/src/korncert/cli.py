"""Command-line front end.

Subcommands mirror the pipeline stages so each is independently
scriptable:

    korncert kernel  --op sym_grad --n 3 --K 2        exact kernel basis
    korncert probe   --op dev_sym_grad --n 2          ellipticity probe
    korncert check   --config run.json [--expect A2]  full certification run
    korncert points  --config run.json                point-measure run
    korncert plot    --config run.json --out dir      run + CSV emission

Exit codes: 0 success, 1 verdict differs from the expected one, 2 config
or schema violation (the message names the offending field), 3 geometry
degeneracy.  Reports are deterministic for a fixed config and seed; the
digest field identifies the payload with timings excluded, so repeated
runs can be compared byte for byte after dropping "timings".
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from .diffop import (
    DiffOperator,
    builtin_operator,
    ellipticity_probe,
    operator_from_json,
)
from .geometry import (
    GeometryError,
    SampleGrid,
    StarDomain,
    boundary_point,
    interior_points,
    line_points,
    outward_normal,
    sample_grid,
)
from .kernel import kernel_basis, kernel_dim_profile, kernel_to_json
from .normtest import TraceKind, Verdict, classify, point_measure_test
from .polyalg import eval_poly, format_poly

_DENSE_FACTOR_DEFAULT = 8
_SEED_ENV = "KORNCERT_SEED"
_FLOAT_FMT = "%.17g"

_BUILTIN_NAMES = ["grad", "div", "sym_grad", "dev_grad", "dev_sym_grad", "grad_k"]

_RATIONAL_SCHEMA = {"type": ["number", "string"]}

_DOMAIN_SCHEMA = {
    "type": "object",
    "required": ["n", "radial"],
    "additionalProperties": False,
    "properties": {
        "n": {"enum": [2, 3]},
        "radial": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["constant", "ball", "sine2d", "sine3d"]},
                "c": _RATIONAL_SCHEMA,
                "a": _RATIONAL_SCHEMA,
                "m": {"type": "integer", "minimum": 1},
                "m1": {"type": "integer", "minimum": 1},
                "m2": {"type": "integer", "minimum": 1},
            },
        },
    },
}

_GRID_SCHEMA = {
    "type": "object",
    "required": ["counts"],
    "additionalProperties": False,
    "properties": {
        "counts": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
            "maxItems": 2,
        },
        "range": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
            "minItems": 1,
            "maxItems": 2,
        },
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "https://example.org/korncert/run-config.json",
    "title": "korncert run configuration",
    "type": "object",
    "required": ["operator", "K", "test"],
    "additionalProperties": False,
    "properties": {
        "operator": {
            "type": "object",
            "oneOf": [
                {
                    "required": ["builtin", "n"],
                    "additionalProperties": False,
                    "properties": {
                        "builtin": {"enum": _BUILTIN_NAMES},
                        "n": {"type": "integer", "minimum": 1},
                        "order": {"type": "integer", "minimum": 1},
                    },
                },
                {
                    "required": ["terms"],
                    "additionalProperties": False,
                    "properties": {
                        "order": {"type": "integer", "minimum": 1},
                        "dimV": {"type": "integer", "minimum": 1},
                        "dimW": {"type": "integer", "minimum": 1},
                        "terms": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "required": ["alpha", "matrix"],
                                "additionalProperties": False,
                                "properties": {
                                    "alpha": {
                                        "type": "array",
                                        "items": {"type": "integer", "minimum": 0},
                                        "minItems": 1,
                                    },
                                    "matrix": {
                                        "type": "array",
                                        "minItems": 1,
                                        "items": {
                                            "type": "array",
                                            "minItems": 1,
                                            "items": _RATIONAL_SCHEMA,
                                        },
                                    },
                                },
                            },
                        },
                    },
                },
                {
                    "required": ["tensor4"],
                    "additionalProperties": False,
                    "properties": {"tensor4": {"type": "array"}},
                },
            ],
        },
        "K": {"type": "integer", "minimum": 0},
        "allow_low_degree": {"type": "boolean"},
        "test": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["boundary", "points"]}},
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma_rel": {"type": "number", "exclusiveMinimum": 0},
                "tol_dense": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "probe": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"trials": {"type": "integer", "minimum": 1}},
        },
        "seed": {"type": "integer"},
        "expected": {"enum": ["A1", "A2", "A3"]},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "report": {"type": "string"},
                "plots": {"type": "string"},
            },
        },
    },
}

_BOUNDARY_TEST_SCHEMA = {
    "type": "object",
    "required": ["kind", "trace", "domain", "coarse"],
    "additionalProperties": False,
    "properties": {
        "kind": {"const": "boundary"},
        "trace": {"enum": ["full", "normal", "tangential"]},
        "domain": _DOMAIN_SCHEMA,
        "coarse": _GRID_SCHEMA,
        "dense": _GRID_SCHEMA,
    },
}

_POINTS_TEST_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"const": "points"},
        "domain": _DOMAIN_SCHEMA,
        "points": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3},
        },
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["p0", "dir", "count", "extent"],
                "additionalProperties": False,
                "properties": {
                    "p0": {"type": "array", "items": {"type": "number"}},
                    "dir": {"type": "array", "items": {"type": "number"}},
                    "count": {"type": "integer", "minimum": 2},
                    "extent": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "interior": {
            "type": "object",
            "required": ["count"],
            "additionalProperties": False,
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
        },
    },
}


class ConfigError(Exception):
    """Invalid run configuration; maps to exit code 2."""


def _schema_check(instance, schema, prefix: str = "") -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = ".".join(str(p) for p in err.absolute_path)
        field = ".".join(x for x in (prefix, path) if x) or "<root>"
        raise ConfigError(f"config field {field}: {err.message}")


def validate_config(cfg: dict) -> None:
    """Structural and semantic validation; raises ConfigError naming the
    offending field."""
    _schema_check(cfg, CONFIG_SCHEMA)
    test = cfg["test"]
    if test["kind"] == "boundary":
        _schema_check(test, _BOUNDARY_TEST_SCHEMA, prefix="test")
    else:
        _schema_check(test, _POINTS_TEST_SCHEMA, prefix="test")
        if not any(k in test for k in ("points", "lines", "interior")):
            raise ConfigError(
                "config field test: points test needs at least one of points, lines, interior"
            )
        if "interior" in test and "domain" not in test:
            raise ConfigError("config field test.domain: interior sampling needs a domain")


def build_operator(spec: dict) -> DiffOperator:
    if "builtin" in spec:
        name = spec["builtin"]
        order = spec.get("order")
        if name == "grad_k" and order is None:
            raise ConfigError("config field operator.order: grad_k needs an order")
        try:
            return builtin_operator(name, spec["n"], order=order)
        except ValueError as exc:
            raise ConfigError(f"config field operator: {exc}") from exc
    try:
        return operator_from_json(spec)
    except ValueError as exc:
        raise ConfigError(f"config field operator: {exc}") from exc


def _build_grids(test: dict, dom: StarDomain) -> tuple[SampleGrid, SampleGrid]:
    coarse_spec = test["coarse"]
    try:
        coarse = sample_grid(dom, coarse_spec["counts"], coarse_spec.get("range"))
    except ValueError as exc:
        raise ConfigError(f"config field test.coarse: {exc}") from exc
    dense_spec = test.get("dense")
    try:
        if dense_spec is None:
            dense = sample_grid(
                dom,
                [c * _DENSE_FACTOR_DEFAULT for c in coarse.counts],
                coarse_spec.get("range"),
            )
        else:
            dense = sample_grid(
                dom, dense_spec["counts"], dense_spec.get("range", coarse_spec.get("range"))
            )
    except ValueError as exc:
        raise ConfigError(f"config field test.dense: {exc}") from exc
    if dense_spec is not None:
        if dense.ranges != coarse.ranges:
            raise ConfigError("config field test.dense.range: must match the coarse range")
        if not all(dc > cc for cc, dc in zip(coarse.counts, dense.counts)):
            raise ConfigError(
                "config field test.dense.counts: dense grid must be strictly finer than coarse"
            )
    return coarse, dense


def _gather_points(test: dict, n: int, dom: StarDomain | None, default_seed: int) -> list:
    points: list = []
    for p in test.get("points", ()):
        if len(p) != n:
            raise ConfigError(f"config field test.points: point {p} is not in R^{n}")
        points.append(np.array([float(v) for v in p]))
    for line in test.get("lines", ()):
        if len(line["p0"]) != n or len(line["dir"]) != n:
            raise ConfigError(f"config field test.lines: p0 and dir must be in R^{n}")
        try:
            points.extend(line_points(line["p0"], line["dir"], line["count"], line["extent"]))
        except ValueError as exc:
            raise ConfigError(f"config field test.lines: {exc}") from exc
    interior = test.get("interior")
    if interior is not None:
        assert dom is not None  # enforced by validate_config
        points.extend(interior_points(dom, interior["count"], interior.get("seed", default_seed)))
    return points


def _canonical_digest(report: dict) -> str:
    payload = {k: v for k, v in report.items() if k not in ("timings", "digest")}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def run_config(
    cfg: dict | str | Path,
    expect: str | None = None,
    emit_plots: str | None = None,
) -> tuple[dict, int]:
    """Execute a full certification run from a configuration.

    Returns the report dict and the process exit code.  The report is a
    pure function of the config and the effective seed; wall-clock
    timings live under "timings" and are excluded from "digest".
    """
    if not isinstance(cfg, dict):
        with open(cfg, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    validate_config(cfg)

    seed = cfg.get("seed", 0)
    env_seed = os.environ.get(_SEED_ENV)
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"environment {_SEED_ENV}: not an integer") from exc

    op = build_operator(cfg["operator"])
    K = cfg["K"]
    if K < op.order and not cfg.get("allow_low_degree", False):
        raise ConfigError(
            f"config field K: K={K} is below the operator order {op.order}; "
            "the kernel is the whole space (set allow_low_degree to proceed)"
        )
    tolerances = cfg.get("tolerances", {})
    sigma_rel = tolerances.get("sigma_rel", 1e-10)
    tol_dense = tolerances.get("tol_dense", 1e-8)
    trials = cfg.get("probe", {}).get("trials", 8)

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    probe = ellipticity_probe(op, trials=trials, seed=seed)
    timings["probe_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    kb = kernel_basis(op, K)
    timings["kernel_s"] = time.perf_counter() - t0

    test = cfg["test"]
    t0 = time.perf_counter()
    plots_info = None
    if test["kind"] == "boundary":
        dom = StarDomain.from_json(test["domain"])
        if dom.n != op.n:
            raise ConfigError(
                f"config field test.domain.n: domain is in R^{dom.n}, operator in R^{op.n}"
            )
        kind = TraceKind.of(test["trace"])
        if kind is not TraceKind.FULL and op.dimV != dom.n:
            raise ConfigError(
                f"config field test.trace: {kind.value} trace needs dimV == n, "
                f"operator has dimV={op.dimV}"
            )
        coarse, dense = _build_grids(test, dom)
        verdict = classify(kb, dom, kind, coarse, dense, sigma_rel=sigma_rel, tol_dense=tol_dense)
        test_info = {
            "kind": "boundary",
            "trace": kind.value,
            "domain": dom.to_json(),
            "coarse_points": len(coarse),
            "dense_points": len(dense),
        }
    else:
        dom = StarDomain.from_json(test["domain"]) if "domain" in test else None
        if dom is not None and dom.n != op.n:
            raise ConfigError(
                f"config field test.domain.n: domain is in R^{dom.n}, operator in R^{op.n}"
            )
        points = _gather_points(test, op.n, dom, seed)
        verdict = point_measure_test(kb, points, sigma_rel=sigma_rel, tol=tol_dense)
        test_info = {
            "kind": "points",
            "point_count": len(points),
            "points": [[float(c) for c in p] for p in points],
        }
        coarse = dense = None
    timings["test_s"] = time.perf_counter() - t0

    expected = expect if expect is not None else cfg.get("expected")
    report = {
        "schema": "korncert-report/1",
        "config": cfg,
        "operator": op.describe(),
        "ellipticity": {**probe.to_json(), "seed": seed},
        "kernel": {
            "K": K,
            "dim": kb.dim,
            "ambient_dim": kb.m,
            "rank": kb.rank,
            "basis": _pretty_basis(kb),
        },
        "test": test_info,
        "verdict": verdict.to_json(),
        "expected": expected,
        "expected_match": (verdict.tag == expected) if expected else None,
    }

    if test["kind"] == "boundary":
        plots_dir = emit_plots if emit_plots is not None else cfg.get("output", {}).get("plots")
        if plots_dir:
            plots_info = emit_plot_data(dom, coarse, dense, TraceKind.of(test["trace"]), verdict, plots_dir)
            report["plots"] = plots_info
    report["digest"] = _canonical_digest(report)
    report["timings"] = timings

    report_path = cfg.get("output", {}).get("report")
    if report_path:
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")

    exit_code = 0
    if expected is not None and verdict.tag != expected:
        exit_code = 1
    return report, exit_code


def _pretty_basis(kb) -> list[str]:
    return [format_poly(p) for p in kb.basis]


def emit_plot_data(
    dom: StarDomain,
    coarse: SampleGrid,
    dense: SampleGrid,
    kind: TraceKind,
    verdict: Verdict,
    outdir: str | Path,
) -> dict:
    """Write boundary.csv (coarse grid geometry) and, when certificates
    exist, residual.csv (per-certificate trace magnitude on the dense
    grid).  Floats carry 17 significant digits."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = dom.n
    theta_cols = ["theta1"] if n == 2 else ["theta1", "theta2"]

    boundary_path = outdir / "boundary.csv"
    with open(boundary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(theta_cols + [f"x{i+1}" for i in range(n)] + [f"nu{i+1}" for i in range(n)])
        for theta in coarse.thetas:
            x = boundary_point(dom, theta)
            nu = outward_normal(dom, theta)
            writer.writerow([_FLOAT_FMT % v for v in (*theta, *x, *nu)])

    info: dict = {"boundary": str(boundary_path), "residual": None}
    if not verdict.certificates:
        info["note"] = "no certificates; residual.csv not written"
        return info

    residual_path = outdir / "residual.csv"
    with open(residual_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(theta_cols + [f"res_{i+1}" for i in range(len(verdict.certificates))])
        for theta in dense.thetas:
            x = boundary_point(dom, theta)
            nu = outward_normal(dom, theta)
            row = list(theta)
            for cert in verdict.certificates:
                v = np.array(eval_poly(cert, x))
                if kind is TraceKind.NORMAL:
                    mag = abs(float(v @ nu))
                elif kind is TraceKind.TANGENTIAL:
                    mag = float(np.max(np.abs(v - float(v @ nu) * nu)))
                else:
                    mag = float(np.max(np.abs(v)))
                row.append(mag)
            writer.writerow([_FLOAT_FMT % v for v in row])
    info["residual"] = str(residual_path)
    return info


def _print_run_summary(report: dict) -> None:
    op = report["operator"]
    ker = report["kernel"]
    ell = report["ellipticity"]
    ver = report["verdict"]
    print(f"operator    : {op['name']} on R^{op['n']} (order {op['order']}, "
          f"V=R^{op['dimV']} -> W=R^{op['dimW']})")
    print(f"ellipticity : elliptic evidence={ell['elliptic']} "
          f"C-elliptic evidence={ell['c_elliptic']} "
          f"({ell['elliptic_trials']} trials, seed {ell['seed']})")
    if ell["witness"]:
        print(f"witness     : xi={ell['witness']['xi']} v={ell['witness']['v']}")
    print(f"kernel      : dim {ker['dim']} at degree <= {ker['K']}")
    t = report["test"]
    if t["kind"] == "boundary":
        print(f"test        : {t['trace']} trace, {t['domain']['radial']['family']} domain, "
              f"{t['coarse_points']} coarse / {t['dense_points']} dense samples")
    else:
        print(f"test        : point measures at {t['point_count']} points")
    suffix = ""
    if report["expected"]:
        suffix = f"  [expected {report['expected']}: " + (
            "match]" if report["expected_match"] else "MISMATCH]"
        )
    print(f"verdict     : {ver['verdict']} ({len(ver['certificates'])} certificates){suffix}")
    for i, cert in enumerate(ver["certificates"]):
        res = ver["diagnostics"]["residuals"][i]
        text = cert["pretty"]
        if len(text) > 100:
            text = text[:97] + "..."
        print(f"  cert {i+1}    : {text}  (residual {res:.2e})")
    if ver["diagnostics"].get("note"):
        print(f"note        : {ver['diagnostics']['note']}")
    print(f"digest      : {report['digest']}")


def _add_operator_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--op", help=f"builtin operator name ({', '.join(_BUILTIN_NAMES)})")
    parser.add_argument("--op-file", help="JSON file with a custom operator spec")
    parser.add_argument("--n", type=int, help="ambient dimension for builtin operators")
    parser.add_argument("--order", type=int, help="gradient order for grad_k")


def _operator_from_args(args) -> DiffOperator:
    if bool(args.op) == bool(args.op_file):
        raise ConfigError("give exactly one of --op or --op-file")
    if args.op:
        if args.n is None:
            raise ConfigError("--op needs --n")
        return build_operator({"builtin": args.op, "n": args.n, **({"order": args.order} if args.order else {})})
    with open(args.op_file, "r", encoding="utf-8") as fh:
        return build_operator(json.load(fh))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="korncert",
        description="Exact polynomial kernels of elliptic operators and "
        "norm certificates for sampled trace seminorms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_kernel = sub.add_parser("kernel", help="compute an exact polynomial kernel basis")
    _add_operator_args(p_kernel)
    p_kernel.add_argument("--K", type=int, required=True, help="degree bound")
    p_kernel.add_argument("--profile", type=int, metavar="K_MAX",
                          help="also print kernel dimensions for K=0..K_MAX")
    p_kernel.add_argument("--json", help="write the basis as JSON to this path")

    p_probe = sub.add_parser("probe", help="randomized exact ellipticity probe")
    _add_operator_args(p_probe)
    p_probe.add_argument("--trials", type=int, default=8)
    p_probe.add_argument("--seed", type=int, default=0)
    p_probe.add_argument("--json", help="write the report as JSON to this path")

    for name, help_text in [
        ("check", "run a certification config (boundary or points)"),
        ("points", "run a point-measure certification config"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--expect", choices=["A1", "A2", "A3"],
                       help="override the config's expected verdict")
        p.add_argument("--emit-plots", metavar="DIR", help="write CSV plot data here")
        p.add_argument("--report", metavar="PATH", help="write the JSON report here")

    p_plot = sub.add_parser("plot", help="run a config and emit CSV plot data")
    p_plot.add_argument("--config", required=True)
    p_plot.add_argument("--out", required=True, metavar="DIR")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    if args.command == "kernel":
        op = _operator_from_args(args)
        kb = kernel_basis(op, args.K)
        print(f"kernel of {op.name} on R^{op.n} at degree <= {args.K}: dim {kb.dim} "
              f"(ambient {kb.m}, rank {kb.rank})")
        for p in kb.basis:
            print("  ", format_poly(p))
        if args.profile is not None:
            profile = kernel_dim_profile(op, args.profile)
            print(f"dim profile K=0..{args.profile}: {list(profile.dims)} "
                  f"(stabilized: {profile.stabilized})")
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                json.dump(kernel_to_json(kb), fh, indent=2)
                fh.write("\n")
        return 0

    if args.command == "probe":
        op = _operator_from_args(args)
        report = ellipticity_probe(op, trials=args.trials, seed=args.seed)
        print(f"operator {op.name} on R^{op.n}:")
        print(f"  elliptic evidence   : {report.elliptic} ({report.elliptic_trials} trials)")
        print(f"  C-elliptic evidence : {report.c_elliptic} ({report.c_elliptic_trials} trials)")
        if report.witness:
            w = report.witness.to_json()
            print(f"  witness             : xi={w['xi']} v={w['v']}")
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                json.dump(report.to_json(), fh, indent=2)
                fh.write("\n")
        return 0

    if args.command in ("check", "points"):
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
        if args.command == "points":
            kind = cfg.get("test", {}).get("kind")
            if kind != "points":
                raise ConfigError(
                    f"config field test.kind: the points subcommand needs kind "
                    f"'points', got {kind!r}"
                )
        report, code = run_config(cfg, expect=args.expect, emit_plots=args.emit_plots)
        if args.report:
            Path(args.report).parent.mkdir(parents=True, exist_ok=True)
            with open(args.report, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=2)
                fh.write("\n")
        _print_run_summary(report)
        return code

    if args.command == "plot":
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
        if cfg.get("test", {}).get("kind") != "boundary":
            raise ConfigError("config field test.kind: plot needs a boundary test")
        report, code = run_config(cfg, emit_plots=args.out)
        plots = report.get("plots", {})
        print(f"boundary data : {plots.get('boundary')}")
        print(f"residual data : {plots.get('residual') or plots.get('note')}")
        return code

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
