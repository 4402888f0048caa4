"""Batch front-end: build spaces from config files and run the pipelines.

Subcommands: verify, geodesic, curvature, radon, dual-radon, invert-r3,
classify.  Configs are JSON files; unknown keys are rejected, and the
--seed / --tol flags override the corresponding scalar fields.  Outputs are
machine-readable JSON reports and plot-ready CSV with a fixed float format,
so identical configs and seeds give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ambient import classify_generator, generator_from_dict, generator_to_dict
from .errors import ConfigError, GeometryError
from .geodesic_sub import OrbitInvariants, random_submanifold
from .model import geodesic_trace, model_space
from .radon import (
    OrbitQuadrature,
    dual_radon,
    r3_reconstruct,
    r3_radon,
    radon,
    radon_functional,
    registry_density,
    registry_r3,
    vol_form_quadrature,
)
from .suite import run_space_suite

FLOAT_FMT = "%.17g"

_SPACE_KEYS = {"n", "case", "k", "p", "r", "matrix", "cc_sign"}
_COMMAND_KEYS = {
    "verify": {"space", "seed", "points", "tol", "perturb_connection"},
    "geodesic": {"space", "seed", "t_max", "step", "direction_scale"},
    "curvature": {"space", "seed", "h", "points"},
    "radon": {"space", "invariants", "function", "resolution", "seed", "truncation"},
    "dual-radon": {"space", "invariants", "function", "resolution", "seed", "count"},
    "invert-r3": {
        "function",
        "grid_points",
        "grid_extent",
        "n_polar",
        "n_az",
        "plane_grid",
        "cheb_nodes",
        "fd_step",
    },
    "classify": {"space"},
}
_INVARIANT_KEYS = {"q", "p_prime", "r_prime"}


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config root must be an object")
    allowed = _COMMAND_KEYS[command]
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    if "space" in config:
        bad = set(config["space"]) - _SPACE_KEYS
        if bad:
            raise ConfigError(f"unknown space keys: {sorted(bad)}")
    if "invariants" in config:
        bad = set(config["invariants"]) - _INVARIANT_KEYS
        if bad:
            raise ConfigError(f"unknown invariant keys: {sorted(bad)}")
    return config


def _space_from_config(config: dict):
    if "space" not in config:
        raise ConfigError("config is missing the 'space' object")
    spec = dict(config["space"])
    cc_sign = int(spec.pop("cc_sign", 1))
    omega, gen, klass = generator_from_dict(spec)
    n = omega.dim // 2 - 1
    return model_space(klass, n, cc_sign=cc_sign), klass


def _invariants_from_config(config: dict) -> OrbitInvariants:
    inv = config.get("invariants", {})
    if "q" not in inv:
        raise ConfigError("invariants need at least 'q'")
    return OrbitInvariants(
        int(inv["q"]),
        p_prime=None if inv.get("p_prime") is None else int(inv["p_prime"]),
        r_prime=None if inv.get("r_prime") is None else int(inv["r_prime"]),
    )


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows: np.ndarray):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")


def cmd_verify(args) -> int:
    config = _load_config(args.config, "verify")
    space, _ = _space_from_config(config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    report = run_space_suite(
        space,
        seed=seed,
        n_points=int(config.get("points", 5)),
        perturb_connection=bool(config.get("perturb_connection", False)),
    )
    payload = report.to_dict()
    payload["metadata"]["version"] = __version__
    out = _out_dir(args)
    _write_json(out / "verify_report.json", payload)
    for check in report.checks:
        flag = "PASS" if check.passed else "FAIL"
        print(
            f"[{flag}] {check.name}: {check.value:.3e} {check.direction} {check.tolerance:.1e}"
        )
    print(f"report: {out / 'verify_report.json'}")
    return 0 if report.passed else 1


def cmd_geodesic(args) -> int:
    config = _load_config(args.config, "geodesic")
    space, _ = _space_from_config(config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    rng = np.random.default_rng(seed)
    p = space.random_point(rng)
    x_vec = space.random_horizontal(p, rng, norm=float(config.get("direction_scale", 1.0)))
    trace = geodesic_trace(
        p, x_vec, float(config.get("t_max", 5.0)), float(config.get("step", 1e-3))
    )
    out = _out_dir(args)
    header = (
        ["t"]
        + [f"x{i}" for i in range(space.dim_ambient)]
        + ["level_residual", "pair_x", "pair_ax"]
    )
    _write_csv(out / "geodesic.csv", header, trace)
    drift = float(np.abs(trace[:, -3:]).max())
    print(f"geodesic trace with {trace.shape[0]} rows, max constraint residual {drift:.3e}")
    print(f"csv: {out / 'geodesic.csv'}")
    return 0 if drift < 1e-6 else 1


def cmd_curvature(args) -> int:
    config = _load_config(args.config, "curvature")
    space, klass = _space_from_config(config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    rng = np.random.default_rng(seed)
    from .curvature import ricci_type_report

    reports = []
    for _ in range(int(config.get("points", 3))):
        p = space.random_point(rng)
        reports.append(ricci_type_report(space, p, h=float(config.get("h", 1e-4))))
    summary = {
        "case": klass.describe(),
        "n": space.n,
        "seed": seed,
        "ricci_type_defect": max(r["ricci_type_defect"] or 0.0 for r in reports),
        "bianchi_residual": max(r["bianchi_residual"] for r in reports),
        "rho_squared_residual": max(r["rho_squared_residual"] for r in reports),
        "k_hat": float(np.mean([r["k_hat"] for r in reports])),
    }
    out = _out_dir(args)
    _write_json(out / "curvature_report.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_radon(args) -> int:
    config = _load_config(args.config, "radon")
    space, _ = _space_from_config(config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    rng = np.random.default_rng(seed)
    invariants = _invariants_from_config(config)
    sub = random_submanifold(space, invariants, rng)
    f = registry_density(space, config.get("function", "gaussian"))
    quad = vol_form_quadrature(
        sub,
        int(config.get("resolution", 24)),
        truncation=config.get("truncation"),
    )
    value = radon(f, sub, quad)
    out = _out_dir(args)
    payload = {
        "value": value,
        "total_weight": quad.total_weight,
        "nodes": int(quad.reps.shape[1]),
        "function": config.get("function", "gaussian"),
        "seed": seed,
        "invariants": {"q": invariants.q, "p_prime": invariants.p_prime, "r_prime": invariants.r_prime},
    }
    _write_json(out / "radon.json", payload)
    print(f"radon value: {value:.12g} (submanifold volume {quad.total_weight:.12g})")
    return 0


def cmd_dual_radon(args) -> int:
    config = _load_config(args.config, "dual-radon")
    space, _ = _space_from_config(config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    invariants = _invariants_from_config(config)
    f = registry_density(space, config.get("function", "gaussian"))
    functional = radon_functional(f, resolution=int(config.get("resolution", 16)))
    p0 = space.reference_point()
    result = dual_radon(
        functional, p0, OrbitQuadrature(invariants, int(config.get("count", 1000)), seed)
    )
    out = _out_dir(args)
    _write_json(
        out / "dual_radon.json",
        {
            "value": result.value,
            "stderr": result.stderr,
            "count": result.count,
            "seed": seed,
            "function": config.get("function", "gaussian"),
        },
    )
    print(f"dual radon: {result.value:.8g} +- {result.stderr:.3g} ({result.count} samples)")
    return 0


def cmd_invert_r3(args) -> int:
    config = _load_config(args.config, "invert-r3")
    f = registry_r3(config.get("function", "gaussian"))
    n_grid = int(config.get("grid_points", 21))
    extent = float(config.get("grid_extent", 1.5))
    axis = np.linspace(-extent, extent, n_grid)
    xs, ys, zs = np.meshgrid(axis, axis, axis, indexing="ij")
    points = np.column_stack([xs.ravel(), ys.ravel(), zs.ravel()])
    recon = r3_reconstruct(
        f,
        points,
        n_polar=int(config.get("n_polar", 32)),
        n_az=int(config.get("n_az", 64)),
        plane_grid=int(config.get("plane_grid", 41)),
        n_nodes=int(config.get("cheb_nodes", 72)),
        fd_step=float(config.get("fd_step", 1e-2)),
    )
    truth = f.evaluator(points)
    abs_err = np.abs(recon - truth)
    ref = float(np.abs(truth).max())
    max_rel = float(abs_err.max() / ref)
    out = _out_dir(args)
    rows = np.column_stack([points, recon, truth, abs_err])
    _write_csv(out / "reconstruction.csv", ["x", "y", "z", "f_rec", "f_true", "abs_err"], rows)
    _write_json(
        out / "invert_r3.json",
        {
            "function": config.get("function", "gaussian"),
            "grid_points": n_grid,
            "grid_extent": extent,
            "max_relative_error": max_rel,
            "reference_value": ref,
        },
    )
    print(f"max relative reconstruction error: {max_rel:.4%} (reference {ref:.6g})")
    return 0 if max_rel < 0.01 else 1


def cmd_classify(args) -> int:
    config = _load_config(args.config, "classify")
    if "space" not in config:
        raise ConfigError("classify needs a 'space' object")
    spec = dict(config["space"])
    spec.pop("cc_sign", None)
    omega, gen, klass = generator_from_dict(spec)
    n = omega.dim // 2 - 1
    payload = generator_to_dict(klass, n)
    payload["lambda"] = gen.lam
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symspace",
        description="Symplectic symmetric spaces: verification suites and Radon transforms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "verify": cmd_verify,
        "geodesic": cmd_geodesic,
        "curvature": cmd_curvature,
        "radon": cmd_radon,
        "dual-radon": cmd_dual_radon,
        "invert-r3": cmd_invert_r3,
        "classify": cmd_classify,
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--tol", type=float, default=None, help="override scalar tolerance")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
