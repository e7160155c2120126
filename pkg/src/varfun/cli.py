"""Configuration-driven experiment runner.

Each invocation runs one experiment from a JSON config file and writes its
artifacts (CSV/JSON) into the output directory, atomically, followed by a
``manifest.json`` echoed to stdout that hashes the config and every output.
Outputs are byte-identical for a fixed (config, seed) pair regardless of the
thread budget.

Exit codes: 0 success; 1 configuration error (bad usage, unreadable or
schema-invalid config); 2 numerical failure (rejection envelope violation,
solver stagnation, degenerate sampling).
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .basis import dense_tensor, eval_function, legendre_tensor_basis, rank1_tensor
from .geometry import (
    check_hausdorff_rates,
    check_manifold_projection,
    check_tangent_projection,
    circle_chart,
    klimit_check,
    parabola_chart,
    reach_lowrank_ball,
    reach_perturbation_check,
)
from .io import sha256_of_file, write_csv, write_json
from .measure import (
    DomainSpec,
    NumericalError,
    draw_samples,
    make_rng,
    standard_grid,
    uniform_weight,
)
from .model import FullSpace, LinearSpan, Rank1Cone, Shift
from .rip import MC, SPECTRAL, rip_delta_mc, rip_probability
from .solver import phase_diagram, quasi_opt_check, solve_iht_rank1
from .variation import optimal_weight, variation_estimate, variation_exact, variation_norms

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are config errors here
        raise _UsageError(message)


_SEED = {"type": "integer", "minimum": 0}
_THREADS = {"type": "integer", "minimum": 1}
_DIMS = {
    "type": "array",
    "items": {"type": "integer", "minimum": 1},
    "minItems": 1,
}
_POS_INT = {"type": "integer", "minimum": 1}
_POS_INT_LIST = {"type": "array", "items": _POS_INT, "minItems": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_FACTORS = {
    "type": "array",
    "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "minItems": 1,
}

_SCHEMAS = {
    "variation": {
        "type": "object",
        "additionalProperties": False,
        "required": ["dims"],
        "properties": {
            "dims": _DIMS,
            "class": {"enum": ["span", "rank1"]},
            "method": {"enum": ["exact", "mc"]},
            "num_samples": _POS_INT,
            "seed": _SEED,
            "threads": _THREADS,
        },
    },
    "optimal-weight": {
        "type": "object",
        "additionalProperties": False,
        "required": ["dims"],
        "properties": {
            "dims": _DIMS,
            "class": {"enum": ["span", "rank1"]},
            "seed": _SEED,
            "threads": _THREADS,
        },
    },
    "rip-prob": {
        "type": "object",
        "additionalProperties": False,
        "required": ["dims", "delta", "n_values"],
        "properties": {
            "dims": _DIMS,
            "class": {"enum": ["span", "rank1", "singleton"]},
            "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "n_values": _POS_INT_LIST,
            "trials": _POS_INT,
            "weight": {"enum": ["uniform", "optimal"]},
            "method": {"enum": ["spectral", "mc"]},
            "num_test": _POS_INT,
            "seed": _SEED,
            "threads": _THREADS,
        },
    },
    "phase-diagram": {
        "type": "object",
        "additionalProperties": False,
        "required": ["orders", "sample_counts", "dim"],
        "properties": {
            "orders": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 3}, "minItems": 1},
            "sample_counts": _POS_INT_LIST,
            "dim": _POS_INT,
            "target": {"enum": ["ones", "exp_sum"]},
            "trials": _POS_INT,
            "weight": {"enum": ["uniform", "optimal"]},
            "max_iters": _POS_INT,
            "tol": _POS_NUM,
            "seed": _SEED,
            "threads": _THREADS,
        },
    },
    "geometry-check": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "circle_radius": _POS_NUM,
            "parabola_curvature": _POS_NUM,
            "num_samples": _POS_INT,
            "perturbation_draws": _POS_INT,
            "rate_radius_factors": _FACTORS,
            "lowrank_dims": {
                "type": "array",
                "items": {"type": "integer", "minimum": 2},
                "minItems": 2,
                "maxItems": 2,
            },
            "lowrank_rank": _POS_INT,
            "lowrank_sigma": _POS_NUM,
            "ball_radius_factors": _FACTORS,
            "mc_samples": _POS_INT,
            "seed": _SEED,
            "threads": _THREADS,
        },
    },
    "quasi-opt": {
        "type": "object",
        "additionalProperties": False,
        "required": ["order", "dim", "n"],
        "properties": {
            "order": {"type": "integer", "minimum": 2, "maximum": 3},
            "dim": {"type": "integer", "minimum": 2},
            "n": _POS_INT,
            "perturbation": {"type": "number", "minimum": 0},
            "max_iters": _POS_INT,
            "tol": _POS_NUM,
            "num_test": _POS_INT,
            "seed": _SEED,
            "threads": _THREADS,
        },
    },
}

_DEFAULTS = {
    "variation": {"class": "span", "method": "exact", "num_samples": 4096},
    "optimal-weight": {"class": "span"},
    "rip-prob": {
        "class": "singleton",
        "trials": 1000,
        "weight": "uniform",
        "method": "spectral",
        "num_test": 1024,
    },
    "phase-diagram": {
        "target": "ones",
        "trials": 20,
        "weight": "optimal",
        "max_iters": 2000,
        "tol": 1e-12,
    },
    "geometry-check": {
        "circle_radius": 1.0,
        "parabola_curvature": 0.5,
        "num_samples": 1000,
        "perturbation_draws": 1000,
        "rate_radius_factors": [0.4, 0.2, 0.1],
        "lowrank_dims": [4, 4],
        "lowrank_rank": 1,
        "lowrank_sigma": 2.0,
        "ball_radius_factors": [0.5, 0.25, 0.125],
        "mc_samples": 2048,
    },
    "quasi-opt": {
        "perturbation": 1e-3,
        "max_iters": 2000,
        "tol": 1e-12,
        "num_test": 1024,
    },
}


def _model_from(name: str, basis):
    if name == "span":
        return FullSpace(basis)
    if name == "rank1":
        return Rank1Cone(basis)
    if name == "singleton":
        return LinearSpan(basis, ((1,) + (0,) * (basis.num_modes - 1),))
    raise ValueError(f"unknown model class {name!r}")


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _run_variation(cfg, outdir):
    dims = tuple(cfg["dims"])
    basis = legendre_tensor_basis(dims)
    model = _model_from(cfg["class"], basis)
    if cfg["method"] == "exact":
        k = variation_exact(model)
    else:
        k = variation_estimate(model, cfg["num_samples"], cfg["seed"])
    grid = standard_grid(basis.num_modes)
    values = k(grid)
    header = [f"y_{m + 1}" for m in range(basis.num_modes)] + ["K_value", "certificate"]
    rows = [
        list(grid[i]) + [float(values[i]), k.certificate] for i in range(grid.shape[0])
    ]
    return [write_csv(outdir / "variation.csv", header, rows)]


def _run_optimal_weight(cfg, outdir):
    dims = tuple(cfg["dims"])
    basis = legendre_tensor_basis(dims)
    k = variation_exact(_model_from(cfg["class"], basis))
    weight = optimal_weight(k)
    grid = standard_grid(basis.num_modes)
    kv, wv = k(grid), weight.evaluate(grid)
    header = [f"y_{m + 1}" for m in range(basis.num_modes)] + ["K_value", "weight_value"]
    rows = [
        list(grid[i]) + [float(kv[i]), float(wv[i])] for i in range(grid.shape[0])
    ]
    return [write_csv(outdir / "weight.csv", header, rows)]


def _run_rip_prob(cfg, outdir):
    dims = tuple(cfg["dims"])
    basis = legendre_tensor_basis(dims)
    model = _model_from(cfg["class"], basis)
    k = variation_exact(model)
    if cfg["weight"] == "optimal":
        weight = optimal_weight(k)
    else:
        weight = uniform_weight(basis.num_modes)
    sup_norm_w = variation_norms(k, weight).sup_norm
    method = SPECTRAL if cfg["method"] == "spectral" else MC
    rows = []
    for n in cfg["n_values"]:
        est = rip_probability(
            model,
            weight,
            n,
            cfg["delta"],
            cfg["trials"],
            cfg["seed"],
            sup_norm_w,
            method=method,
            num_test=cfg["num_test"],
            threads=cfg["threads"],
        )
        rows.append(
            [
                est.n,
                est.delta,
                est.trials,
                est.failures,
                est.rate,
                est.wilson_low,
                est.wilson_high,
                est.hoeffding_exponent,
            ]
        )
    header = ["n", "delta", "trials", "failures", "rate", "wilson_lo", "wilson_hi", "exponent"]
    return [write_csv(outdir / "rip.csv", header, rows)]


def _run_phase_diagram(cfg, outdir):
    cells = phase_diagram(
        cfg["orders"],
        cfg["sample_counts"],
        cfg["dim"],
        cfg["target"],
        cfg["trials"],
        cfg["seed"],
        max_iters=cfg["max_iters"],
        tol=cfg["tol"],
        threads=cfg["threads"],
        weight=cfg["weight"],
    )
    header = ["M", "n", "trials", "mean_rel_error", "success_rate", "seed"]
    rows = [
        [c.order, c.n, c.trials, c.mean_rel_error, c.success_rate, c.seed]
        for c in cells
    ]
    return [write_csv(outdir / "phase.csv", header, rows)]


def _run_geometry_check(cfg, outdir):
    seed = cfg["seed"]
    report = {}
    charts = {
        "circle": circle_chart(cfg["circle_radius"]),
        "parabola": parabola_chart(cfg["parabola_curvature"]),
    }
    for name, chart in charts.items():
        reach = chart.reach
        rates = check_hausdorff_rates(
            chart, reach, [f * reach for f in cfg["rate_radius_factors"]]
        )
        report[name] = {
            "tangent_projection": check_tangent_projection(
                chart, reach, 0.9 * reach, cfg["num_samples"], seed
            ),
            "manifold_projection": check_manifold_projection(
                chart,
                reach,
                min(0.5 * reach, 0.9 * chart.r_star),
                cfg["num_samples"],
                seed,
            ),
            "hausdorff_rates": rates,
        }
    d1, d2 = cfg["lowrank_dims"]
    rank, sigma = cfg["lowrank_rank"], cfg["lowrank_sigma"]
    if rank > min(d1, d2):
        raise ValueError("lowrank_rank exceeds min(lowrank_dims)")
    anchor = np.zeros((d1, d2))
    np.fill_diagonal(anchor[:rank, :rank], sigma)
    report["lowrank"] = {
        "reach_ball": reach_lowrank_ball(anchor, rank, 0.5 * sigma),
        "perturbation": reach_perturbation_check(
            anchor, rank, 0.5 * sigma, cfg["perturbation_draws"], seed
        ),
        "klimit": klimit_check(
            legendre_tensor_basis((d1, d2)),
            anchor,
            rank,
            [f * sigma for f in cfg["ball_radius_factors"]],
            cfg["mc_samples"],
            seed,
        ),
    }
    payload = _jsonable(report)
    payload["passed"] = all(
        payload[name][check]["passed"]
        for name in ("circle", "parabola")
        for check in ("tangent_projection", "manifold_projection", "hausdorff_rates")
    ) and payload["lowrank"]["perturbation"]["passed"] and payload["lowrank"]["klimit"]["passed"]
    return [write_json(outdir / "geometry.json", payload)]


def _run_quasi_opt(cfg, outdir):
    order, dim, n = cfg["order"], cfg["dim"], cfg["n"]
    basis = legendre_tensor_basis((dim,) * order)
    cone = Rank1Cone(basis)
    rng = make_rng(cfg["seed"])
    factors = [rng.standard_normal(dim) for _ in range(order)]
    star = rank1_tensor([f / np.linalg.norm(f) for f in factors])
    noise = rng.standard_normal(basis.dims)
    target = star.to_dense() + cfg["perturbation"] * noise / np.linalg.norm(noise)
    target_coeff = dense_tensor(target)

    weight = optimal_weight(variation_exact(FullSpace(basis)))
    batch = draw_samples(DomainSpec(order), weight, n, cfg["seed"])
    values = eval_function(basis, target_coeff, batch.points)
    result = solve_iht_rank1(
        basis, batch, values, max_iters=cfg["max_iters"], tol=cfg["tol"]
    )
    if "stagnation" in result.flags:
        raise NumericalError("hard-thresholding stagnated before convergence")
    shifted = Shift(basis, target_coeff, cone)
    delta_hat = rip_delta_mc(shifted, batch, cfg["num_test"], cfg["seed"]).delta_hat
    report = quasi_opt_check(
        target_coeff, cone, batch, result, delta_hat, weight=weight
    )
    payload = _jsonable(report)
    payload.update(
        {
            "pass": payload.pop("passed"),
            "n": n,
            "seed": cfg["seed"],
            "iterations": result.iterations,
            "residual": result.residual,
            "converged": result.converged,
        }
    )
    return [write_json(outdir / "quasiopt.json", payload)]


_RUNNERS = {
    "variation": _run_variation,
    "optimal-weight": _run_optimal_weight,
    "rip-prob": _run_rip_prob,
    "phase-diagram": _run_phase_diagram,
    "geometry-check": _run_geometry_check,
    "quasi-opt": _run_quasi_opt,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="varfun", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        raw = Path(args.config).read_bytes()
        cfg = {"seed": 0, "threads": 1, **_DEFAULTS[args.subcommand]}
        cfg.update(json.loads(raw))
        jsonschema.validate(cfg, _SCHEMAS[args.subcommand])
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 1
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        print(f"error: invalid config at {where}: {exc.message}", file=sys.stderr)
        return 1
    outdir = Path(args.out)
    try:
        outputs = _RUNNERS[args.subcommand](cfg, outdir)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "subcommand": args.subcommand,
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "seed": cfg["seed"],
        "threads": cfg["threads"],
        "outputs": {p.name: sha256_of_file(p) for p in outputs},
    }
    write_json(outdir / "manifest.json", manifest)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
