"""Experiment harness.

Subcommands::

    saddleflow run      --config cfg.json --out DIR    one run + bound report
    saddleflow tradeoff --config cfg.json --out DIR    reward/penalty sweep CSV
    saddleflow regret   --config cfg.json --out DIR    regret-vs-horizon CSV
    saddleflow offline  --config cfg.json --out DIR    offline certificate JSON
    saddleflow validate                                built-in invariant suites

Flags: ``--config`` (JSON experiment config), ``--out`` (output directory),
``--jobs`` (worker pool size, env ``SADDLEFLOW_JOBS`` as fallback),
``--seed`` (overrides the config seed).  All randomness flows from config
seeds; reruns are bit-identical.

Exit codes: 0 success, 1 invariant/bound violation, 2 usage/config error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .data import DatasetFormatError, GeneratorConfig, generate, load_dataset
from .diagnostics import bound_components, check_regret_bound
from .offline import eval_primal, solve_offline
from .online import (
    make_schedule,
    run_additive_baseline,
    run_primal_dual,
    run_primal_dual_estimated,
)
from .oracle import SimplexBlocks
from .penalty import eval_penalty, penalty_from_dict, penalty_to_dict
from .validation import run_all

__all__ = ["main", "ConfigError", "load_config"]

DEFAULT_SWEEP = [g / 2.0 for g in range(-16, 21)]  # 2^gamma, gamma = -8 .. 10
DEFAULT_HORIZONS = [100, 200, 500, 1000, 2000]
_CONFIG_KEYS = {
    "penalty", "generator", "dataset", "algorithm", "a_init", "schedule",
    "sweep", "horizons", "repeats", "seed", "inner_iters", "inner_step_scale",
    "offline_max_iters", "offline_tol",
}
_SCHEDULE_KEYS = {"dual_mode", "g_bound", "r_lambda", "kappa", "matrix_radius"}


class ConfigError(ValueError):
    """A config that cannot describe an experiment."""


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "schedule" in cfg:
        bad = set(cfg["schedule"]) - _SCHEDULE_KEYS
        if bad:
            raise ConfigError(f"unknown schedule keys: {sorted(bad)}")
    return cfg


def _generator_from_dict(d: dict, seed: int, horizon: int | None = None) -> GeneratorConfig:
    if not isinstance(d, dict):
        raise ConfigError("generator must be a JSON object")
    try:
        blocks = None
        if "blocks" in d:
            blocks = SimplexBlocks(tuple(d["blocks"]))
        elif "n_blocks" in d:
            blocks = SimplexBlocks.even(int(d["d"]), int(d["n_blocks"]))
        return GeneratorConfig(
            distribution=d.get("distribution", "gaussian"),
            m=int(d["m"]),
            d=int(d["d"]),
            horizon=int(horizon if horizon is not None else d["T"]),
            blocks=blocks,
            seed=seed,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid generator: {exc}") from exc


def _resolve_dataset(cfg: dict, seed: int):
    """The configured rounds, either generated or loaded from disk."""
    has_gen, has_path = "generator" in cfg, "dataset" in cfg
    if has_gen == has_path:
        raise ConfigError('config needs exactly one of "generator" and "dataset"')
    if has_gen:
        return generate(_generator_from_dict(cfg["generator"], seed))
    return load_dataset(cfg["dataset"])


def _penalty(cfg: dict):
    if "penalty" not in cfg:
        raise ConfigError('config needs a "penalty"')
    try:
        return penalty_from_dict(cfg["penalty"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _schedule(cfg: dict, dataset, spec):
    schedule = make_schedule(dataset, spec)
    overrides = cfg.get("schedule", {})
    if overrides:
        schedule = dataclasses.replace(schedule, **overrides)
    return schedule


def _seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    return max(1, int(os.environ.get("SADDLEFLOW_JOBS", "1")))


def _map_cells(worker, cells, jobs):
    if jobs <= 1 or len(cells) <= 1:
        return [worker(c) for c in cells]
    with Pool(min(jobs, len(cells))) as pool:
        return pool.map(worker, cells)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", newline="\n")


# ---------------------------------------------------------------- run

def _write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="\n") as fh:
        for t in range(trace.horizon):
            row = {
                "t": t + 1,
                "x": trace.x_hat[t].tolist(),
                "lambda": trace.lambda_hat[t].tolist(),
                "residual": trace.residual_true[t].tolist(),
                "reward": trace.reward[t],
            }
            if trace.a_hat is not None:
                row["a_hat"] = trace.a_hat[t].tolist()
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    seed = _seed(cfg, args)
    spec = _penalty(cfg)
    algorithm = cfg.get("algorithm")
    if algorithm not in ("alg1", "alg2", "additive"):
        raise ConfigError('config "algorithm" must be alg1, alg2 or additive')
    dataset = _resolve_dataset(cfg, seed)

    schedule = None
    if algorithm == "alg1":
        schedule = _schedule(cfg, dataset, spec)
        trace = run_primal_dual(dataset, spec, schedule)
    elif algorithm == "alg2":
        schedule = _schedule(cfg, dataset, spec)
        a_init = cfg.get("a_init", "zero")
        if a_init not in ("zero", "first"):
            raise ConfigError('config "a_init" must be "zero" or "first"')
        trace = run_primal_dual_estimated(
            dataset, spec, schedule,
            a_init=dataset[0].a if a_init == "first" else None,
        )
    else:
        trace = run_additive_baseline(
            dataset, spec,
            inner_iters=int(cfg.get("inner_iters", 500)),
            inner_step_scale=cfg.get("inner_step_scale"),
        )

    sol = solve_offline(
        dataset, spec,
        max_iters=int(cfg.get("offline_max_iters", 20000)),
        tol=float(cfg.get("offline_tol", 1e-3)),
    )
    p_hat = eval_primal(dataset, spec, trace.x_hat)
    reward = float(trace.reward.mean())
    pen_value = eval_penalty(spec, trace.residual_true.mean(axis=0))
    report = None
    if schedule is not None:
        report = bound_components(trace, dataset, spec, schedule, sol)
        regret_hi, regret_lo = report.empirical_regret, report.empirical_regret_lower
    else:
        regret_hi = sol.d_value - p_hat
        regret_lo = regret_hi - sol.gap

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_trace(out / "trace.jsonl", trace)
    _write_json(out / "report.json", {
        "algorithm": algorithm,
        "penalty": penalty_to_dict(spec),
        "seed": seed,
        "horizon": len(dataset),
        "m": dataset[0].m,
        "d": dataset[0].d,
        "reward_mean": reward,
        "penalty_value": pen_value,
        "objective": p_hat,
        "regret_upper": regret_hi,
        "regret_lower": regret_lo,
        "offline": {
            "p_value": sol.p_value, "d_value": sol.d_value,
            "gap": sol.gap, "iterations": sol.iterations,
        },
        "bound": report.to_dict() if report else None,
        "bound_satisfied": check_regret_bound(report) if report else None,
    })
    total = _fmt(report.bound_total) if report else "n/a"
    print(
        f"algorithm={algorithm} reward={reward:.6f} penalty={pen_value:.6f} "
        f"regret=[{regret_lo:.6f},{regret_hi:.6f}] bound_total={total}"
    )
    if report and not check_regret_bound(report):
        print("bound violation: measured regret exceeds the guarantee", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------- tradeoff

def _sweep_penalty(pen_dict: dict, r_lambda: float) -> dict:
    """Penalty dict at one sweep scale.  A huber family without a pinned
    "l" tracks the scale (the scaled-huber family ``r * H_{1,1}``, whose
    kink stays at residual norm 1 as the scale grows)."""
    out = {**pen_dict, "r_lambda": r_lambda}
    if out.get("kind") == "huber" and "l" not in pen_dict:
        out["l"] = r_lambda
    return out


def _tradeoff_cell(cell) -> tuple:
    """One sweep cell: (reward, normalized penalty) for the primal-dual
    algorithm and the additive baseline on one seeded dataset."""
    gen_dict, pen_dict, gamma, seed, inner_iters, inner_step_scale = cell
    r_lambda = 2.0 ** gamma
    spec = penalty_from_dict(_sweep_penalty(pen_dict, r_lambda))
    dataset = generate(_generator_from_dict(gen_dict, seed))

    trace_na = run_primal_dual(dataset, spec, make_schedule(dataset, spec))
    trace_add = run_additive_baseline(
        dataset, spec, inner_iters=inner_iters, inner_step_scale=inner_step_scale
    )
    out = []
    for trace in (trace_na, trace_add):
        reward = float(trace.reward.mean())
        pen_norm = eval_penalty(spec, trace.residual_true.mean(axis=0)) / r_lambda
        out.extend([reward, pen_norm])
    return tuple(out)


def cmd_tradeoff(args) -> int:
    cfg = load_config(args.config)
    seed = _seed(cfg, args)
    if "generator" not in cfg:
        raise ConfigError("tradeoff requires a generator config")
    pen_dict = dict(cfg.get("penalty") or {"kind": "norm", "q": 2})
    pen_dict.pop("r_lambda", None)  # the sweep owns the scale
    penalty_from_dict(_sweep_penalty(pen_dict, 1.0))  # validate the family early
    sweep = cfg.get("sweep", DEFAULT_SWEEP)
    repeats = int(cfg.get("repeats", 10))
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    inner_iters = int(cfg.get("inner_iters", 500))
    inner_step_scale = cfg.get("inner_step_scale")

    cells = [
        (cfg["generator"], pen_dict, float(gamma), seed + rep, inner_iters,
         inner_step_scale)
        for gamma in sweep
        for rep in range(repeats)
    ]
    results = _map_cells(_tradeoff_cell, cells, _jobs(args))

    rows = []
    for i, gamma in enumerate(sweep):
        block = np.array(results[i * repeats:(i + 1) * repeats])
        for j, name in ((0, "non_additive"), (2, "additive")):
            rows.append([
                float(gamma), 2.0 ** float(gamma), name,
                float(block[:, j].mean()), float(block[:, j + 1].mean()),
                float(block[:, j].std()), float(block[:, j + 1].std()),
            ])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "tradeoff.csv"
    _write_csv(path, ["gamma", "r_lambda", "algorithm", "reward_mean",
                      "penalty_mean", "reward_std", "penalty_std"], rows)
    print(f"wrote {path} ({len(rows)} rows, {repeats} seeds per cell)")
    return 0


# ---------------------------------------------------------------- regret

def _regret_cell(cell) -> tuple:
    gen_dict, pen_dict, horizon, seed, max_iters, tol = cell
    spec = penalty_from_dict(pen_dict)
    dataset = generate(_generator_from_dict(gen_dict, seed, horizon=horizon))
    schedule = make_schedule(dataset, spec)
    trace = run_primal_dual(dataset, spec, schedule)
    sol = solve_offline(dataset, spec, max_iters=max_iters, tol=tol)
    rep = bound_components(trace, dataset, spec, schedule, sol)
    return rep.empirical_regret, rep.empirical_regret_lower, rep.bound_total


def _regret_regimes(cfg: dict) -> list[tuple[str, dict]]:
    base = cfg.get("penalty") or {}
    r_lambda = float(base.get("r_lambda", 1.0))
    smooth = float(base.get("l", 1.0))
    return [
        ("convex_l1", {"kind": "norm", "q": 1, "r_lambda": r_lambda}),
        ("strongly_convex_huber", {"kind": "huber", "r_lambda": r_lambda, "l": smooth}),
    ]


def cmd_regret(args) -> int:
    cfg = load_config(args.config)
    seed = _seed(cfg, args)
    if "generator" not in cfg:
        raise ConfigError("regret requires a generator config")
    horizons = [int(t) for t in cfg.get("horizons", DEFAULT_HORIZONS)]
    if not horizons:
        raise ConfigError("horizons must be nonempty")
    repeats = int(cfg.get("repeats", 20))
    max_iters = int(cfg.get("offline_max_iters", 20000))
    tol = float(cfg.get("offline_tol", 1e-3))
    regimes = _regret_regimes(cfg)

    cells = [
        (cfg["generator"], pen_dict, horizon, seed + rep, max_iters, tol)
        for horizon in horizons
        for _, pen_dict in regimes
        for rep in range(repeats)
    ]
    results = _map_cells(_regret_cell, cells, _jobs(args))

    rows = []
    i = 0
    for horizon in horizons:
        for name, _ in regimes:
            block = np.array(results[i:i + repeats])
            i += repeats
            rows.append([
                horizon, name,
                float(block[:, 0].mean()), float(block[:, 1].mean()),
                float(block[:, 2].mean()),
            ])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "regret.csv"
    _write_csv(path, ["T", "regime", "regret_upper_mean", "regret_lower_mean",
                      "bound_total_mean"], rows)
    print(f"wrote {path} ({len(rows)} rows, {repeats} seeds per cell)")
    return 0


# ---------------------------------------------------------------- offline

def cmd_offline(args) -> int:
    cfg = load_config(args.config)
    seed = _seed(cfg, args)
    spec = _penalty(cfg)
    dataset = _resolve_dataset(cfg, seed)
    tol = float(cfg.get("offline_tol", 1e-3))
    sol = solve_offline(
        dataset, spec, max_iters=int(cfg.get("offline_max_iters", 20000)), tol=tol
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "offline.json", {
        "penalty": penalty_to_dict(spec),
        "p_value": sol.p_value,
        "d_value": sol.d_value,
        "gap": sol.gap,
        "relative_gap": sol.gap / (1.0 + abs(sol.d_value)),
        "tolerance_met": sol.gap <= tol * (1.0 + abs(sol.d_value)),
        "iterations": sol.iterations,
        "lambda_star": sol.lambda_star.tolist(),
    })
    print(
        f"p_value={sol.p_value:.6f} d_value={sol.d_value:.6f} "
        f"gap={sol.gap:.2e} iterations={sol.iterations}"
    )
    return 0


# ---------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    results = run_all(args.seed if args.seed is not None else 0)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} - {r.detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed")
    return 1 if failed else 0


# ---------------------------------------------------------------- entry

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saddleflow",
        description="online primal-dual allocation with non-additive penalties",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, needs_config in (
        ("run", cmd_run, True),
        ("tradeoff", cmd_tradeoff, True),
        ("regret", cmd_regret, True),
        ("offline", cmd_offline, True),
        ("validate", cmd_validate, False),
    ):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker pool size (env SADDLEFLOW_JOBS)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DatasetFormatError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
