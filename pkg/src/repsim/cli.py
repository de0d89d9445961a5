"""Command-line entry point.

Subcommands:
  validate  check a scenario file, reporting every problem at once
  run       simulate one scenario for one or more seeds
  compare   run the same scenario under several engines

Exit codes: 0 success, 1 validation failure, 2 usage error. Multi-seed
batches run in parallel processes; ROMEO_SIM_THREADS caps the worker
count (default: available parallelism).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .engines import EngineConfig, EngineKind
from .model import ConfigurationError, InvariantViolation
from .report import emit_csv, emit_json, render_plot, summary_dict
from .scenario import MAX_SEED, Scenario, ScenarioValidationError, parse_scenario
from .simulation import run

SERIES_KINDS = ("results", "accuracy", "satisfaction")


def _seed_value(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("value must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repsim",
        description="Deterministic simulator of a reputation layer over federated identity providers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a scenario file")
    p_validate.add_argument("--scenario", required=True, help="path to the scenario file")
    p_validate.set_defaults(func=_cmd_validate)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=_seed_value, default=None,
                       help="run seed (default: the scenario's seed)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p_run.add_argument("--plot", action="store_true", help="also emit SVG charts")
    p_run.add_argument("--seeds", type=_positive_int, default=1, metavar="N",
                       help="run seeds seed..seed+N-1 and emit a mean-of-seeds summary")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="run one scenario under several engines")
    p_cmp.add_argument("--scenario", required=True)
    p_cmp.add_argument("--seed", type=_seed_value, default=None)
    p_cmp.add_argument("--engines", required=True,
                       help="comma list, e.g. weighted_mean,time_decay_weighted_mean:0.9")
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def _load_scenario(path: str) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioValidationError([f"scenario file: {exc}"]) from exc
    return parse_scenario(text)


def _worker_count(n_jobs: int) -> int:
    raw = os.environ.get("ROMEO_SIM_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise InvariantViolation(
                f"ROMEO_SIM_THREADS must be a positive integer, got {raw!r}"
            )
        if cap < 1:
            raise InvariantViolation(
                f"ROMEO_SIM_THREADS must be a positive integer, got {raw!r}"
            )
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _run_and_write(scenario: Scenario, seed: int, out_dir: str, fmt: str, plot: bool) -> dict:
    """Run one seed and write its outputs; returns the summary fields."""
    result = run(scenario, seed)
    out = Path(out_dir)
    series = {
        "results": result.results,
        "accuracy": result.accuracy,
        "satisfaction": result.satisfaction,
    }
    if fmt in ("csv", "both"):
        for kind in SERIES_KINDS:
            (out / f"seed{seed}_{kind}.csv").write_text(
                emit_csv(series[kind], kind), encoding="utf-8"
            )
    if fmt in ("json", "both"):
        (out / f"seed{seed}_result.json").write_text(emit_json(result), encoding="utf-8")
    if plot:
        for kind in SERIES_KINDS:
            (out / f"seed{seed}_{kind}.svg").write_text(
                render_plot(series[kind], kind), encoding="utf-8"
            )
    return summary_dict(result)


def _cmd_validate(args) -> int:
    _load_scenario(args.scenario)
    return 0


def _mean_of(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return math.fsum(present) / len(present) if present else None


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    base_seed = args.seed if args.seed is not None else scenario.seed
    seeds = [base_seed + i for i in range(args.seeds)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    workers = _worker_count(len(seeds))
    summaries: list[dict]
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(
                pool.map(
                    _run_and_write,
                    [scenario] * len(seeds),
                    seeds,
                    [str(out)] * len(seeds),
                    [args.format] * len(seeds),
                    [args.plot] * len(seeds),
                )
            )
    else:
        summaries = [
            _run_and_write(scenario, seed, str(out), args.format, args.plot)
            for seed in seeds
        ]

    if len(seeds) > 1:
        doc = {
            "scenario_hash": scenario.content_hash(),
            "seeds": seeds,
            "mean_summary": {
                "post_warmup_mae": _mean_of([s["post_warmup_mae"] for s in summaries]),
                "mean_satisfaction": _mean_of([s["mean_satisfaction"] for s in summaries]),
                "mean_interaction_rate": _mean_of(
                    [s["mean_interaction_rate"] for s in summaries]
                ),
            },
        }
        (out / "summary_mean.json").write_text(json.dumps(doc) + "\n", encoding="utf-8")
    return 0


def _parse_engine_spec(token: str, scenario: Scenario) -> EngineConfig:
    name, _, decay_text = token.partition(":")
    try:
        kind = EngineKind(name)
    except ValueError:
        allowed = ", ".join(e.value for e in EngineKind)
        raise InvariantViolation(f"unknown engine {name!r} (expected one of: {allowed})")
    decay = None
    if decay_text:
        try:
            decay = float(decay_text)
        except ValueError:
            raise InvariantViolation(f"bad decay value {decay_text!r} in {token!r}")
    if kind is EngineKind.TIME_DECAY_WEIGHTED_MEAN and decay is None:
        decay = scenario.engine.decay
        if decay is None:
            raise InvariantViolation(
                f"engine {name!r} needs a decay, e.g. {name}:0.9"
            )
    return EngineConfig(
        kind=kind,
        decay=decay,
        default_score=scenario.engine.default_score,
        learning_rate=scenario.engine.learning_rate,
    )


def _cmd_compare(args) -> int:
    scenario = _load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else scenario.seed
    tokens = [t.strip() for t in args.engines.split(",") if t.strip()]
    if not tokens:
        print("error: --engines needs at least one engine", file=sys.stderr)
        return 2
    try:
        engines = [(t, _parse_engine_spec(t, scenario)) for t in tokens]
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for token, engine in engines:
        variant = scenario.with_engine(engine)
        label = token.replace(":", "_")
        sub = out / label
        sub.mkdir(parents=True, exist_ok=True)
        summary = _run_and_write(variant, seed, str(sub), "both", False)
        rows.append((token, summary))

    header = "engine,post_warmup_mae,mean_satisfaction,mean_interaction_rate"
    lines = [header]
    for token, summary in rows:
        cells = [token] + [
            "" if summary[k] is None else f"{summary[k]:.6f}"
            for k in ("post_warmup_mae", "mean_satisfaction", "mean_interaction_rate")
        ]
        lines.append(",".join(cells))
    table = "\n".join(lines) + "\n"
    (out / "engines_summary.csv").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ScenarioValidationError as exc:
        for error in exc.errors:
            print(f"error: {error}", file=sys.stderr)
        return 1
    except (ConfigurationError, InvariantViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
