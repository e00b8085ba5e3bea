"""Experiment runner: configure a problem, run it, write the evidence.

Each run produces a directory with ``history.csv`` (one row per iteration
plus one per optimization), ``summary.txt`` with the headline numbers, a
rendered ``history.png``, and optionally a binary ``state.chk`` of the final
state.  Mode ``both`` runs the optimized and plain iterations side by side
in sibling subdirectories and adds a comparison figure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .checkpoint import write_checkpoint
from .core import ConfigurationError, DivergedTooFast, OdroConfig, OdroError
from .driver import RunResult, run_baseline, run_odro
from .problems import make_problem, problem_names

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_DIVERGED = 3
EXIT_CONFIG = 4

EMIT_CHOICES = ("history_csv", "summary", "checkpoint", "figures")
DEFAULT_EMIT = ("history_csv", "summary", "figures")


@dataclass
class ExperimentConfig:
    problem: str
    params: dict = field(default_factory=dict)
    odro: OdroConfig = field(default_factory=OdroConfig)
    mode: str = "odro"
    output_dir: Path = Path("odro-out")
    emit: tuple[str, ...] = DEFAULT_EMIT
    baseline_iterations: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("odro", "baseline", "both"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        bad = set(self.emit) - set(EMIT_CHOICES)
        if bad:
            raise ConfigurationError(f"unknown emit targets {sorted(bad)}")


def _write_history(history, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "cycle", "phase", "r_total"])
        for rec in history:
            writer.writerow([rec.iteration, rec.cycle, rec.phase.value,
                             repr(rec.r_total)])


def _write_summary(result: RunResult, wall_seconds: float, path: Path) -> None:
    share = (result.total_objective_evals / result.total_iterations
             if result.total_iterations else 0.0)
    lines = [
        f"converged = {'true' if result.converged else 'false'}",
        f"cycles_used = {result.cycles_used}",
        f"total_iterations = {result.total_iterations}",
        f"total_objective_evals = {result.total_objective_evals}",
        f"final_r_total = {result.final_r_total!r}",
        f"eval_share = {share!r}",
        f"wall_seconds = {wall_seconds!r}",
    ]
    path.write_text("\n".join(lines) + "\n")


def _emit_run(cfg: ExperimentConfig, result: RunResult, wall: float,
              out_dir: Path, label: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if "history_csv" in cfg.emit:
        _write_history(result.history, out_dir / "history.csv")
    if "summary" in cfg.emit:
        _write_summary(result, wall, out_dir / "summary.txt")
    if "checkpoint" in cfg.emit:
        write_checkpoint(result.final_state, out_dir / "state.chk")
    if "figures" in cfg.emit:
        from .report import render_history
        render_history(result.history, out_dir / "history.png",
                       title=f"{cfg.problem} ({label})")


def _status(result: RunResult) -> int:
    if result.converged:
        return EXIT_OK
    if not math.isfinite(result.final_r_total):
        return EXIT_DIVERGED
    return EXIT_NOT_CONVERGED


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run one experiment; returns the process exit status."""
    try:
        problem = make_problem(cfg.problem, **cfg.params)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.output_dir)
    runs: dict[str, RunResult] = {}
    try:
        if cfg.mode in ("odro", "both"):
            t0 = time.perf_counter()
            result = run_odro(problem, cfg.odro)
            wall = time.perf_counter() - t0
            _emit_run(cfg, result, wall, out / "odro" if cfg.mode == "both" else out, "odro")
            runs["odro"] = result
        if cfg.mode in ("baseline", "both"):
            t0 = time.perf_counter()
            result = run_baseline(problem, cfg.odro, cfg.baseline_iterations)
            wall = time.perf_counter() - t0
            _emit_run(cfg, result, wall,
                      out / "baseline" if cfg.mode == "both" else out, "baseline")
            runs["baseline"] = result
    except DivergedTooFast as exc:
        print(f"error: diverged too fast: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OdroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: i/o failure: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.mode == "both" and "figures" in cfg.emit:
        from .report import render_comparison
        render_comparison({k: v.history for k, v in runs.items()},
                          out / "comparison.png", title=cfg.problem)

    primary = runs["odro"] if cfg.mode in ("odro", "both") else runs["baseline"]
    return _status(primary)


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _parse_params(pairs: list[str]) -> dict:
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(f"--param expects k=v, got {pair!r}")
        key, _, value = pair.partition("=")
        params[key.strip()] = _parse_value(value.strip())
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odro",
        description="Drive an unstable iterative problem to its steady state "
                    "by alternating iteration with subspace residual minimization.",
    )
    parser.add_argument("--problem", required=True, choices=problem_names())
    parser.add_argument("--param", action="append", default=[], metavar="K=V",
                        help="problem parameter, repeatable")
    parser.add_argument("--snapshots", type=int, default=5, metavar="N")
    parser.add_argument("--interval", type=int, default=80, metavar="K")
    parser.add_argument("--modes", type=int, default=5, metavar="O")
    parser.add_argument("--budget-divisor", type=int, default=10)
    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--max-cycles", type=int, default=100)
    parser.add_argument("--divergence-factor", type=float, default=1e6)
    parser.add_argument("--rank-tol", type=float, default=1e-12)
    parser.add_argument("--mode", choices=("odro", "baseline", "both"), default="odro")
    parser.add_argument("--out", type=Path, default=Path("odro-out"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--baseline-iterations", type=int, default=None,
                        help="iteration cap for baseline runs")
    parser.add_argument("--emit", action="append", choices=EMIT_CHOICES, default=None,
                        help="artifacts to write (repeatable); default: "
                             + ", ".join(DEFAULT_EMIT))
    parser.add_argument("--no-plot", action="store_true",
                        help="skip figure rendering")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        odro_config = OdroConfig(
            n_snapshots=args.snapshots,
            interval=args.interval,
            n_modes=args.modes,
            budget_divisor=args.budget_divisor,
            convergence_tol=args.tol,
            max_cycles=args.max_cycles,
            divergence_factor=args.divergence_factor,
            rank_tol=args.rank_tol,
            rng_seed=args.seed,
        )
        emit = tuple(args.emit) if args.emit else DEFAULT_EMIT
        if args.no_plot:
            emit = tuple(e for e in emit if e != "figures")
        cfg = ExperimentConfig(
            problem=args.problem,
            params=_parse_params(args.param),
            odro=odro_config,
            mode=args.mode,
            output_dir=args.out,
            emit=emit,
            baseline_iterations=args.baseline_iterations,
        )
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
