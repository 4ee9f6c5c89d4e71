"""Command-line front end: ``run``, ``sweep`` and ``bench`` subcommands.

Every subcommand reads one YAML config and writes CSV files into the output
directory. Exit status is 0 on success, 2 for a bad config and 3 when the
experiment itself fails.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .bench import estimator_benchmark
from .config import ConfigError, ExperimentConfig, RunModel, load_config
from .sim import RunReport, run_simulation

log = logging.getLogger("wsnsync")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

RUN_COLUMNS = (
    "scheme", "estimator", "si", "n_bm", "seed", "skew_mse", "meas_time_mse",
    "n_tx", "n_rx", "n_skew_samples", "n_meas_samples", "untranslated", "config_hash",
)
TRACE_COLUMNS = ("kind", "time", "error", "seed", "config_hash")
SUMMARY_COLUMNS = (
    "scheme", "estimator", "si", "n_bm", "n_seeds", "skew_mse_mean",
    "meas_time_mse_mean", "n_tx", "n_rx", "config_hash",
)
BENCH_COLUMNS = ("estimator", "k", "t_span", "mse", "bound", "runs", "seed", "config_hash")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else f"{float(value):.10e}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
            n += 1
    return n


def _estimator_label(run: RunModel) -> str:
    if run.scheme == "proposed":
        return run.estimator
    return "gmlle" if run.scheme == "two_way_gmlle" else "none"


def _run_row(run: RunModel, rep: RunReport, digest: str) -> tuple:
    return (
        run.scheme, _estimator_label(run), run.si, run.n_bm, run.seed,
        rep.skew_mse, rep.meas_time_mse, rep.n_tx, rep.n_rx,
        rep.n_skew_samples, rep.n_meas_samples, rep.untranslated, digest,
    )


def _simulate(run: RunModel) -> RunReport:
    return run_simulation(run.to_run_config())


def cmd_run(cfg: ExperimentConfig, out: Path, trace: bool = False) -> None:
    digest = cfg.digest()
    run = cfg.run
    if trace:
        run = run.model_copy(update={"trace": True})
    log.info("run %s si=%g seed=%d", run.scheme, run.si, run.seed)
    rep = _simulate(run)
    write_csv(out / "run_report.csv", RUN_COLUMNS, [_run_row(run, rep, digest)])
    if run.trace:
        rows = [("skew", t, e, run.seed, digest) for t, e in rep.skew_trace]
        rows += [("meas", t, e, run.seed, digest) for t, e in rep.meas_trace]
        write_csv(out / "trace.csv", TRACE_COLUMNS, rows)
    log.info("skew_mse=%.3e meas_time_mse=%.3e n_tx=%d n_rx=%d",
             rep.skew_mse, rep.meas_time_mse, rep.n_tx, rep.n_rx)


def sweep_cells(cfg: ExperimentConfig) -> List[RunModel]:
    """Expand the sweep axes into concrete runs in output order.

    Bundling and estimator choice only exist for the proposed scheme, so the
    two-way schemes get a single cell per SI.
    """
    base = cfg.run
    sw = cfg.sweep
    schemes = sw.schemes or [base.scheme]
    sis = sw.si or [base.si]
    n_bms = sw.n_bm or [base.n_bm]
    ests = sw.estimators or [base.estimator]
    cells = []
    for scheme in schemes:
        for si in sis:
            if scheme == "proposed":
                combos = [(e, b) for e in ests for b in n_bms]
            else:
                combos = [(base.estimator, 1)]
            for est, n_bm in combos:
                for i in range(sw.n_seeds):
                    cells.append(base.model_copy(update={
                        "scheme": scheme, "si": si, "n_bm": n_bm,
                        "estimator": est, "seed": base.seed + i, "trace": False,
                    }))
    return cells


def cmd_sweep(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> None:
    if cfg.sweep is None:
        raise ConfigError("sweep: section is required for the sweep command")
    digest = cfg.digest()
    cells = sweep_cells(cfg)
    log.info("sweep: %d runs", len(cells))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            reports = list(pool.map(_simulate, cells))
    else:
        reports = []
        for i, c in enumerate(cells):
            reports.append(_simulate(c))
            log.info("[%d/%d] %s si=%g n_bm=%d seed=%d", i + 1, len(cells), c.scheme, c.si, c.n_bm, c.seed)
    rows = [_run_row(c, r, digest) for c, r in zip(cells, reports)]
    write_csv(out / "sweep_runs.csv", RUN_COLUMNS, rows)

    groups = {}
    for c, r in zip(cells, reports):
        key = (c.scheme, _estimator_label(c), c.si, c.n_bm)
        groups.setdefault(key, []).append(r)
    summary = []
    for key, reps in groups.items():
        summary.append(key + (
            len(reps),
            float(np.mean([r.skew_mse for r in reps])),
            float(np.mean([r.meas_time_mse for r in reps])),
            reps[0].n_tx,
            reps[0].n_rx,
            digest,
        ))
    write_csv(out / "sweep_summary.csv", SUMMARY_COLUMNS, summary)


def cmd_bench(cfg: ExperimentConfig, out: Path) -> None:
    b = cfg.bench
    if b is None:
        raise ConfigError("bench: section is required for the bench command")
    digest = cfg.digest()
    log.info("bench %s, %d runs x %d messages", ",".join(b.estimators), b.runs, b.n_messages)
    curves = estimator_benchmark(
        b.estimators, b.delay.to_spec(), b.schedule, b.runs, b.seed, b.sensor.to_params()
    )
    rows = []
    for kind in b.estimators:
        c = curves[kind]
        for i in range(len(c)):
            if math.isnan(c.mse[i]):
                continue  # baseline message, no estimate yet
            rows.append((kind, int(c.k[i]), c.t_span[i], c.mse[i], c.bound[i], b.runs, b.seed, digest))
    write_csv(out / "mse_vs_k.csv", BENCH_COLUMNS, rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, help="YAML experiment config")
    common.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--quiet", action="store_true", help="only print errors")

    p = argparse.ArgumentParser(
        prog="wsnsync",
        description="Time-synchronization experiments for a cluster head and its sensors.",
        epilog="Delays are drawn from the configured distribution as-is; negative "
        "Gaussian samples are not clamped.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="one simulation -> run_report.csv")
    r.add_argument("--trace", action="store_true", help="also write per-sample errors to trace.csv")
    s = sub.add_parser("sweep", parents=[common], help="sweep axes x seeds -> sweep_runs.csv, sweep_summary.csv")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub.add_parser("bench", parents=[common], help="estimator Monte-Carlo -> mse_vs_k.csv")
    return p


def _apply_seed(cfg: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    if seed is None:
        return cfg
    update = {"run": cfg.run.model_copy(update={"seed": seed})}
    if cfg.bench is not None:
        update["bench"] = cfg.bench.model_copy(update={"seed": seed})
    return cfg.model_copy(update=update)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _apply_seed(load_config(args.config), args.seed)
        if args.command == "sweep" and cfg.sweep is None:
            raise ConfigError("sweep: section is required for the sweep command")
        if args.command == "bench" and cfg.bench is None:
            raise ConfigError("bench: section is required for the bench command")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.output
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "run":
            cmd_run(cfg, out, trace=args.trace)
        elif args.command == "sweep":
            cmd_sweep(cfg, out, jobs=args.jobs)
        else:
            cmd_bench(cfg, out)
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
