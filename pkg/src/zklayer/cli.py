"""Command line entry point ``zk``.

``zk run <config>``
    Validate the config, run its preset and write ``metrics.csv``,
    ``report.txt`` and ZKF1 snapshots under the output directory.  Sweep
    presets write one metrics file per sweep point in a subdirectory.
``zk report <run-dir>``
    Print the report of a finished run with a short metrics summary.

Exit status: 0 on success, 1 when the experiment failed (a
``failure.json`` record is written), 2 for invalid configurations or
arguments.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from pathlib import Path

from .config import load_config
from .errors import ConfigError, DataError, InstabilityError, UsageError, ZKError
from .io import (
    METRICS_COLUMNS,
    atomic_write,
    read_metrics,
    read_report,
    write_json,
    write_metrics,
    write_report,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

DEFAULT_ROOT = "runs"


def _parse_override(text):
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), val.strip()


def build_parser():
    p = argparse.ArgumentParser(prog="zk", description="Zakharov-Kuznetsov layer simulations")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config", help="YAML experiment document")
    r.add_argument("--output", help="output directory (overrides output_dir)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument(
        "--override", action="append", default=[], type=_parse_override, metavar="KEY=VALUE",
        help="set a dotted config key, e.g. solver.dt=5e-4 (repeatable)",
    )

    rep = sub.add_parser("report", help="summarize a finished run directory")
    rep.add_argument("run_dir")
    return p


def _output_dir(args, cfg, config_path):
    if args.output:
        return Path(args.output)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    root = os.environ.get("ZK_OUTPUT_ROOT", DEFAULT_ROOT)
    return Path(root) / Path(config_path).stem


def _write_extra_csv(path, rows):
    with atomic_write(path) as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _fail(outdir, record, stream):
    if outdir is not None:
        write_json(outdir / "failure.json", record)
    print(f"zk: experiment failed: {record.get('message') or record.get('reason')}", file=stream)
    return EXIT_FAILED


def cmd_run(args, out=None, err=None):
    from .experiments import run_experiment

    out = out or sys.stdout
    err = err or sys.stderr
    overrides = dict(args.override)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs < 1:
        print("zk: --jobs must be >= 1", file=err)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"zk: {args.config}: {exc}", file=err)
        return EXIT_USAGE
    outdir = _output_dir(args, cfg, args.config)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"zk: cannot create {outdir}: {exc.strerror}", file=err)
        return EXIT_USAGE
    stale = outdir / "failure.json"
    if stale.exists():
        stale.unlink()
    try:
        result = run_experiment(cfg, outdir, args.jobs)
    except InstabilityError as exc:
        return _fail(outdir, {"status": "instability", "message": str(exc), "step": exc.step}, err)
    except (UsageError, DataError) as exc:
        return _fail(outdir, {"status": "guard-violation", "message": str(exc)}, err)
    except ZKError as exc:
        return _fail(outdir, {"status": "error", "message": str(exc)}, err)

    for name, rows in result.tables.items():
        target = outdir / name if name else outdir
        write_metrics(target / "metrics.csv", rows)
    if not result.tables:
        write_metrics(outdir / "metrics.csv", [])
    for name, rows in result.extra_csv.items():
        _write_extra_csv(outdir / name, rows)
    write_report(outdir / "report.txt", result.report)
    with atomic_write(outdir / "config.json") as fh:
        json.dump(cfg.document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if result.failure is not None:
        return _fail(outdir, result.failure, err)
    print(f"zk: {cfg.preset} finished; results in {outdir}", file=out)
    return EXIT_OK


def _summarize_metrics(path, out):
    m = read_metrics(path)
    n = len(m["t"])
    if n == 0:
        return
    print(f"  {path.parent.name or '.'}: {n} records, t = {m['t'][0]:g} .. {m['t'][-1]:g}", file=out)
    for col in METRICS_COLUMNS[1:]:
        v = m[col]
        if v.size and not all(x != x for x in v):
            print(f"    {col:28s} first {v[0]: .6e}  last {v[-1]: .6e}", file=out)


def cmd_report(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        print(f"zk: {run_dir} is not a directory", file=err)
        return EXIT_USAGE
    failure = run_dir / "failure.json"
    report = run_dir / "report.txt"
    if report.exists():
        for key, val in read_report(report).items():
            print(f"{key} = {val}", file=out)
    elif not failure.exists():
        print(f"zk: no report.txt in {run_dir}", file=err)
        return EXIT_USAGE
    metrics = sorted(run_dir.glob("metrics.csv")) + sorted(run_dir.glob("*/metrics.csv"))
    if metrics:
        print("metrics:", file=out)
        for path in metrics:
            _summarize_metrics(path, out)
    partial = sorted(p.name for p in run_dir.rglob("*.partial"))
    if partial:
        print(f"unfinished files: {', '.join(partial)}", file=out)
    if failure.exists():
        print("failure: " + failure.read_text(encoding="utf-8").strip(), file=out)
        return EXIT_FAILED
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_report(args)
    except KeyboardInterrupt:
        print("zk: interrupted; partially written files end in .partial", file=sys.stderr)
        return 130
    except OSError as exc:
        print(f"zk: I/O error: {exc}", file=sys.stderr)
        if os.environ.get("ZK_DEBUG"):
            traceback.print_exc()
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
