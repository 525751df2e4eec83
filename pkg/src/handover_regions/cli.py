"""Command line entry point.

Subcommands::

    run       simulate one scenario and write its artifacts
    sweep     run one scenario over several seeds and aggregate
    oracle    optimal capacity-constrained partition of a flow matrix
    report    compare finished runs side by side
    validate  parse a scenario and print its digest

Exit status is 0 on success, 1 on a runtime failure and 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import engine
from .errors import ConfigError, HandoverRegionError, ParseError
from .metrics import write_metrics_csv
from .partition import Partition, oracle_partition
from .protocol import write_message_log
from .scenario import INIT_POLICIES, MODES, ORACLE_MODES, Scenario, load_scenario

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"
FLOW_FILE = "flow.csv"
ASSIGNMENT_FILE = "assignment.json"
MESSAGES_FILE = "messages.csv"
SCENARIO_FILE = "scenario.json"
FLOW_HEADER = ("source", "target", "count")
RUNS_HEADER = ("seed", "status", "final_ratio", "steady_state_ratio", "convergence_window",
               "signaling_total", "assignment_changes", "forced_assignments", "max_load")
REPORT_HEADER = ("label", "mode", "init_policy", "seed", "n_events", "steady_state_ratio",
                 "final_ratio", "convergence_window", "signaling_total", "assignment_changes",
                 "forced_assignments", "oracle_ratio")


class _Fail(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="ascii",
                    newline="\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return str(int(x)) if x.is_integer() else f"{x:.6f}"
    return str(x)


def _load(scenario_path, seed: Optional[int] = None, mode: Optional[str] = None,
          init: Optional[str] = None, message_log: bool = False) -> Scenario:
    try:
        sc = load_scenario(scenario_path)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {scenario_path}: {exc.strerror}") from None
    changes = {}
    if seed is not None:
        if seed < 0:
            raise ConfigError("'seed' must be >= 0")
        changes["seed"] = seed
    if mode is not None:
        changes["mode"] = mode
    if init is not None:
        changes["init_policy"] = init
    if message_log:
        changes["message_log"] = True
    return sc.replace(**changes) if changes else sc


def write_flow_csv(flow: np.ndarray, path) -> None:
    """Non-zero entries of the flow matrix, row-major."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FLOW_HEADER)
        for s, t in zip(*np.nonzero(flow)):
            writer.writerow((int(s), int(t), _fmt(float(flow[s, t]))))


def read_flow_csv(path, n_cells: Optional[int] = None) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FLOW_HEADER:
            raise ParseError(1, f"expected header {','.join(FLOW_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                s, t, c = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise ParseError(lineno, f"malformed flow row {row!r}") from None
            if s < 0 or t < 0 or c < 0:
                raise ParseError(lineno, "cells and counts must be non-negative")
            rows.append((s, t, c))
    n = max((max(s, t) + 1 for s, t, _ in rows), default=0)
    if n_cells is not None:
        if n_cells < n:
            raise ParseError(1, f"flow mentions cell {n - 1} but only {n_cells} cells given")
        n = n_cells
    flow = np.zeros((n, n))
    for s, t, c in rows:
        flow[s, t] += c
    return flow


def execute_run(sc: Scenario, out: Path) -> dict:
    """Simulate ``sc`` and write every artifact into ``out``; returns the report."""
    result = engine.run(sc)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(result.metrics, out / METRICS_FILE)
    write_flow_csv(result.flow_matrix(), out / FLOW_FILE)
    assignment = result.final_assignment
    _dump_json({
        "regions": [list(assignment.regions(c)) for c in range(assignment.n_cells)],
        "primary": list(assignment.primaries()),
        "live": sorted(result.live),
    }, out / ASSIGNMENT_FILE)
    _dump_json(sc.to_dict(), out / SCENARIO_FILE)
    files = [METRICS_FILE, SUMMARY_FILE, FLOW_FILE, ASSIGNMENT_FILE, SCENARIO_FILE]
    if sc.message_log:
        write_message_log(result.log, out / MESSAGES_FILE)
        files.append(MESSAGES_FILE)
    report = dict(result.summary)
    report["outputs"] = sorted(files)
    _dump_json(report, out / SUMMARY_FILE)
    return report


def _one_line(report: dict) -> str:
    conv = report["convergence_window"]
    return (f"seed={report['seed']} mode={report['mode']} "
            f"final_ratio={report['final_ratio']:.4f} "
            f"convergence_window={'none' if conv is None else conv} "
            f"signaling_total={_fmt(float(report['signaling_total']))}")


# -- commands ----------------------------------------------------------------

def cmd_run(scenario_path, out_dir, seed_override: Optional[int] = None,
            mode: Optional[str] = None, init: Optional[str] = None,
            message_log: bool = False) -> int:
    sc = _load(scenario_path, seed_override, mode, init, message_log)
    report = execute_run(sc, Path(out_dir))
    print(_one_line(report))
    return EXIT_OK


def parse_seeds(text: str) -> list[int]:
    """``"1-20"``, ``"1,2,5"`` or a mix such as ``"0-3,10"``."""
    seeds: list[int] = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise ConfigError(f"bad seed list entry {part!r}") from None
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds must be >= 0")
    return list(dict.fromkeys(seeds))


def _sweep_worker(args) -> tuple[int, Optional[dict], str]:
    scenario_path, seed, out, mode, init = args
    try:
        sc = _load(scenario_path, seed, mode, init)
        return seed, execute_run(sc, Path(out)), ""
    except Exception as exc:  # reported per seed; the sweep carries on
        return seed, None, f"{type(exc).__name__}: {exc}"


def _stats(values: Sequence[float]) -> dict:
    values = [float(v) for v in values]
    if not values:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": statistics.fmean(values), "std": statistics.pstdev(values),
            "n": len(values)}


def aggregate(reports: Sequence[dict]) -> dict:
    conv = [r["convergence_window"] for r in reports if r["convergence_window"] is not None]
    return {
        "scenario_digest": reports[0]["scenario_digest"] if reports else None,
        "seeds": [r["seed"] for r in reports],
        "final_ratio": _stats([r["final_ratio"] for r in reports]),
        "steady_state_ratio": _stats([r["steady_state_ratio"] for r in reports]),
        "convergence_window": _stats(conv),
        "not_converged": len(reports) - len(conv),
        "signaling_total": _stats([r["signaling_total"] for r in reports]),
    }


def cmd_sweep(scenario_path, seeds: Sequence[int], out_dir, parallel: int = 1,
              mode: Optional[str] = None, init: Optional[str] = None) -> int:
    if not seeds:
        raise ConfigError("empty seed list")
    if parallel < 1:
        raise ConfigError("'--parallel' must be >= 1")
    _load(scenario_path, mode=mode, init=init)  # fail fast on config errors
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(str(scenario_path), s, str(out / f"seed_{s}"), mode, init) for s in seeds]
    if parallel == 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    reports = []
    failed = []
    with open(out / "runs.csv", "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUNS_HEADER)
        for seed, report, err in results:
            if report is None:
                failed.append((seed, err))
                writer.writerow((seed, "failed") + ("",) * (len(RUNS_HEADER) - 2))
                continue
            reports.append(report)
            writer.writerow((seed, "ok") + tuple(
                _fmt(float(report[k]) if isinstance(report[k], (int, float)) else report[k])
                for k in RUNS_HEADER[2:]))
    agg = aggregate(reports)
    agg["failed_seeds"] = [s for s, _ in failed]
    _dump_json(agg, out / "aggregate.json")
    for seed, err in failed:
        print(f"seed {seed} failed: {err}", file=sys.stderr)
    ss = agg["steady_state_ratio"]
    print(f"{len(reports)}/{len(seeds)} seeds ok; steady_state_ratio mean="
          f"{_fmt(ss['mean'])} std={_fmt(ss['std'])}")
    return EXIT_RUNTIME if failed else EXIT_OK


def format_blocks(p: Partition) -> str:
    return "{" + "|".join(",".join(map(str, cells)) for cells in p.blocks().values()) + "}"


def cmd_oracle(flow_csv=None, run_dir=None, n_regions: int = 2, capacity: float = 0.0,
               mode: str = "auto", out: Optional[str] = None,
               n_cells: Optional[int] = None) -> int:
    if (flow_csv is None) == (run_dir is None):
        raise ConfigError("give exactly one of --flow or --run")
    if run_dir is not None:
        run_dir = Path(run_dir)
        flow_path = run_dir / FLOW_FILE
        summary = run_dir / SUMMARY_FILE
        if not flow_path.is_file() or not summary.is_file():
            raise _Fail(EXIT_RUNTIME, f"{run_dir}: not a finished run directory")
        n_cells = json.loads(summary.read_text(encoding="ascii"))["n_cells"]
        default_out = run_dir / "partition.json"
    else:
        flow_path = Path(flow_csv)
        if not flow_path.is_file():
            raise _Fail(EXIT_RUNTIME, f"{flow_path}: no such flow file")
        default_out = flow_path.with_name("partition.json")
    flow = read_flow_csv(flow_path, n_cells)
    part, cut = oracle_partition(flow, n_regions, capacity, mode)
    total = float(flow.sum())
    print(f"partition {format_blocks(part)}")
    print(f"cut {_fmt(cut)}")
    _dump_json({
        "region_of": list(part.region_of),
        "blocks": [cells for cells in part.blocks().values()],
        "cut": cut,
        "ratio": cut / total if total else 0.0,
        "n_regions": n_regions,
        "capacity": capacity,
        "mode": mode,
    }, Path(out) if out else default_out)
    return EXIT_OK


def _report_row(run_dir: Path) -> dict:
    summary = run_dir / SUMMARY_FILE
    if not summary.is_file():
        raise _Fail(EXIT_RUNTIME, f"{run_dir}: missing {SUMMARY_FILE}")
    s = json.loads(summary.read_text(encoding="ascii"))
    row = {k: s.get(k) for k in REPORT_HEADER[1:]}
    row["label"] = run_dir.name or str(run_dir)
    return row


def render_table(rows: Sequence[dict]) -> str:
    cells = [list(REPORT_HEADER)] + [[_fmt(r[k]) for k in REPORT_HEADER] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(REPORT_HEADER))]
    lines = ["  ".join(c[i].ljust(widths[i]) for i in range(len(widths))).rstrip()
             for c in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cmd_report(run_dirs: Sequence, csv_path: Optional[str] = None) -> int:
    rows = [_report_row(Path(d)) for d in run_dirs]
    sys.stdout.write(render_table(rows))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in rows:
        writer.writerow([_fmt(r[k]) for k in REPORT_HEADER])
    if csv_path:
        Path(csv_path).write_text(buf.getvalue(), encoding="ascii", newline="\n")
    return EXIT_OK


def cmd_validate(scenario_path) -> int:
    sc = _load(scenario_path)
    print(f"ok digest={sc.digest()}")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="handover-regions",
                                     description="Handover-region self-organization simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--init", choices=INIT_POLICIES, help="override the initial assignment policy")
    p.add_argument("--log", action="store_true", help="also write the message log")

    p = sub.add_parser("sweep", help="run one scenario over several seeds")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seeds", required=True, help="e.g. 1-20 or 1,2,5")
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--init", choices=INIT_POLICIES)

    p = sub.add_parser("oracle", help="optimal partition of a flow matrix")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--flow", help="CSV with columns source,target,count")
    src.add_argument("--run", help="finished run directory")
    p.add_argument("--regions", type=int, required=True)
    p.add_argument("--capacity", type=float, required=True)
    p.add_argument("--mode", choices=ORACLE_MODES, default="auto")
    p.add_argument("--cells", type=int, help="number of cells when --flow omits trailing ones")
    p.add_argument("--out", help="partition JSON path")

    p = sub.add_parser("report", help="compare finished runs")
    p.add_argument("dirs", nargs="+")
    p.add_argument("--csv", help="also write the table as CSV")

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("--scenario", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.out, args.seed, args.mode, args.init, args.log)
        if args.command == "sweep":
            return cmd_sweep(args.scenario, parse_seeds(args.seeds), args.out, args.parallel,
                             args.mode, args.init)
        if args.command == "oracle":
            return cmd_oracle(args.flow, args.run, args.regions, args.capacity, args.mode,
                              args.out, args.cells)
        if args.command == "report":
            return cmd_report(args.dirs, args.csv)
        return cmd_validate(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command in ("run", "sweep", "validate") else EXIT_RUNTIME
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (HandoverRegionError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
