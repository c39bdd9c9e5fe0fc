"""``razorbus`` command line: calibrate, build tables, sweep, run, oracle, geometry, check."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import reports
from .characterization import build_tables, load_table, save_table, table_hash
from .config import ExperimentConfig, config_to_dict, corner_list, load_config
from .device import WORST_CORNER, parse_corner
from .engine import (oracle_voltage_profile, run_dynamic, run_suite, static_curve, sweep_static,
                     lowest_voltage_for_target)
from .errors import CalibrationError, ConfigError, FatalTimingError, RazorBusError
from .interconnect import (BusGeometry, calibrate_repeaters, check_hold, extract_rc, path_delay,
                           transform_geometry)
from .traces import parse_trace_spec, pseudo_benchmark_suite

EXIT_OK, EXIT_USAGE, EXIT_FATAL, EXIT_CALIBRATION = 0, 1, 2, 3

SUITE_CORNERS = "slow,100,ir;typical,100,no-ir"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# shared plumbing

def calibrated_geometry(cfg: ExperimentConfig) -> BusGeometry:
    """The config geometry with a repeater size, calibrating when none is given."""
    g = cfg.geometry
    if g.repeater_size is not None:
        return g
    size = calibrate_repeaters(g, cfg.deadlines.main_deadline, cfg.device)
    return g.with_repeater_size(size)


def expected_table_hash(cfg: ExperimentConfig) -> str:
    g = calibrated_geometry(cfg)
    return table_hash(g, cfg.device, extract_rc(g), cfg.flop_load)


def open_table(cfg: ExperimentConfig, path=None):
    path = Path(path) if path else cfg.table_file()
    return load_table(path, expected_table_hash(cfg))


def load_traces(cfg: ExperimentConfig, specs=None):
    """Resolve trace specs; ``bench:suite`` expands to all ten pseudo-benchmarks."""
    specs = list(specs) if specs else list(cfg.traces)
    n_wires = cfg.geometry.n_wires
    out = []
    for i, spec in enumerate(specs):
        if spec == "bench:suite":
            out.extend(pseudo_benchmark_suite(cfg.trace_length, cfg.seed + i, n_wires))
        else:
            out.append(parse_trace_spec(spec, cfg.trace_length, cfg.seed + i, n_wires))
    return out


def _out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _say(msg: str = ""):
    print(msg, flush=True)


# ---------------------------------------------------------------------------
# subcommands

def cmd_calibrate(cfg, args) -> int:
    g = calibrated_geometry(cfg)
    rc = extract_rc(g)
    worst = path_delay(rc, 4, g.v_nominal, WORST_CORNER, g, device=cfg.device)
    _say(f"repeater size: {g.repeater_size:.6g}")
    _say(f"worst-corner ({WORST_CORNER.label}) k=4 delay at {g.v_nominal:.2f} V: {worst * 1e12:.3f} ps")
    _say(f"coupling ratio c_c/c_g: {rc.coupling_ratio:.4f}")
    reports.write_json(_out_dir(cfg) / "calibration.json", {
        "repeater_size": g.repeater_size,
        "worst_corner": WORST_CORNER.label,
        "worst_delay": worst,
        "rc": dataclasses.asdict(rc),
        "table_hash": expected_table_hash(cfg),
    })
    return EXIT_OK


def cmd_tables(cfg, args) -> int:
    g = calibrated_geometry(cfg)
    table = build_tables(g, extract_rc(g), cfg.device, cfg.corners, cfg.flop_load)
    path = save_table(table, args.table or cfg.table_file())
    _say(f"wrote {path} ({len(table.corners)} corners, {len(table.vdd_mv)} voltages, "
         f"{table.top_mv}..{table.floor_mv} mV, hash {table.table_hash})")
    return EXIT_OK


def cmd_sweep(cfg, args) -> int:
    table = open_table(cfg, args.table)
    corners = corner_list(args.corner, cfg)
    targets = tuple(args.target) if args.target else cfg.error_targets
    out = _out_dir(cfg)
    static_rows, gain_rows = [], []
    for trace in load_traces(cfg, args.trace):
        for corner in corners:
            curve = static_curve(trace, corner, table, cfg.deadlines, cfg.energy)
            static_rows.extend(reports.static_rows(trace.name, curve))
        points = sweep_static(trace, corners, table, targets, cfg.deadlines, cfg.energy)
        gain_rows.extend(reports.gain_rows(trace.name, points))
        for p in points:
            _say(f"{trace.name:16s} {p.corner:22s} target {p.target:4.0%}  vdd {p.vdd:.2f} V  "
                 f"gain {p.gain:6.1%}")
    reports.write_csv(out / "static_curve.csv", "static-curve", reports.STATIC_COLUMNS, static_rows)
    reports.write_csv(out / "static_gain.csv", "static-gain", reports.GAIN_COLUMNS, gain_rows)
    return EXIT_OK


def _controller(cfg, args):
    if args.floor_offset_mv is None:
        return cfg.controller
    return dataclasses.replace(cfg.controller, floor_offset_mv=args.floor_offset_mv)


def cmd_run(cfg, args) -> int:
    table = open_table(cfg, args.table)
    params = _controller(cfg, args)
    out = _out_dir(cfg)
    if args.suite:
        return _run_suite(cfg, args, table, params, out)
    corner = parse_corner(args.corner or "typical,100,no-ir")
    specs = args.trace or cfg.traces[:1]
    if len(specs) != 1:
        raise ConfigError(["run: give exactly one --trace, or use --suite"])
    trace = load_traces(cfg, specs)[0]
    report = run_dynamic(trace, corner, table, params, cfg.deadlines, cfg.energy)
    reports.write_csv(out / "timeline.csv", "timeline", reports.TIMELINE_COLUMNS,
                      reports.timeline_rows(report))
    reports.write_csv(out / "decisions.csv", "decisions", reports.DECISION_COLUMNS,
                      reports.decision_rows(report))
    summary = report.summary()
    reports.write_json(out / "summary.json", {"run": summary, "config": config_to_dict(cfg)})
    _say(f"trace {report.trace} at {report.corner}: {report.cycles} cycles, "
         f"{report.errors} errors ({report.avg_error_rate:.2%})")
    _say(f"mean vdd {report.mean_vdd:.3f} V (floor {report.v_floor:.2f} V), "
         f"energy gain vs {table.top_mv / 1000:.2f} V: {report.energy_gain:.1%}")
    return EXIT_OK


def _run_suite(cfg, args, table, params, out) -> int:
    corners = corner_list(args.corner or SUITE_CORNERS, cfg)
    traces = load_traces(cfg, args.trace)
    rows_out, doc = [], {}
    for corner in corners:
        rows, total = run_suite(traces, corner, table, params, cfg.deadlines, cfg.energy)
        for r in rows:
            rows_out.append((r.trace, corner.label, r.fixed_vs_vdd, r.fixed_vs_gain, r.dvs_gain,
                             r.avg_error_rate, r.report.mean_vdd))
            _say(f"{r.trace:16s} {corner.label:22s} fixed {r.fixed_vs_gain:6.1%}  "
                 f"dvs {r.dvs_gain:6.1%}  err {r.avg_error_rate:.2%}")
        rows_out.append(("total", corner.label, rows[0].fixed_vs_vdd, total["fixed_vs_gain"],
                         total["dvs_gain"], total["avg_error_rate"], ""))
        _say(f"{'total':16s} {corner.label:22s} fixed {total['fixed_vs_gain']:6.1%}  "
             f"dvs {total['dvs_gain']:6.1%}  err {total['avg_error_rate']:.2%}")
        doc[corner.label] = {"total": total, "rows": [r.report.summary() for r in rows]}
    reports.write_csv(out / "suite.csv", "suite", reports.SUITE_COLUMNS, rows_out)
    reports.write_json(out / "summary.json", {"suite": doc, "config": config_to_dict(cfg)})
    return EXIT_OK


def cmd_oracle(cfg, args) -> int:
    table = open_table(cfg, args.table)
    corners = corner_list(args.corner or "typical,100,no-ir", cfg)
    targets = tuple(args.target) if args.target else cfg.oracle_targets
    rows = []
    for trace in load_traces(cfg, args.trace):
        for corner in corners:
            for target in targets:
                prof = oracle_voltage_profile(trace, corner, table, target,
                                              cfg.controller.window_len, cfg.deadlines)
                for mv, frac in prof.histogram().items():
                    rows.append((trace.name, corner.label, target, mv / 1000, frac))
                mean = float(np.mean(prof.window_mv)) / 1000
                _say(f"{trace.name:16s} {corner.label:22s} target {target:4.0%}  "
                     f"mean optimal vdd {mean:.3f} V")
    reports.write_csv(_out_dir(cfg) / "oracle_histogram.csv", "oracle-histogram",
                      reports.ORACLE_COLUMNS, rows)
    return EXIT_OK


def cmd_geometry(cfg, args) -> int:
    mult = args.ratio_mult if args.ratio_mult is not None else cfg.ratio_multiplier
    base = open_table(cfg, args.table)
    rc_new = transform_geometry(base.rc, mult)
    alt = build_tables(base.geometry, rc_new, base.device, base.corners, base.flop_load)
    out = _out_dir(cfg)
    save_table(alt, out / "table_transformed.json")
    k4_same = bool(np.array_equal(base.delay[:, :, 4], alt.delay[:, :, 4]))
    _say(f"c_c/c_g {base.rc.coupling_ratio:.4f} -> {rc_new.coupling_ratio:.4f}; "
         f"k=4 delays identical: {k4_same}")

    traces = load_traces(cfg, args.trace)
    static_corners = corner_list(args.corner, cfg)
    rows = []
    for trace in traces:
        for corner in static_corners:
            picks = []
            for tab in (base, alt):
                curve = static_curve(trace, corner, tab, cfg.deadlines, cfg.energy)
                best = lowest_voltage_for_target(curve, args.static_target)
                picks.append((best.vdd, 1 - best.energy_total / curve[0].energy_total))
            rows.append(("static", trace.name, corner.label, args.static_target,
                         picks[0][0], picks[1][0], picks[0][1], picks[1][1]))
    params = _controller(cfg, args)
    for corner in corner_list(args.run_corner, cfg):
        for tab_rows in zip(*(run_suite(traces, corner, tab, params, cfg.deadlines, cfg.energy)[0]
                              for tab in (base, alt))):
            a, b = tab_rows
            rows.append(("dynamic", a.trace, corner.label, "", a.report.mean_vdd, b.report.mean_vdd,
                         a.dvs_gain, b.dvs_gain))
            _say(f"{a.trace:16s} {corner.label:22s} dvs gain {a.dvs_gain:6.2%} -> {b.dvs_gain:6.2%}")
    reports.write_csv(out / "geometry_comparison.csv", "geometry-comparison",
                      reports.GEOMETRY_COLUMNS, rows)
    reports.write_json(out / "geometry_summary.json", {
        "ratio_multiplier": mult,
        "rc_original": dataclasses.asdict(base.rc),
        "rc_transformed": dataclasses.asdict(rc_new),
        "k4_delays_identical": k4_same,
    })
    return EXIT_OK


def cmd_check(cfg, args) -> int:
    g = calibrated_geometry(cfg)
    d = cfg.deadlines
    report = check_hold(extract_rc(g), g, d.shadow_skew, d.hold_margin, cfg.device, cfg.corners)
    for line in report.lines()[: 1 + args.max_lines]:
        _say(line)
    if len(report.violations) > args.max_lines:
        _say(f"  ... {len(report.violations) - args.max_lines} more violations")
    rows = [(c, v, k, delay * 1e12) for c, v, k, delay in report.violations]
    reports.write_csv(_out_dir(cfg) / "hold_violations.csv", "hold-violations",
                      ["corner", "vdd", "k", "delay_ps"], rows)
    return EXIT_OK if report.passed else EXIT_USAGE


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="default",
                        help="JSON config file, or 'default' (the default)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output directory (overrides config output_dir)")
    common.add_argument("--table", help="table file (default: <out>/table.json)")

    def traces(p):
        p.add_argument("--trace", action="append",
                       help="trace spec: gen:<kind>:k=v,..  bench:<name>  bench:suite  file:<path>; repeatable")
        p.add_argument("--length", type=int, help="override trace_length for generated traces")

    parser = _Parser(prog="razorbus", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("calibrate", parents=[common], help="size repeaters to the delay budget")
    sub.add_parser("tables", parents=[common], help="build and save the delay/energy table")

    p = sub.add_parser("sweep", parents=[common], help="static voltage sweeps and gains")
    traces(p)
    p.add_argument("--corner", help="'all' or ';'-separated process,temp,ir triples")
    p.add_argument("--target", type=float, action="append", help="error-rate target; repeatable")

    p = sub.add_parser("run", parents=[common], help="closed-loop DVS run")
    traces(p)
    p.add_argument("--corner", help="process,temp,ir (suite mode: ';'-separated list)")
    p.add_argument("--suite", action="store_true",
                   help="multi-trace mode with fixed voltage scaling for comparison")
    p.add_argument("--floor-offset-mv", type=int,
                   help="lower the regulator floor below the safe minimum (diagnostic)")

    p = sub.add_parser("oracle", parents=[common], help="offline optimal voltage histograms")
    traces(p)
    p.add_argument("--corner")
    p.add_argument("--target", type=float, action="append")

    p = sub.add_parser("geometry", parents=[common], help="coupling-ratio transform study")
    traces(p)
    p.add_argument("--ratio-mult", type=float)
    p.add_argument("--corner", help="corners for the static comparison (default: config corners)")
    p.add_argument("--run-corner", default=SUITE_CORNERS, help="corners for the dynamic comparison")
    p.add_argument("--static-target", type=float, default=0.02)
    p.add_argument("--floor-offset-mv", type=int, help=argparse.SUPPRESS)

    p = sub.add_parser("check", parents=[common], help="shadow-latch hold constraint report")
    p.add_argument("--max-lines", type=int, default=20, help="violations to print")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output_dir = args.out
    if getattr(args, "length", None) is not None:
        if args.length < 1:
            raise ConfigError(["--length: must be positive"])
        cfg.trace_length = args.length
    return cfg


COMMANDS = {
    "calibrate": cmd_calibrate,
    "tables": cmd_tables,
    "sweep": cmd_sweep,
    "run": cmd_run,
    "oracle": cmd_oracle,
    "geometry": cmd_geometry,
    "check": cmd_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return COMMANDS[args.command](cfg, args)
    except FatalTimingError as exc:
        print(f"razorbus: FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except CalibrationError as exc:
        print(f"razorbus: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except ConfigError as exc:
        print(f"razorbus: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RazorBusError, ValueError) as exc:
        print(f"razorbus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
