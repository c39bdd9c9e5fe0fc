"""Plot-ready CSV and JSON summaries. Each CSV opens with a schema comment line."""

from __future__ import annotations

import csv
import json
from pathlib import Path

SCHEMA_VERSION = 1


def write_csv(path, schema: str, columns: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# razorbus:{schema} v{SCHEMA_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path) -> tuple[str, list[dict]]:
    """Return (schema line, rows as dicts of strings)."""
    with Path(path).open() as fh:
        schema = fh.readline().strip()
        return schema, list(csv.DictReader(fh))


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


def timeline_rows(report):
    for w in report.windows:
        yield (w.cycle, w.v_mv / 1000, w.errors, w.length, w.rate)


TIMELINE_COLUMNS = ["cycle", "vdd", "errors", "window_cycles", "error_rate"]


def decision_rows(report):
    for d in report.decisions:
        yield (d.cycle, d.err_rate, d.command.name.lower(), d.target_mv / 1000,
               "" if d.apply_at is None else d.apply_at)


DECISION_COLUMNS = ["cycle", "error_rate", "command", "commanded_vdd", "apply_at"]

STATIC_COLUMNS = ["trace", "corner", "vdd", "words", "cycles", "errors", "fatal", "error_rate",
                  "energy_dynamic", "energy_leakage", "energy_recovery", "energy_total"]


def static_rows(trace_name, curve):
    for p in curve:
        yield (trace_name, p.corner, p.vdd, p.words, p.cycles, p.errors, p.fatal, p.error_rate,
               p.energy_dynamic, p.energy_leakage, p.energy_recovery, p.energy_total)


GAIN_COLUMNS = ["trace", "corner", "delay_nominal_ps", "target", "vdd", "error_rate", "energy",
                "baseline", "gain"]


def gain_rows(trace_name, points):
    for p in points:
        yield (trace_name, p.corner, p.delay_nominal * 1e12, p.target, p.vdd, p.error_rate,
               p.energy, p.baseline, p.gain)


SUITE_COLUMNS = ["trace", "corner", "fixed_vs_vdd", "fixed_vs_gain", "dvs_gain", "avg_error_rate",
                 "mean_vdd"]

ORACLE_COLUMNS = ["trace", "corner", "target", "vdd", "fraction"]

GEOMETRY_COLUMNS = ["study", "trace", "corner", "target", "vdd_original", "vdd_transformed",
                    "gain_original", "gain_transformed"]
