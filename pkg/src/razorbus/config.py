"""Experiment configuration: one JSON document, documented defaults, strict keys."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .controller import ControllerParams
from .device import DeviceParams, PvtCorner, all_corners, parse_corner
from .engine import EnergyParams
from .errors import ConfigError
from .interconnect import BusGeometry
from .razor import Deadlines
from .traces import PSEUDO_BENCHMARKS

SECTIONS = {
    "geometry": BusGeometry,
    "device": DeviceParams,
    "controller": ControllerParams,
    "energy": EnergyParams,
}
DEADLINE_KEYS = ("main_deadline", "shadow_skew", "hold_margin")
TOP_LEVEL = {
    "geometry", "device", "deadlines", "controller", "energy", "flop_load", "corners",
    "traces", "trace_length", "seed", "error_targets", "oracle_targets", "ratio_multiplier",
    "output_dir", "table_path",
}


@dataclass
class ExperimentConfig:
    geometry: BusGeometry = field(default_factory=BusGeometry)
    device: DeviceParams = field(default_factory=DeviceParams)
    deadline_overrides: dict = field(default_factory=dict)
    controller: ControllerParams = field(default_factory=ControllerParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    flop_load: float = 10e-15
    corners: list = field(default_factory=all_corners)
    traces: list = field(default_factory=lambda: [f"bench:{name}" for name in PSEUDO_BENCHMARKS])
    trace_length: int = 1_000_000
    seed: int = 0
    error_targets: tuple = (0.0, 0.02, 0.05)
    oracle_targets: tuple = (0.0, 0.02, 0.05)
    ratio_multiplier: float = 1.95
    output_dir: str = "out"
    table_path: str | None = None

    @property
    def deadlines(self) -> Deadlines:
        return Deadlines(t_clk=self.geometry.t_clk, **self.deadline_overrides)

    def table_file(self) -> Path:
        return Path(self.table_path) if self.table_path else Path(self.output_dir) / "table.json"


def _section(cls, raw, name, problems):
    if not isinstance(raw, dict):
        problems.append(f"{name}: expected an object")
        return cls()
    known = {f.name for f in dataclasses.fields(cls)}
    bad = sorted(set(raw) - known)
    problems.extend(f"{name}.{k}: unknown key" for k in bad)
    kwargs = {k: v for k, v in raw.items() if k in known}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"{name}: {exc}")
        return cls()


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config, collecting every problem before raising ConfigError."""
    if not isinstance(doc, dict):
        raise ConfigError(["top level: expected an object"])
    problems = [f"{k}: unknown key" for k in sorted(set(doc) - TOP_LEVEL)]
    cfg = ExperimentConfig()
    for name, cls in SECTIONS.items():
        if name in doc:
            setattr(cfg, name, _section(cls, doc[name], name, problems))
    if "deadlines" in doc:
        raw = doc["deadlines"]
        if not isinstance(raw, dict):
            problems.append("deadlines: expected an object")
        else:
            problems.extend(f"deadlines.{k}: unknown key" for k in sorted(set(raw) - set(DEADLINE_KEYS)))
            cfg.deadline_overrides = {k: float(v) for k, v in raw.items() if k in DEADLINE_KEYS}
            try:
                cfg.deadlines
            except ValueError as exc:
                problems.append(f"deadlines: {exc}")
    if "corners" in doc:
        raw = doc["corners"]
        if raw == "all":
            cfg.corners = all_corners()
        elif isinstance(raw, list):
            corners = []
            for item in raw:
                try:
                    corners.append(parse_corner(item))
                except (ValueError, AttributeError) as exc:
                    problems.append(f"corners: {exc}")
            cfg.corners = corners
        else:
            problems.append("corners: expected 'all' or a list of 'process,temp,ir' strings")
    if "traces" in doc:
        if isinstance(doc["traces"], list) and all(isinstance(t, str) for t in doc["traces"]):
            cfg.traces = list(doc["traces"])
        else:
            problems.append("traces: expected a list of trace specs")
    for key, conv in (("trace_length", int), ("seed", int), ("flop_load", float),
                      ("ratio_multiplier", float), ("output_dir", str), ("table_path", str)):
        if key in doc:
            if key == "table_path" and doc[key] is None:
                cfg.table_path = None
                continue
            try:
                setattr(cfg, key, conv(doc[key]))
            except (TypeError, ValueError):
                problems.append(f"{key}: cannot interpret {doc[key]!r}")
    for key in ("error_targets", "oracle_targets"):
        if key in doc:
            if key == "table_path" and doc[key] is None:
                cfg.table_path = None
                continue
            try:
                setattr(cfg, key, tuple(float(x) for x in doc[key]))
            except (TypeError, ValueError):
                problems.append(f"{key}: expected a list of fractions")
    if "error_targets" in doc and not set(cfg.error_targets) <= {0.0, 0.02, 0.05}:
        problems.append("error_targets: must be drawn from 0, 0.02, 0.05")
    if cfg.trace_length < 1:
        problems.append("trace_length: must be positive")
    if cfg.ratio_multiplier <= 0:
        problems.append("ratio_multiplier: must be positive")
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(source: str | None) -> ExperimentConfig:
    """Load ``source`` (a JSON file path) or the defaults for ``None``/``"default"``."""
    if source in (None, "default"):
        return ExperimentConfig()
    path = Path(source)
    if not path.exists():
        raise ConfigError([f"config file {path} not found"])
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None
    return config_from_dict(doc)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully expanded document; feeding it back reproduces ``cfg``."""
    return {
        "geometry": cfg.geometry.as_dict(),
        "device": cfg.device.as_dict(),
        "deadlines": {k: getattr(cfg.deadlines, k) for k in DEADLINE_KEYS},
        "controller": dataclasses.asdict(cfg.controller),
        "energy": dataclasses.asdict(cfg.energy),
        "flop_load": cfg.flop_load,
        "corners": [c.label for c in cfg.corners],
        "traces": list(cfg.traces),
        "trace_length": cfg.trace_length,
        "seed": cfg.seed,
        "error_targets": list(cfg.error_targets),
        "oracle_targets": list(cfg.oracle_targets),
        "ratio_multiplier": cfg.ratio_multiplier,
        "output_dir": cfg.output_dir,
        "table_path": cfg.table_path,
    }


def corner_list(text: str | None, cfg: ExperimentConfig) -> list[PvtCorner]:
    """CLI corner selection: ``all``, or ``;``-separated triples."""
    if text is None:
        return list(cfg.corners)
    if text == "all":
        return all_corners()
    return [parse_corner(part) for part in text.split(";") if part.strip()]
