"""Cycle-accurate simulator of a double-sampling on-chip bus under closed-loop voltage scaling."""

from .characterization import DelayEnergyTable, build_tables, load_table, lookup, save_table
from .config import ExperimentConfig, load_config
from .controller import ControllerParams, DvsController, VoltageCommand
from .device import DeviceParams, Process, PvtCorner, WORST_CORNER, all_corners, parse_corner
from .engine import (EnergyParams, RunReport, StaticResult, oracle_voltage_profile, run_dynamic,
                     run_static, run_suite, sweep_static)
from .errors import (CalibrationError, ConfigError, FatalTimingError, RazorBusError, TableError,
                     TraceError)
from .interconnect import (BusGeometry, SegmentRc, calibrate_repeaters, check_hold, classify_words,
                           extract_rc, path_delay, stage_delay, transform_geometry)
from .razor import CycleStatus, Deadlines, min_safe_voltage
from .traces import Trace, generate, load_trace, pseudo_benchmark, pseudo_benchmark_suite, save_trace

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
