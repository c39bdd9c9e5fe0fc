"""Delay/energy lookup tables, built once per bus and consumed by the simulator."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import (
    DEFAULT_DEVICE,
    GRID_FLOOR_MV,
    GRID_STEP_MV,
    DeviceParams,
    PvtCorner,
    all_corners,
    leakage_current,
    lowest_operational_mv,
    parse_corner,
    voltage_grid_mv,
)
from .errors import TableError
from .interconnect import (
    N_CLASSES,
    BusGeometry,
    SegmentRc,
    geometry_hash,
    path_delay,
)

TABLE_FORMAT = "razorbus-table"
TABLE_VERSION = 1
DEFAULT_FLOP_LOAD = 10e-15


@dataclass
class DelayEnergyTable:
    """Per-(corner, vdd, k) path delay plus per-(corner, vdd) leakage energy.

    ``vdd_mv`` descends from the nominal supply in 20 mV steps. Delays are
    full in-to-out path delays in seconds.
    """

    geometry: BusGeometry
    rc: SegmentRc
    device: DeviceParams
    corners: list
    vdd_mv: np.ndarray          # (n_v,) int
    delay: np.ndarray           # (n_corners, n_v, 5)
    leakage_energy: np.ndarray  # (n_corners, n_v) joules per clock cycle
    switched_cap: np.ndarray    # (5,) farads per toggling wire
    flop_load: float = DEFAULT_FLOP_LOAD
    table_hash: str = ""
    _corner_index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._corner_index = {c: i for i, c in enumerate(self.corners)}
        if not self.table_hash:
            self.table_hash = table_hash(self.geometry, self.device, self.rc, self.flop_load)

    @property
    def floor_mv(self) -> int:
        return int(self.vdd_mv[-1])

    @property
    def top_mv(self) -> int:
        return int(self.vdd_mv[0])

    def corner_index(self, corner: PvtCorner) -> int:
        try:
            return self._corner_index[corner]
        except KeyError:
            raise TableError(f"corner {corner} not in table") from None

    def v_index(self, vdd: float | int) -> int:
        """Grid index of ``vdd`` (volts, or integer millivolts)."""
        mv = vdd if isinstance(vdd, (int, np.integer)) else vdd * 1000.0
        rounded = int(round(mv))
        if abs(mv - rounded) > 1e-6 or (self.top_mv - rounded) % GRID_STEP_MV:
            raise TableError(f"vdd {vdd} is not on the {GRID_STEP_MV} mV grid")
        idx = (self.top_mv - rounded) // GRID_STEP_MV
        if not 0 <= idx < len(self.vdd_mv):
            raise TableError(f"vdd {vdd} outside table range [{self.floor_mv}, {self.top_mv}] mV")
        return idx

    def worst_delay(self, corner: PvtCorner, vdd: float = 1.2) -> float:
        return float(self.delay[self.corner_index(corner), self.v_index(vdd), 4])


def table_hash(geometry: BusGeometry, device: DeviceParams, rc: SegmentRc, flop_load: float) -> str:
    return geometry_hash(geometry, device, rc, {"flop_load": flop_load, "version": TABLE_VERSION})


def table_floor_mv(device: DeviceParams, corners) -> int:
    return max(GRID_FLOOR_MV, lowest_operational_mv(device, corners))


def build_tables(geometry: BusGeometry, rc: SegmentRc, device: DeviceParams = DEFAULT_DEVICE,
                 corners=None, flop_load: float = DEFAULT_FLOP_LOAD) -> DelayEnergyTable:
    """Fill every (corner, vdd, k) cell by direct delay evaluation."""
    corners = all_corners() if corners is None else list(corners)
    size = geometry.require_size()
    top = int(round(geometry.v_nominal * 1000))
    grid = np.array(voltage_grid_mv(top, table_floor_mv(device, corners)), dtype=np.int64)
    delay = np.empty((len(corners), len(grid), N_CLASSES))
    leak = np.empty((len(corners), len(grid)))
    t_clk = geometry.t_clk
    for ci, corner in enumerate(corners):
        for vi, mv in enumerate(grid):
            v = mv / 1000
            for k in range(N_CLASSES):
                delay[ci, vi, k] = path_delay(rc, k, v, corner, geometry, size, device)
            leak[ci, vi] = geometry.n_repeaters * leakage_current(size, v, corner, device) * v * t_clk
    cap = np.array([geometry.stages * (rc.c_g + k * rc.c_c) + flop_load for k in range(N_CLASSES)])
    return DelayEnergyTable(geometry, rc, device, corners, grid, delay, leak, cap, flop_load)


def lookup(table: DelayEnergyTable, corner: PvtCorner, vdd: float, k: int):
    """Exact cell retrieval: (path delay, switched cap per wire, leakage energy per cycle)."""
    ci, vi = table.corner_index(corner), table.v_index(vdd)
    if not 0 <= k < N_CLASSES:
        raise TableError(f"coupling class {k} out of range")
    return float(table.delay[ci, vi, k]), float(table.switched_cap[k]), float(table.leakage_energy[ci, vi])


# ---------------------------------------------------------------------------
# serialization

def _device_from_dict(d: dict) -> DeviceParams:
    return DeviceParams(**d)


def table_to_dict(table: DelayEnergyTable) -> dict:
    return {
        "format": TABLE_FORMAT,
        "version": TABLE_VERSION,
        "hash": table.table_hash,
        "geometry": table.geometry.as_dict(),
        "device": table.device.as_dict(),
        "rc": dataclasses.asdict(table.rc),
        "flop_load": table.flop_load,
        "vdd_mv": [int(v) for v in table.vdd_mv],
        "corners": [c.label for c in table.corners],
        "switched_cap": table.switched_cap.tolist(),
        "delay": table.delay.tolist(),
        "leakage_energy": table.leakage_energy.tolist(),
    }


def save_table(table: DelayEnergyTable, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(table_to_dict(table), indent=1) + "\n")
    return path


def load_table(path, expected_hash: str | None = None) -> DelayEnergyTable:
    """Read a table file, refusing version or hash mismatches."""
    path = Path(path)
    if not path.exists():
        raise TableError(f"table file {path} not found; run `razorbus tables` first")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise TableError(f"{path}: not a table file ({exc})") from None
    if doc.get("format") != TABLE_FORMAT or doc.get("version") != TABLE_VERSION:
        raise TableError(f"{path}: unsupported table format/version")
    geometry = BusGeometry(**doc["geometry"])
    device = _device_from_dict(doc["device"])
    rc = SegmentRc(**doc["rc"])
    stored = doc["hash"]
    recomputed = table_hash(geometry, device, rc, doc["flop_load"])
    if stored != recomputed:
        raise TableError(f"{path}: header hash {stored} does not match contents ({recomputed})")
    if expected_hash is not None and stored != expected_hash:
        raise TableError(
            f"{path}: table was built for a different bus (hash {stored}, expected "
            f"{expected_hash}); rebuild with `razorbus tables`"
        )
    return DelayEnergyTable(
        geometry=geometry,
        rc=rc,
        device=device,
        corners=[parse_corner(c) for c in doc["corners"]],
        vdd_mv=np.array(doc["vdd_mv"], dtype=np.int64),
        delay=np.array(doc["delay"], dtype=np.float64),
        leakage_energy=np.array(doc["leakage_energy"], dtype=np.float64),
        switched_cap=np.array(doc["switched_cap"], dtype=np.float64),
        flop_load=doc["flop_load"],
        table_hash=stored,
    )
