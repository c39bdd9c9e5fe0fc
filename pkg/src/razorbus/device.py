"""Voltage/process/temperature dependent repeater drive strength and leakage.

An alpha-power-law effective resistance stands in for SPICE-characterized
repeaters. Only the qualitative voltage dependence matters for the
simulator: delay must rise as the supply is lowered, and slow corners must
be slower than fast ones.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

from .errors import NonOperationalVoltage

V_REF = 1.2
T_REF = 25.0
TEMPERATURES = (25.0, 100.0)
IR_DROPS = (0.0, 0.10)


class Process(str, enum.Enum):
    SLOW = "slow"
    TYPICAL = "typical"
    FAST = "fast"


@dataclass(frozen=True, order=True)
class PvtCorner:
    process: Process
    temperature_c: float
    ir_drop_frac: float

    def __post_init__(self):
        object.__setattr__(self, "process", Process(self.process))
        object.__setattr__(self, "temperature_c", float(self.temperature_c))
        object.__setattr__(self, "ir_drop_frac", float(self.ir_drop_frac))
        if self.temperature_c not in TEMPERATURES:
            raise ValueError(f"temperature must be one of {TEMPERATURES}, got {self.temperature_c}")
        if self.ir_drop_frac not in IR_DROPS:
            raise ValueError(f"IR drop must be one of {IR_DROPS}, got {self.ir_drop_frac}")

    @property
    def label(self) -> str:
        ir = "ir" if self.ir_drop_frac else "no-ir"
        return f"{self.process.value},{self.temperature_c:g},{ir}"

    def __str__(self):
        return self.label


def all_corners() -> list[PvtCorner]:
    """The 12 process x temperature x IR-drop combinations, in a fixed order."""
    return [
        PvtCorner(p, t, ir)
        for p, t, ir in itertools.product(Process, TEMPERATURES, IR_DROPS)
    ]


WORST_CORNER = PvtCorner(Process.SLOW, 100.0, 0.10)

_IR_WORDS = {"ir": 0.10, "no-ir": 0.0, "noir": 0.0, "0": 0.0, "0.1": 0.10, "10%": 0.10, "0%": 0.0}


def parse_corner(text: str) -> PvtCorner:
    """Parse a ``process,temp,ir`` triple such as ``typical,100,no-ir``."""
    parts = [p.strip().lower() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"corner must be 'process,temp,ir', got {text!r}")
    proc, temp, ir = parts
    if ir not in _IR_WORDS:
        raise ValueError(f"IR drop must be 'ir' or 'no-ir', got {ir!r}")
    return PvtCorner(Process(proc), float(temp.rstrip("c")), _IR_WORDS[ir])


def _default_r_scale():
    return {Process.SLOW: 1.15, Process.TYPICAL: 1.00, Process.FAST: 0.87}


def _default_leak_scale():
    return {Process.SLOW: 0.5, Process.TYPICAL: 1.0, Process.FAST: 2.5}


@dataclass(frozen=True)
class DeviceParams:
    vt: float = 0.35
    alpha: float = 1.3
    r0: float = 10e3                 # unit repeater, Typical/25C/1.2V
    process_r_scale: dict = field(default_factory=_default_r_scale)
    process_leak_scale: dict = field(default_factory=_default_leak_scale)
    temp_r_coeff: float = 0.002      # per degC
    leak0: float = 10e-9             # unit repeater, Typical/25C/1.2V
    leak_v_coeff: float = 2.5        # per volt
    leak_t_coeff: float = 0.025      # per degC

    def __post_init__(self):
        object.__setattr__(
            self, "process_r_scale", {Process(k): float(v) for k, v in self.process_r_scale.items()}
        )
        object.__setattr__(
            self, "process_leak_scale", {Process(k): float(v) for k, v in self.process_leak_scale.items()}
        )
        if not 1.0 <= self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in [1, 2], got {self.alpha}")
        if not 0.0 < self.vt < V_REF:
            raise ValueError(f"vt must lie in (0, {V_REF}), got {self.vt}")
        for name in ("r0", "leak0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for table in (self.process_r_scale, self.process_leak_scale):
            if set(table) != set(Process) or min(table.values()) <= 0:
                raise ValueError("process scale factors must be positive for slow/typical/fast")

    def as_dict(self) -> dict:
        return {
            "vt": self.vt,
            "alpha": self.alpha,
            "r0": self.r0,
            "process_r_scale": {p.value: v for p, v in self.process_r_scale.items()},
            "process_leak_scale": {p.value: v for p, v in self.process_leak_scale.items()},
            "temp_r_coeff": self.temp_r_coeff,
            "leak0": self.leak0,
            "leak_v_coeff": self.leak_v_coeff,
            "leak_t_coeff": self.leak_t_coeff,
        }


DEFAULT_DEVICE = DeviceParams()


def effective_vdd(v_supply: float, corner: PvtCorner) -> float:
    """Voltage seen by the repeaters after IR droop; used for delay only."""
    if v_supply <= 0:
        raise ValueError("supply voltage must be positive")
    return v_supply * (1.0 - corner.ir_drop_frac)


def _drive_factor(v: float, params: DeviceParams) -> float:
    return v / (v - params.vt) ** params.alpha


def driver_resistance(size: float, v_eff: float, corner: PvtCorner,
                      params: DeviceParams = DEFAULT_DEVICE) -> float:
    """Effective output resistance of a repeater of relative ``size``.

    ``v_eff`` is the already-drooped supply (see :func:`effective_vdd`).
    Normalized so that a unit repeater at Typical/25C/1.2 V gives ``r0``.
    """
    if size <= 0:
        raise ValueError("repeater size must be positive")
    if v_eff <= params.vt:
        raise NonOperationalVoltage(
            f"effective supply {v_eff:.3f} V is not above vt={params.vt} V"
        )
    temp_scale = 1.0 + params.temp_r_coeff * (corner.temperature_c - T_REF)
    v_scale = _drive_factor(v_eff, params) / _drive_factor(V_REF, params)
    return params.r0 / size * params.process_r_scale[corner.process] * temp_scale * v_scale


def leakage_current(size: float, v_supply: float, corner: PvtCorner,
                    params: DeviceParams = DEFAULT_DEVICE) -> float:
    """Subthreshold leakage of one repeater, exponential in supply and temperature."""
    if size <= 0 or v_supply <= 0:
        raise ValueError("size and supply must be positive")
    return (
        params.leak0
        * size
        * math.exp(params.leak_v_coeff * (v_supply - V_REF))
        * math.exp(params.leak_t_coeff * (corner.temperature_c - T_REF))
        * params.process_leak_scale[corner.process]
    )


GRID_STEP_MV = 20
GRID_TOP_MV = 1200
GRID_FLOOR_MV = 600


def voltage_grid_mv(top_mv: int = GRID_TOP_MV, floor_mv: int = GRID_FLOOR_MV,
                    step_mv: int = GRID_STEP_MV) -> list[int]:
    """Supply grid in integer millivolts, descending from ``top_mv``."""
    if step_mv <= 0 or floor_mv > top_mv:
        raise ValueError("bad voltage grid")
    return list(range(top_mv, floor_mv - 1, -step_mv))


def lowest_operational_mv(params: DeviceParams = DEFAULT_DEVICE, corners=None,
                          step_mv: int = GRID_STEP_MV, top_mv: int = GRID_TOP_MV) -> int:
    """Lowest grid voltage where every corner keeps v_eff above vt."""
    corners = all_corners() if corners is None else corners
    worst_ir = max(c.ir_drop_frac for c in corners)
    mv = top_mv
    while mv - step_mv > 0 and (mv - step_mv) / 1000 * (1 - worst_ir) > params.vt:
        mv -= step_mv
    return mv
