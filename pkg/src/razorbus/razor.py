"""Double-sampling flop bank: deadlines, per-cycle detection, voltage floor."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .characterization import DelayEnergyTable, lookup
from .device import Process, PvtCorner
from .interconnect import N_CLASSES

DEFAULT_C_FLOP_CLK = 15e-15


class CycleStatus(enum.IntEnum):
    CLEAN = 0
    ERROR = 1
    FATAL = 2


@dataclass(frozen=True)
class Deadlines:
    t_clk: float = 1e-9 / 1.5
    main_deadline: float = 600e-12
    shadow_skew: float = 220e-12
    hold_margin: float = 20e-12

    def __post_init__(self):
        if not 0 < self.main_deadline < self.t_clk:
            raise ValueError("main deadline must lie inside the clock period")
        if not 0 < self.shadow_skew <= 0.33 * self.t_clk * (1 + 1e-9):
            raise ValueError("shadow skew must be positive and at most 33% of the clock period")
        if self.hold_margin < 0:
            raise ValueError("hold margin must be non-negative")

    @property
    def shadow_deadline(self) -> float:
        return self.main_deadline + self.shadow_skew


@dataclass(frozen=True)
class CycleOutcome:
    status: CycleStatus
    worst_wire_delay: float
    stall_cycles_added: int = 0


def classify_delay(delay: float, deadlines: Deadlines) -> CycleOutcome:
    if delay <= deadlines.main_deadline:
        return CycleOutcome(CycleStatus.CLEAN, delay, 0)
    if delay <= deadlines.shadow_deadline:
        return CycleOutcome(CycleStatus.ERROR, delay, 1)
    return CycleOutcome(CycleStatus.FATAL, delay, 0)


def sample_cycle(per_wire_classes, table: DelayEnergyTable, corner: PvtCorner, vdd: float,
                 deadlines: Deadlines) -> CycleOutcome:
    """Bank-level outcome of one bus cycle (the OR of every flop's error flag)."""
    worst = 0.0
    for cls in per_wire_classes:
        if cls.toggled:
            worst = max(worst, lookup(table, corner, vdd, cls.k)[0])
    return classify_delay(worst, deadlines)


def class_thresholds(table: DelayEnergyTable, corner: PvtCorner, deadline: float) -> np.ndarray:
    """For each grid voltage, the smallest class k whose delay misses ``deadline``.

    A value of 5 means no class misses. Relies on delay being nondecreasing in k.
    """
    d = table.delay[table.corner_index(corner)]
    miss = d > deadline
    return np.where(miss.any(axis=1), miss.argmax(axis=1), N_CLASSES).astype(np.int8)


def floor_corner(process: Process) -> PvtCorner:
    """The corner used to set a process's voltage floor: 100C with 10% IR drop."""
    return PvtCorner(Process(process), 100.0, 0.10)


def min_safe_voltage(process: Process, table: DelayEnergyTable, deadlines: Deadlines) -> float:
    """Lowest grid voltage where the worst pattern still meets the shadow latch.

    Temperature and IR drop are taken at their worst values; only the
    process corner is known ahead of time.
    """
    ci = table.corner_index(floor_corner(process))
    ok = table.delay[ci, :, 4] <= deadlines.shadow_deadline
    mv = table.top_mv
    for vi in range(len(table.vdd_mv)):
        if not ok[vi]:
            break
        mv = int(table.vdd_mv[vi])
    return mv / 1000


def recovery_overhead_energy(n_flops: int, vdd: float, c_flop_clk: float = DEFAULT_C_FLOP_CLK) -> float:
    """Energy of clocking the whole flop bank for one extra recovery cycle."""
    return n_flops * c_flop_clk * vdd * vdd
