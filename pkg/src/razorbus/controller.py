"""Windowed error-rate measurement and bang-bang supply regulation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .razor import CycleStatus


class VoltageCommand(enum.IntEnum):
    DOWN = -1
    HOLD = 0
    UP = 1


@dataclass(frozen=True)
class ControllerParams:
    window_len: int = 10_000
    lo_target: float = 0.01
    hi_target: float = 0.02
    step_mv: int = 20
    latency_cycles: int = 3_000
    v_ceiling: float = 1.2
    v_start: float = 1.2
    floor_offset_mv: int = 0  # lowers the process floor; diagnostics only

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be positive")
        if not 0 <= self.latency_cycles < self.window_len:
            raise ValueError("latency_cycles must be shorter than the window")
        if not 0 <= self.lo_target <= self.hi_target <= 1:
            raise ValueError("need 0 <= lo_target <= hi_target <= 1")
        if self.step_mv <= 0 or self.step_mv % 20:
            raise ValueError("step_mv must be a positive multiple of the 20 mV grid")
        if self.floor_offset_mv < 0 or self.floor_offset_mv % 20:
            raise ValueError("floor_offset_mv must be a non-negative multiple of 20")


@dataclass
class Decision:
    cycle: int          # clock cycle at which the window closed
    err_rate: float
    command: VoltageCommand
    target_mv: int
    apply_at: int | None


@dataclass
class DvsController:
    """Mutable controller state for one run.

    Voltages are tracked in integer millivolts so they stay exactly on the
    grid. ``observe`` is called once per clock cycle, after the cycle
    completes; a command decided when window ``W`` closes takes effect for
    clock cycles ``>= W + latency_cycles``.
    """

    params: ControllerParams
    v_floor_mv: int
    err_count: int = 0
    v_commanded_mv: int = 0
    v_applied_mv: int = 0
    pending: tuple | None = None
    decisions: list = field(default_factory=list)
    changes: list = field(default_factory=list)  # (cycle, old_mv, new_mv)

    def __post_init__(self):
        start = int(round(self.params.v_start * 1000))
        if not self.v_commanded_mv:
            self.v_commanded_mv = start
        if not self.v_applied_mv:
            self.v_applied_mv = start
        if self.v_floor_mv > self.v_ceiling_mv:
            raise ValueError("controller floor above ceiling")

    @property
    def v_ceiling_mv(self) -> int:
        return int(round(self.params.v_ceiling * 1000))

    @property
    def v_applied(self) -> float:
        return self.v_applied_mv / 1000

    @property
    def v_commanded(self) -> float:
        return self.v_commanded_mv / 1000

    def decide(self, err_rate: float) -> VoltageCommand:
        """Step the commanded voltage by one grid step, or hold."""
        if not 0.0 <= err_rate <= 1.0:
            raise ValueError(f"error rate {err_rate} outside [0, 1]")
        p = self.params
        if err_rate < p.lo_target and self.v_commanded_mv - p.step_mv >= self.v_floor_mv:
            self.v_commanded_mv -= p.step_mv
            return VoltageCommand.DOWN
        if err_rate > p.hi_target and self.v_commanded_mv + p.step_mv <= self.v_ceiling_mv:
            self.v_commanded_mv += p.step_mv
            return VoltageCommand.UP
        return VoltageCommand.HOLD

    def close_window(self, err_count: int, window_end: int) -> Decision:
        """Decide on a finished window and schedule the resulting change."""
        assert self.pending is None, "window longer than latency leaves no pending command"
        rate = err_count / self.params.window_len
        cmd = self.decide(rate)
        apply_at = None
        if cmd is not VoltageCommand.HOLD:
            apply_at = window_end + self.params.latency_cycles
            self.pending = (self.v_commanded_mv, apply_at)
        decision = Decision(window_end, rate, cmd, self.v_commanded_mv, apply_at)
        self.decisions.append(decision)
        return decision

    def apply_due(self, cycle: int) -> bool:
        """Apply the pending command if it is due at clock ``cycle``."""
        if self.pending is not None and self.pending[1] == cycle:
            old = self.v_applied_mv
            self.v_applied_mv = self.pending[0]
            self.pending = None
            self.changes.append((cycle, old, self.v_applied_mv))
            return True
        return False

    def observe(self, status, cycle: int) -> Decision | None:
        """Account for clock ``cycle`` having completed with ``status``.

        Stall cycles are passed as CLEAN. A FATAL status leaves the
        controller untouched; the caller aborts the run.
        """
        if status == CycleStatus.FATAL:
            return None
        if status == CycleStatus.ERROR:
            self.err_count += 1
        end = cycle + 1
        decision = None
        if end % self.params.window_len == 0:
            decision = self.close_window(self.err_count, end)
            self.err_count = 0
        self.apply_due(end)
        return decision
