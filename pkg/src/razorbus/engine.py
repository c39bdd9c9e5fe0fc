"""Cycle loop, energy accounting, static sweeps and closed-loop runs.

Timing model: one bus word is sampled per clock cycle. A word that misses
the main deadline but meets the shadow deadline costs one extra (stall)
clock cycle during which the bus holds its value, so error windows,
actuation latency and reported cycle counts are all in clock cycles.

The fast paths work on a :class:`Workload`, a vectorized classification of
the trace. Because every stage of a wire sees the same coupling class and
delay is nondecreasing in that class, a cycle misses a deadline exactly when
its largest toggling class reaches a per-voltage threshold.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .characterization import DelayEnergyTable, lookup
from .controller import ControllerParams, DvsController
from .device import PvtCorner
from .errors import FatalTimingError
from .interconnect import N_CLASSES, TransitionProfile, classify_transition, classify_words
from .razor import (
    DEFAULT_C_FLOP_CLK,
    CycleOutcome,
    CycleStatus,
    Deadlines,
    class_thresholds,
    floor_corner,
    min_safe_voltage,
    recovery_overhead_energy,
    sample_cycle,
)
from .traces import Trace


@dataclass(frozen=True)
class EnergyParams:
    n_flops: int = 32
    c_flop_clk: float = DEFAULT_C_FLOP_CLK

    def recovery(self, vdd: float) -> float:
        return recovery_overhead_energy(self.n_flops, vdd, self.c_flop_clk)


@dataclass
class Workload:
    """A trace classified against one bus, ready for repeated simulation."""

    trace: Trace
    profile: TransitionProfile
    switched_cap: np.ndarray   # per-cycle farads, independent of vdd
    class_hist: np.ndarray     # counts of max_class over -1..4
    table_hash: str

    @property
    def n(self) -> int:
        return len(self.profile)

    @property
    def total_switched_cap(self) -> float:
        return float(self.switched_cap.sum())


def prepare(trace: Trace | Workload, table: DelayEnergyTable) -> Workload:
    if isinstance(trace, Workload):
        if trace.table_hash == table.table_hash:
            return trace
        trace = trace.trace
    if trace.n_wires != table.geometry.n_wires:
        raise ValueError(f"trace width {trace.n_wires} does not match bus width {table.geometry.n_wires}")
    profile = classify_words(trace.words, table.geometry)
    csw = profile.switched_cap(table.switched_cap)
    hist = np.bincount(profile.max_class.astype(np.int64) + 1, minlength=N_CLASSES + 1)
    return Workload(trace, profile, csw, hist, table.table_hash)


class _CornerView:
    """Per-voltage deadline thresholds and leakage for one corner."""

    def __init__(self, table: DelayEnergyTable, corner: PvtCorner, deadlines: Deadlines):
        self.table = table
        self.corner = corner
        self.ci = table.corner_index(corner)
        self.err_thr = class_thresholds(table, corner, deadlines.main_deadline)
        self.fatal_thr = class_thresholds(table, corner, deadlines.shadow_deadline)
        self.leak = table.leakage_energy[self.ci]

    def vi(self, mv: int) -> int:
        return self.table.v_index(int(mv))

    def delay(self, vi: int, k: int) -> float:
        return float(self.table.delay[self.ci, vi, k])


# ---------------------------------------------------------------------------
# per-cycle energy

def cycle_energy(classes, table: DelayEnergyTable, corner: PvtCorner, vdd: float,
                 outcome: CycleOutcome, energy: EnergyParams = EnergyParams()) -> float:
    """Energy of one sampled cycle: switching + leakage (+ recovery on Error).

    The stall cycle that follows an Error adds one more cycle of leakage,
    which callers charge separately.
    """
    _, _, leak = lookup(table, corner, vdd, 0)
    dyn = sum(float(table.switched_cap[c.k]) for c in classes if c.toggled) * vdd * vdd
    rec = energy.recovery(vdd) if outcome.status == CycleStatus.ERROR else 0.0
    return dyn + leak + rec


# ---------------------------------------------------------------------------
# static runs

@dataclass
class StaticResult:
    corner: str
    vdd: float
    words: int
    cycles: int
    errors: int          # main-deadline misses, including fatal ones
    fatal: int           # misses beyond the shadow deadline
    energy_dynamic: float
    energy_leakage: float
    energy_recovery: float

    @property
    def error_rate(self) -> float:
        return self.errors / self.cycles

    @property
    def energy_total(self) -> float:
        return self.energy_dynamic + self.energy_leakage + self.energy_recovery

    @property
    def valid(self) -> bool:
        return self.fatal == 0


def _count_at_least(hist: np.ndarray, k: int) -> int:
    # hist index 0 is the quiet bin (class -1)
    return int(hist[k + 1:].sum()) if k < N_CLASSES else 0


def run_static(trace, corner: PvtCorner, vdd: float, table: DelayEnergyTable,
               deadlines: Deadlines = Deadlines(), energy: EnergyParams = EnergyParams()) -> StaticResult:
    """Whole trace at a fixed supply; Fatal cycles are counted, not corrected."""
    wl = prepare(trace, table)
    view = _CornerView(table, corner, deadlines)
    vi = table.v_index(vdd)
    v = int(table.vdd_mv[vi]) / 1000
    errors = _count_at_least(wl.class_hist, int(view.err_thr[vi]))
    fatal = _count_at_least(wl.class_hist, int(view.fatal_thr[vi]))
    return StaticResult(
        corner=corner.label,
        vdd=v,
        words=wl.n,
        cycles=wl.n + errors,
        errors=errors,
        fatal=fatal,
        energy_dynamic=wl.total_switched_cap * v * v,
        energy_leakage=(wl.n + errors) * float(view.leak[vi]),
        energy_recovery=errors * energy.recovery(v),
    )


def static_curve(trace, corner: PvtCorner, table: DelayEnergyTable,
                 deadlines: Deadlines = Deadlines(), energy: EnergyParams = EnergyParams()) -> list[StaticResult]:
    """run_static at every grid voltage, top to floor."""
    wl = prepare(trace, table)
    return [run_static(wl, corner, int(mv) / 1000, table, deadlines, energy) for mv in table.vdd_mv]


@dataclass
class SweepPoint:
    corner: str
    delay_nominal: float   # k=4 path delay at the nominal supply
    target: float
    vdd: float
    error_rate: float
    energy: float
    baseline: float

    @property
    def gain(self) -> float:
        return 1.0 - self.energy / self.baseline


def lowest_voltage_for_target(curve: list[StaticResult], target: float) -> StaticResult:
    """Lowest grid point meeting ``target`` without any fatal cycle.

    The curve is scanned downward from the nominal supply and the scan stops
    at the first voltage that fails.
    """
    best = curve[0]
    for point in curve:
        if point.error_rate > target or not point.valid:
            break
        best = point
    return best


def sweep_static(trace, corners, table: DelayEnergyTable, error_targets=(0.0, 0.02, 0.05),
                 deadlines: Deadlines = Deadlines(), energy: EnergyParams = EnergyParams()) -> list[SweepPoint]:
    """Energy gain at the lowest voltage meeting each target, per corner."""
    for t in error_targets:
        if t not in (0.0, 0.02, 0.05):
            raise ValueError(f"error target {t} not in {{0, 0.02, 0.05}}")
    wl = prepare(trace, table)
    out = []
    for corner in corners:
        curve = static_curve(wl, corner, table, deadlines, energy)
        base = curve[0].energy_total
        d_nom = table.worst_delay(corner, table.top_mv / 1000)
        for target in error_targets:
            best = lowest_voltage_for_target(curve, target)
            out.append(SweepPoint(corner.label, d_nom, target, best.vdd, best.error_rate,
                                  best.energy_total, base))
    return out


# ---------------------------------------------------------------------------
# closed-loop runs

@dataclass
class WindowRecord:
    cycle: int        # clock cycle at which the window closed
    v_mv: int         # applied voltage at the close
    errors: int
    length: int

    @property
    def rate(self) -> float:
        return self.errors / self.length


@dataclass
class RunReport:
    trace: str
    corner: str
    cycles: int
    words: int
    errors: int
    stall_cycles: int
    energy_dynamic: float
    energy_leakage: float
    energy_recovery: float
    energy_baseline: float
    v_floor: float
    windows: list = field(default_factory=list)
    decisions: list = field(default_factory=list)
    changes: list = field(default_factory=list)
    voltage_cycles: dict = field(default_factory=dict)  # mV -> clock cycles spent

    @property
    def energy_total(self) -> float:
        return self.energy_dynamic + self.energy_leakage + self.energy_recovery

    @property
    def energy_gain(self) -> float:
        return 1.0 - self.energy_total / self.energy_baseline

    @property
    def avg_error_rate(self) -> float:
        return self.errors / self.cycles

    @property
    def mean_vdd(self) -> float:
        total = sum(self.voltage_cycles.values())
        return sum(mv * c for mv, c in self.voltage_cycles.items()) / total / 1000

    def summary(self) -> dict:
        return {
            "trace": self.trace,
            "corner": self.corner,
            "cycles": self.cycles,
            "words": self.words,
            "errors": self.errors,
            "stall_cycles": self.stall_cycles,
            "avg_error_rate": self.avg_error_rate,
            "energy_dynamic": self.energy_dynamic,
            "energy_leakage": self.energy_leakage,
            "energy_recovery": self.energy_recovery,
            "energy_total": self.energy_total,
            "energy_baseline": self.energy_baseline,
            "energy_gain": self.energy_gain,
            "v_floor": self.v_floor,
            "mean_vdd": self.mean_vdd,
            "n_windows": len(self.windows),
            "n_voltage_changes": len(self.changes),
        }


def controller_floor(corner: PvtCorner, table: DelayEnergyTable, deadlines: Deadlines,
                     params: ControllerParams) -> int:
    """Regulator floor in mV: the process's safe minimum, less any diagnostic offset."""
    mv = int(round(min_safe_voltage(corner.process, table, deadlines) * 1000)) - params.floor_offset_mv
    return max(mv, table.floor_mv)


def run_dynamic(trace, corner: PvtCorner, table: DelayEnergyTable,
                params: ControllerParams = ControllerParams(), deadlines: Deadlines = Deadlines(),
                energy: EnergyParams = EnergyParams()) -> RunReport:
    """Closed-loop run from the starting voltage; raises FatalTimingError on a shadow miss."""
    wl = prepare(trace, table)
    view = _CornerView(table, corner, deadlines)
    ctrl = DvsController(params, controller_floor(corner, table, deadlines, params))
    mk = wl.profile.max_class
    csw = wl.switched_cap
    n = wl.n
    W = params.window_len

    pos = 0          # next word to sample
    t = 0            # next clock cycle
    carry = 0        # stall clock owed by the previous segment
    win_err = 0
    win_start = 0
    dyn = leak = rec = 0.0
    errors_total = 0
    windows = []
    vcycles: dict[int, int] = {}

    while pos < n or carry:
        next_window = (t // W + 1) * W
        seg_end = next_window
        if ctrl.pending is not None:
            seg_end = min(seg_end, ctrl.pending[1])
        mv = ctrl.v_applied_mv
        vi = view.vi(mv)
        v = mv / 1000
        avail = seg_end - t
        used = 0
        if carry:
            carry = 0
            used = 1
        if pos < n and used < avail:
            room = avail - used
            sl = mk[pos:pos + room]
            miss = sl >= view.err_thr[vi]
            fatal = sl >= view.fatal_thr[vi]
            cum = np.cumsum(miss, dtype=np.int64)
            cum += np.arange(1, len(sl) + 1)
            j = int(np.searchsorted(cum, room, side="left")) + 1
            j = min(j, len(sl))
            if fatal[:j].any():
                i = int(fatal[:j].argmax())
                k = int(sl[i])
                raise FatalTimingError(t + used + int(cum[i]) - 1 - int(miss[i]), v, k, view.delay(vi, k))
            clocks = int(cum[j - 1])
            e = int(np.count_nonzero(miss[:j]))
            dyn += float(csw[pos:pos + j].sum()) * v * v
            leak += (j + e) * float(view.leak[vi])
            rec += e * energy.recovery(v)
            win_err += e
            errors_total += e
            pos += j
            if clocks > room:
                carry = 1
                clocks = room
            used += clocks
        vcycles[mv] = vcycles.get(mv, 0) + used
        t += used
        if t < seg_end:
            break  # trace exhausted mid-segment
        if t == next_window:
            windows.append(WindowRecord(t, mv, win_err, t - win_start))
            ctrl.close_window(win_err, t)
            win_err = 0
            win_start = t
        ctrl.apply_due(t)

    if t > win_start:
        windows.append(WindowRecord(t, ctrl.v_applied_mv, win_err, t - win_start))
    baseline = run_static(wl, corner, table.top_mv / 1000, table, deadlines, energy)
    return RunReport(
        trace=wl.trace.name,
        corner=corner.label,
        cycles=t,
        words=n,
        errors=errors_total,
        stall_cycles=errors_total,
        energy_dynamic=dyn,
        energy_leakage=leak,
        energy_recovery=rec,
        energy_baseline=float(baseline.energy_total),
        v_floor=ctrl.v_floor_mv / 1000,
        windows=windows,
        decisions=ctrl.decisions,
        changes=ctrl.changes,
        voltage_cycles=dict(sorted(vcycles.items(), reverse=True)),
    )


def run_dynamic_cyclewise(trace: Trace, corner: PvtCorner, table: DelayEnergyTable,
                          params: ControllerParams = ControllerParams(),
                          deadlines: Deadlines = Deadlines(),
                          energy: EnergyParams = EnergyParams()) -> RunReport:
    """Straightforward clock-by-clock loop over per-wire classes.

    Orders of magnitude slower than :func:`run_dynamic`; kept as an
    independent check of the segment-based fast path.
    """
    geometry = table.geometry
    ctrl = DvsController(params, controller_floor(corner, table, deadlines, params))
    words = [int(w) for w in trace.words]
    prev = 0
    t = 0
    stall = False
    pos = 0
    errors = 0
    dyn = leak = rec = 0.0
    windows = []
    win_err = 0
    win_start = 0
    vcycles: dict[int, int] = {}
    while pos < len(words) or stall:
        mv = ctrl.v_applied_mv
        v = mv / 1000
        vcycles[mv] = vcycles.get(mv, 0) + 1
        if stall:
            stall = False
            status = CycleStatus.CLEAN
        else:
            classes = classify_transition(prev, words[pos], geometry)
            outcome = sample_cycle(classes, table, corner, v, deadlines)
            if outcome.status == CycleStatus.FATAL:
                k = max(c.k for c in classes if c.toggled)
                raise FatalTimingError(t, v, k, outcome.worst_wire_delay)
            _, _, leak_v = lookup(table, corner, v, 0)
            leak += leak_v
            dyn += sum(float(table.switched_cap[c.k]) for c in classes if c.toggled) * v * v
            if outcome.status == CycleStatus.ERROR:
                errors += 1
                win_err += 1
                rec += energy.recovery(v)
                leak += leak_v  # the stall cycle that follows
                stall = True
            status = outcome.status
            prev = words[pos]
            pos += 1
        end = t + 1
        if end % params.window_len == 0:
            windows.append(WindowRecord(end, mv, win_err, end - win_start))
            win_err = 0
            win_start = end
        ctrl.observe(status, t)
        t = end
    if t > win_start:
        windows.append(WindowRecord(t, ctrl.v_applied_mv, win_err, t - win_start))
    baseline = run_static(trace, corner, table.top_mv / 1000, table, deadlines, energy)
    return RunReport(
        trace=trace.name, corner=corner.label, cycles=t, words=len(words), errors=errors,
        stall_cycles=errors, energy_dynamic=dyn, energy_leakage=leak, energy_recovery=rec,
        energy_baseline=float(baseline.energy_total), v_floor=ctrl.v_floor_mv / 1000, windows=windows,
        decisions=ctrl.decisions, changes=ctrl.changes,
        voltage_cycles=dict(sorted(vcycles.items(), reverse=True)),
    )


# ---------------------------------------------------------------------------
# fixed voltage scaling and multi-trace runs

def fixed_vs_voltage(corner: PvtCorner, table: DelayEnergyTable, deadlines: Deadlines = Deadlines()) -> float:
    """Lowest voltage that is error-free for every pattern assuming 100C and full IR drop."""
    ci = table.corner_index(floor_corner(corner.process))
    ok = table.delay[ci, :, 4] <= deadlines.main_deadline
    mv = table.top_mv
    for vi in range(len(table.vdd_mv)):
        if not ok[vi]:
            break
        mv = int(table.vdd_mv[vi])
    return mv / 1000


@dataclass
class SuiteRow:
    trace: str
    fixed_vs_vdd: float
    fixed_vs_gain: float
    dvs_gain: float
    avg_error_rate: float
    report: RunReport


def run_suite(traces, corner: PvtCorner, table: DelayEnergyTable,
              params: ControllerParams = ControllerParams(), deadlines: Deadlines = Deadlines(),
              energy: EnergyParams = EnergyParams()) -> tuple[list[SuiteRow], dict]:
    """Fixed-VS and closed-loop gains per trace plus an energy-weighted total."""
    v_fixed = fixed_vs_voltage(corner, table, deadlines)
    rows = []
    tot_base = tot_fixed = tot_dvs = 0.0
    tot_err = tot_cyc = 0
    for trace in traces:
        wl = prepare(trace, table)
        fixed = run_static(wl, corner, v_fixed, table, deadlines, energy)
        rep = run_dynamic(wl, corner, table, params, deadlines, energy)
        rows.append(SuiteRow(rep.trace, v_fixed, 1 - fixed.energy_total / rep.energy_baseline,
                             rep.energy_gain, rep.avg_error_rate, rep))
        tot_base += rep.energy_baseline
        tot_fixed += fixed.energy_total
        tot_dvs += rep.energy_total
        tot_err += rep.errors
        tot_cyc += rep.cycles
    total = {
        "fixed_vs_gain": 1 - tot_fixed / tot_base,
        "dvs_gain": 1 - tot_dvs / tot_base,
        "avg_error_rate": tot_err / tot_cyc,
    }
    return rows, total


# ---------------------------------------------------------------------------
# offline optimum

@dataclass
class OracleProfile:
    corner: str
    target: float
    window_len: int
    window_mv: np.ndarray  # lowest feasible voltage per window

    def histogram(self) -> dict:
        """Fraction of windows spent at each voltage, highest voltage first."""
        vals, counts = np.unique(self.window_mv, return_counts=True)
        total = counts.sum()
        return {int(v): float(c / total) for v, c in sorted(zip(vals, counts), reverse=True)}


def oracle_voltage_profile(trace, corner: PvtCorner, table: DelayEnergyTable, target_rate: float,
                           window_len: int = 10_000, deadlines: Deadlines = Deadlines()) -> OracleProfile:
    """Per-window lowest grid voltage meeting ``target_rate`` with hindsight.

    Windows are ``window_len`` consecutive words; a window's rate counts the
    stall cycles its errors would add. Voltages with any fatal cycle in the
    window are excluded.
    """
    wl = prepare(trace, table)
    view = _CornerView(table, corner, deadlines)
    n_win = math.ceil(wl.n / window_len)
    win_id = np.arange(wl.n) // window_len
    hist = np.bincount(win_id * (N_CLASSES + 1) + wl.profile.max_class.astype(np.int64) + 1,
                       minlength=n_win * (N_CLASSES + 1)).reshape(n_win, N_CLASSES + 1)
    # at_least[:, k]: cycles whose max class is >= k, for k = 0..5
    tail = np.cumsum(hist[:, ::-1], axis=1)[:, ::-1]
    at_least = np.zeros((n_win, N_CLASSES + 1), dtype=np.int64)
    at_least[:, :N_CLASSES] = tail[:, 1:]
    words = hist.sum(axis=1)
    best = np.full(n_win, table.top_mv, dtype=np.int64)
    alive = np.ones(n_win, dtype=bool)
    for vi, mv in enumerate(table.vdd_mv):
        miss = at_least[:, int(view.err_thr[vi])]
        fat = at_least[:, int(view.fatal_thr[vi])]
        ok = (fat == 0) & (miss <= target_rate * (words + miss)) & alive
        best[ok] = mv
        alive &= ok
    return OracleProfile(corner.label, target_rate, window_len, best)
