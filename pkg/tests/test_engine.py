import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from razorbus.controller import ControllerParams, VoltageCommand
from razorbus.device import WORST_CORNER, Process, PvtCorner, all_corners
from razorbus.engine import (controller_floor, cycle_energy, oracle_voltage_profile, run_dynamic,
                             run_dynamic_cyclewise, run_static, run_suite, static_curve, sweep_static)
from razorbus.errors import FatalTimingError
from razorbus.interconnect import BusGeometry, classify_transition
from razorbus.razor import CycleOutcome, CycleStatus, Deadlines
from razorbus.traces import generate, pseudo_benchmark

TYP100 = PvtCorner(Process.TYPICAL, 100.0, 0.0)
SMALL = ControllerParams(window_len=500, latency_cycles=150)


def test_quiet_cycle_costs_leakage_only(table):
    classes = classify_transition(3, 3, BusGeometry())
    e = cycle_energy(classes, table, TYP100, 1.0, CycleOutcome(CycleStatus.CLEAN, 0.0))
    assert e == table.leakage_energy[table.corner_index(TYP100), table.v_index(1.0)]


def test_dynamic_part_scales_with_v_squared(table):
    g = BusGeometry()
    classes = classify_transition(0x0F0F0F0F, 0x12345678, g)
    clean = CycleOutcome(CycleStatus.CLEAN, 0.0)
    ci = table.corner_index(TYP100)
    dyn = {v: cycle_energy(classes, table, TYP100, v, clean) - table.leakage_energy[ci, table.v_index(v)]
           for v in (0.98, 1.2)}
    assert dyn[0.98] / dyn[1.2] == pytest.approx((0.98 / 1.2) ** 2, rel=1e-12)


def test_opposite_phase_toggle_is_max_energy(table):
    g = BusGeometry()
    clean = CycleOutcome(CycleStatus.CLEAN, 0.0)
    adv = generate("adversarial", 2).words.tolist()
    e_max = cycle_energy(classify_transition(adv[0], adv[1], g), table, TYP100, 1.2, clean)
    rng = np.random.default_rng(0)
    for a, b in rng.integers(0, 2 ** 32, size=(300, 2)).tolist():
        assert cycle_energy(classify_transition(a, b, g), table, TYP100, 1.2, clean) <= e_max


def test_worst_corner_nominal_supply_is_error_free(table):
    for kind in ("uniform-random", "adversarial"):
        assert run_static(generate(kind, 50_000), WORST_CORNER, 1.2, table).errors == 0


def test_error_rate_nonincreasing_in_supply(table):
    trace = generate("uniform-random", 50_000, seed=2)
    for corner in all_corners():
        rates = [p.error_rate for p in static_curve(trace, corner, table)]
        assert all(a <= b for a, b in zip(rates, rates[1:]))  # curve runs top to floor


def test_static_matches_cyclewise_counting(table):
    trace = generate("per-bit-toggle", 3000, seed=5, params={"p": 0.3})
    g = BusGeometry()
    res = run_static(trace, TYP100, 0.9, table)
    prev, errors = 0, 0
    for w in trace.words.tolist():
        d = max((table.delay[table.corner_index(TYP100), table.v_index(0.9), c.k]
                 for c in classify_transition(prev, w, g) if c.toggled), default=0.0)
        errors += d > 600e-12
        prev = w
    assert res.errors == errors and res.cycles == 3000 + errors


def test_sweep_targets_order(table):
    trace = pseudo_benchmark("pb04-busy", 50_000)
    pts = sweep_static(trace, all_corners(), table)
    by = {}
    for p in pts:
        by.setdefault(p.corner, {})[p.target] = p.gain
    for gains in by.values():
        assert gains[0.0] <= gains[0.02] <= gains[0.05]
    with pytest.raises(ValueError):
        sweep_static(trace, all_corners(), table, (0.03,))


def test_quiet_trace_descends_to_floor(table):
    trace = generate("quiet", 200_000)
    rep = run_dynamic(trace, TYP100, table, SMALL)
    floor = controller_floor(TYP100, table, Deadlines(), SMALL)
    assert rep.errors == 0
    assert [c[2] for c in rep.changes] == list(range(1180, floor - 1, -20))
    assert rep.windows[-1].v_mv == floor


@pytest.mark.parametrize("corner", [TYP100, WORST_CORNER, PvtCorner(Process.FAST, 25.0, 0.1)],
                         ids=lambda c: c.label)
@pytest.mark.parametrize("kind, params", [("per-bit-toggle", {"p": 0.3}), ("uniform-random", {}),
                                          ("two-phase", {"a": "quiet", "b": "adversarial",
                                                         "len_a": 3000, "len_b": 1000})])
def test_fast_engine_matches_reference(table, corner, kind, params):
    trace = generate(kind, 20_000, seed=11, params=params)
    fast = run_dynamic(trace, corner, table, SMALL)
    ref = run_dynamic_cyclewise(trace, corner, table, SMALL)
    assert (fast.cycles, fast.errors, fast.changes) == (ref.cycles, ref.errors, ref.changes)
    assert [(w.cycle, w.v_mv, w.errors) for w in fast.windows] == \
           [(w.cycle, w.v_mv, w.errors) for w in ref.windows]
    assert fast.voltage_cycles == ref.voltage_cycles
    assert fast.energy_total == pytest.approx(ref.energy_total, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.6), st.sampled_from(all_corners()))
def test_fast_engine_matches_reference_randomized(table, seed, p, corner):
    trace = generate("per-bit-toggle", 6000, seed=seed, params={"p": p})
    params = ControllerParams(window_len=200, latency_cycles=60)
    fast = run_dynamic(trace, corner, table, params)
    ref = run_dynamic_cyclewise(trace, corner, table, params)
    assert (fast.cycles, fast.errors, fast.changes) == (ref.cycles, ref.errors, ref.changes)


def test_run_report_invariants(table):
    trace = generate("per-bit-toggle", 300_000, seed=4, params={"p": 0.3})
    rep = run_dynamic(trace, TYP100, table)
    assert rep.cycles == rep.words + rep.errors
    assert rep.avg_error_rate == rep.errors / rep.cycles
    assert rep.energy_gain == pytest.approx(1 - rep.energy_total / rep.energy_baseline)
    for d in rep.decisions:
        if d.command is not VoltageCommand.HOLD:
            assert d.apply_at == d.cycle + 3000
    assert sum(rep.voltage_cycles.values()) == rep.cycles


def test_lowered_floor_can_go_fatal(table):
    corner = PvtCorner(Process.SLOW, 100.0, 0.1)
    trace = generate("two-phase", 600_000, params={"a": "quiet", "b": "adversarial",
                                                   "len_a": 400_000, "len_b": 200_000})
    params = ControllerParams(floor_offset_mv=40)
    with pytest.raises(FatalTimingError):
        run_dynamic(trace, corner, table, params)
    run_dynamic(trace, corner, table)  # enforced floor survives the same trace


def test_suite_totals(table):
    traces = [pseudo_benchmark(n, 40_000) for n in ("pb01-sparse", "pb10-dense")]
    rows, total = run_suite(traces, TYP100, table)
    assert len(rows) == 2
    assert min(r.dvs_gain for r in rows) <= total["dvs_gain"] <= max(r.dvs_gain for r in rows)
    assert all(r.fixed_vs_vdd == rows[0].fixed_vs_vdd for r in rows)


def test_oracle_zero_target_is_zero_error_voltage(table):
    trace = generate("uniform-random", 50_000, seed=9)
    prof = oracle_voltage_profile(trace, TYP100, table, 0.0)
    for i, mv in enumerate(prof.window_mv):
        w = trace.window(i * 10_000, (i + 1) * 10_000)
        assert run_static(w, TYP100, mv / 1000, table).errors == 0
        if mv > table.floor_mv:
            assert run_static(w, TYP100, (mv - 20) / 1000, table).errors > 0


def test_oracle_bimodal_for_two_phase(table):
    trace = generate("two-phase", 200_000, params={"a": "quiet", "b": "adversarial",
                                                   "len_a": 50_000, "len_b": 50_000})
    hist = oracle_voltage_profile(trace, TYP100, table, 0.02).histogram()
    assert len(hist) == 2
    assert min(hist) == table.floor_mv and all(f == pytest.approx(0.5) for f in hist.values())


def test_oracle_is_lowest_feasible_voltage(table):
    trace = generate("per-bit-toggle", 60_000, seed=1, params={"p": 0.3})
    prof = oracle_voltage_profile(trace, TYP100, table, 0.02)
    for i, best in enumerate(prof.window_mv):
        w = trace.window(i * 10_000, (i + 1) * 10_000)
        for mv in table.vdd_mv:
            res = run_static(w, TYP100, int(mv) / 1000, table)
            if res.valid and res.error_rate <= 0.02:
                assert best <= mv
