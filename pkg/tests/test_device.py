import math

import pytest
from hypothesis import given, strategies as st

from razorbus.device import (DEFAULT_DEVICE, Process, PvtCorner, all_corners, driver_resistance,
                             effective_vdd, leakage_current, lowest_operational_mv, parse_corner,
                             voltage_grid_mv)
from razorbus.errors import NonOperationalVoltage

TYP25 = PvtCorner(Process.TYPICAL, 25.0, 0.0)


def test_twelve_distinct_corners():
    corners = all_corners()
    assert len(corners) == 12 == len(set(corners))


@pytest.mark.parametrize("v, ir, expected", [(1.2, 0.10, 1.08), (1.2, 0.0, 1.2), (0.98, 0.10, 0.882)])
def test_effective_vdd(v, ir, expected):
    assert effective_vdd(v, PvtCorner(Process.TYPICAL, 25.0, ir)) == pytest.approx(expected, rel=1e-12)


def test_resistance_normalization_point():
    assert driver_resistance(1, 1.2, TYP25) == pytest.approx(DEFAULT_DEVICE.r0, rel=1e-12)


def test_resistance_formula_oracle_slow_hot():
    # hand evaluation: r0 * 1.15 * (1 + 0.002*75) * [1.0/(0.65)^1.3] / [1.2/(0.85)^1.3]
    expected = 10e3 * 1.15 * 1.15 * (1.0 / 0.65 ** 1.3) / (1.2 / 0.85 ** 1.3)
    got = driver_resistance(1, 1.0, PvtCorner(Process.SLOW, 100.0, 0.0))
    assert got == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("corner", all_corners(), ids=lambda c: c.label)
def test_resistance_grows_as_supply_drops(corner):
    assert driver_resistance(1, 0.9, corner) > driver_resistance(1, 1.2, corner)


def test_resistance_below_threshold_raises():
    with pytest.raises(NonOperationalVoltage):
        driver_resistance(1, 0.35, TYP25)


def test_leakage_normalization_and_oracle():
    assert leakage_current(1, 1.2, TYP25) == pytest.approx(DEFAULT_DEVICE.leak0, rel=1e-12)
    assert leakage_current(1, 1.0, TYP25) < leakage_current(1, 1.2, TYP25)
    expected = 10e-9 * math.exp(2.5 * (1.1 - 1.2)) * math.exp(0.025 * 75) * 2.5
    assert leakage_current(1, 1.1, PvtCorner(Process.FAST, 100.0, 0.0)) == pytest.approx(expected, rel=1e-12)


def test_grid_is_20mv_descending():
    grid = voltage_grid_mv()
    assert grid[0] == 1200 and grid[-1] == 600 and len(grid) == 31
    assert all(a - b == 20 for a, b in zip(grid, grid[1:]))


def test_lowest_operational_keeps_veff_above_vt():
    mv = lowest_operational_mv()
    assert mv / 1000 * 0.9 > DEFAULT_DEVICE.vt
    assert (mv - 20) / 1000 * 0.9 <= DEFAULT_DEVICE.vt


@pytest.mark.parametrize("text", ["slow,100,ir", "typical,25,no-ir", "fast,100,0.1"])
def test_parse_corner_roundtrip(text):
    c = parse_corner(text)
    assert parse_corner(c.label) == c


@given(st.floats(0.6, 1.2), st.floats(0.6, 1.2), st.sampled_from(all_corners()))
def test_resistance_monotone_in_supply(v1, v2, corner):
    lo, hi = sorted((v1, v2))
    r_lo = driver_resistance(1, effective_vdd(lo, corner), corner)
    r_hi = driver_resistance(1, effective_vdd(hi, corner), corner)
    assert r_lo >= r_hi
