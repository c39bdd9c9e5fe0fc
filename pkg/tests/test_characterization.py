import json
import math

import numpy as np
import pytest

from razorbus.characterization import load_table, lookup, save_table
from razorbus.device import WORST_CORNER, Process, PvtCorner, all_corners
from razorbus.errors import TableError
from razorbus.interconnect import path_delay

TYP100 = PvtCorner(Process.TYPICAL, 100.0, 0.0)


def test_grid_spacing_and_range(table):
    assert table.top_mv == 1200 and table.floor_mv == 600
    assert np.all(np.diff(table.vdd_mv) == -20)


def test_delay_monotone_everywhere(table):
    assert np.all(np.diff(table.delay, axis=1) >= 0)  # vdd descends along axis 1
    assert np.all(np.diff(table.delay, axis=2) > 0)


def test_worst_cell_is_calibrated(table):
    assert 599.4e-12 <= lookup(table, WORST_CORNER, 1.2, 4)[0] <= 600e-12


def test_cells_equal_direct_evaluation(table, rc, geometry):
    for corner in all_corners():
        for mv in (1200, 980, 600):
            for k in range(5):
                assert lookup(table, corner, mv / 1000, k)[0] == path_delay(rc, k, mv / 1000, corner, geometry)


def test_zero_error_knee_typical_hot(table):
    # grid scan: lowest vdd with k=4 delay inside the main deadline
    ci = table.corner_index(TYP100)
    ok = table.delay[ci, :, 4] <= 600e-12
    knee = int(table.vdd_mv[np.flatnonzero(ok)[-1]])
    assert ok[: np.flatnonzero(ok)[-1] + 1].all()
    assert 900 <= knee <= 1000


def test_floor_cells_finite_and_monotone(table):
    for corner in all_corners():
        d_floor = lookup(table, corner, table.floor_mv / 1000, 4)[0]
        assert math.isfinite(d_floor)
        assert lookup(table, corner, (table.floor_mv + 20) / 1000, 4)[0] <= d_floor


def test_off_grid_lookup_raises(table):
    with pytest.raises(TableError):
        lookup(table, TYP100, 0.99, 4)
    with pytest.raises(TableError):
        lookup(table, TYP100, 0.58, 4)


def test_roundtrip_is_bit_exact(table, tmp_path):
    path = save_table(table, tmp_path / "t.json")
    back = load_table(path, table.table_hash)
    assert np.array_equal(back.delay, table.delay)
    assert np.array_equal(back.leakage_energy, table.leakage_energy)
    assert np.array_equal(back.switched_cap, table.switched_cap)
    assert back.corners == table.corners
    ci = table.corner_index(TYP100)
    assert lookup(back, TYP100, 0.9, 2) == lookup(table, TYP100, 0.9, 2)
    assert back.delay[ci].tobytes() == table.delay[ci].tobytes()


def test_missing_table_message_points_to_tables_command(tmp_path):
    with pytest.raises(TableError, match="razorbus tables"):
        load_table(tmp_path / "nope.json")


def test_tampered_header_rejected(table, tmp_path):
    path = save_table(table, tmp_path / "t.json")
    doc = json.loads(path.read_text())
    doc["geometry"]["pitch_um"] = 0.9
    path.write_text(json.dumps(doc))
    with pytest.raises(TableError, match="hash"):
        load_table(path)


def test_expected_hash_mismatch_rejected(table, tmp_path):
    path = save_table(table, tmp_path / "t.json")
    with pytest.raises(TableError, match="different bus"):
        load_table(path, "0" * 16)


def test_switched_cap_linear_in_class(table, rc, geometry):
    caps = table.switched_cap
    step = geometry.stages * rc.c_c
    assert np.allclose(np.diff(caps), step, rtol=1e-12)
    assert caps[0] == pytest.approx(geometry.stages * rc.c_g + table.flop_load)
