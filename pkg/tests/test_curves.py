"""Curve generation and CSV round-tripping."""

import io
import math

import numpy as np
import pytest

from ppsm.curves import (
    CURVE_HEADER,
    CurveTable,
    curve_csv_text,
    read_curve_csv,
    run_curve,
    write_curve_csv,
)
from ppsm.scenario import parse_scenario


def _scenario(**overrides):
    base = {"phi": (0.2,), "g_steps": 21}
    base.update(overrides)
    return parse_scenario(overrides=base)


def test_run_curve_bad_kind():
    with pytest.raises(ValueError):
        run_curve(_scenario(), "wiggle")


def test_shift_curve_odd_symmetry():
    # Symmetric pointer, no modulation: the response is an odd function.
    s = _scenario(g_min=-0.5, g_max=0.5, g_steps=21)
    table = run_curve(s, "shift")
    assert table.n_rows == 21
    np.testing.assert_allclose(table.value, -table.value[::-1], atol=1e-12)
    assert table.value[10] == pytest.approx(0.0, abs=1e-14)


def test_shift_curve_center_translates_with_modulation():
    # With modulation k_M the odd symmetry moves to g = -k_M.
    k_m = 0.2
    s = _scenario(g_min=-0.2 - 0.3, g_max=-0.2 + 0.3, g_steps=31, g_mod=k_m)
    table = run_curve(s, "shift")
    center = table.n_rows // 2
    assert table.g[center] == pytest.approx(-k_m, abs=1e-12)
    assert table.value[center] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(table.value, -table.value[::-1], atol=1e-10)


def test_psel_curve_increases_with_angle_balanced():
    s = _scenario(phi=(0.1, 0.4, 0.9), g_min=-1.0, g_max=1.0, g_steps=15)
    table = run_curve(s, "psel")
    by_phi = [table.value[table.rows_for_phi(p)] for p in (0.1, 0.4, 0.9)]
    assert np.all(by_phi[1] > by_phi[0])
    assert np.all(by_phi[2] > by_phi[1])


def test_cfi_curve_peaks_at_minus_modulation():
    k_m = 0.6
    s = _scenario(g_min=-1.5, g_max=0.5, g_steps=81, g_mod=k_m)
    table = run_curve(s, "cfi")
    step = (0.5 - (-1.5)) / 80.0
    peak_g = table.g[int(np.argmax(table.value))]
    assert abs(peak_g - (-k_m)) <= step + 1e-12


def test_unbalanced_walkoff_centers():
    s = parse_scenario(
        preset="time-delay",
        overrides={"phi": (0.2, 0.5, 1.0), "g_steps": 201},
    )
    table = run_curve(s, "shift")
    centers = []
    for phi in s.phi:
        idx = table.rows_for_phi(phi)
        g = table.g[idx]
        v = table.value[idx]
        crossings = np.nonzero(np.diff(np.sign(v)) != 0)[0]
        # the zero crossing nearest the predicted center
        target = phi / (2.0 * 2400.0)
        best = crossings[np.argmin(np.abs(g[crossings] - target))]
        step = g[1] - g[0]
        assert abs(g[best] - target) <= step + 1e-15
        centers.append(target)
    assert centers == sorted(centers)  # walk-off grows with the angle


def test_zero_angle_rows_become_nan_markers():
    # phi = 0 makes the selection orthogonal at g = 0: that row carries a NaN
    # value but the sweep still completes.
    s = _scenario(phi=(0.0,), g_min=-1.0, g_max=1.0, g_steps=5)
    table = run_curve(s, "shift")
    assert table.n_rows == 5
    assert math.isnan(table.value[2])
    assert np.all(np.isfinite(np.delete(table.value, 2)))
    assert table.p_d[2] == pytest.approx(0.0, abs=1e-15)
    # the probability sweep itself needs no conditioning and stays finite
    p_table = run_curve(s, "psel")
    assert np.all(np.isfinite(p_table.value))


def test_region_flags_mark_modulated_center():
    s = _scenario(phi=(0.2,), g_mod="auto", g_min=-0.4, g_max=0.4, g_steps=41)
    table = run_curve(s, "psel")
    flags = np.array(table.region_flag)
    center = table.n_rows // 2
    assert flags[center] == "inside"
    assert flags[0] == "outside" and flags[-1] == "outside"
    # the flagged set is one contiguous block around the operating point
    inside = np.nonzero(flags == "inside")[0]
    assert inside.size >= 1
    assert np.all(np.diff(inside) == 1)


def test_csv_round_trip_exact():
    s = _scenario(phi=(0.0, 0.2), g_min=-1.0, g_max=1.0, g_steps=7)
    table = run_curve(s, "shift")  # includes one NaN row
    text = curve_csv_text(table)
    back = read_curve_csv(io.StringIO(text), kind="shift")
    assert back == table
    assert text == curve_csv_text(back)  # byte-stable through the round trip


def test_csv_byte_identical_regeneration():
    s = _scenario(phi=(0.2,), g_steps=9)
    assert curve_csv_text(run_curve(s, "cfi")) == curve_csv_text(run_curve(s, "cfi"))


def test_read_curve_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        read_curve_csv(io.StringIO("a,b,c\n"), kind="shift")


def test_curve_table_validation():
    g = np.array([0.0, 1.0])
    ones = np.array([1.0, 1.0])
    flags = ("inside", "outside")
    with pytest.raises(ValueError):
        CurveTable(kind="nope", g=g, phi=ones, value=ones, p_d=ones, region_flag=flags)
    with pytest.raises(ValueError):
        CurveTable(kind="shift", g=g, phi=ones[:1], value=ones, p_d=ones, region_flag=flags)
    with pytest.raises(ValueError):
        CurveTable(kind="shift", g=g, phi=ones, value=ones, p_d=ones,
                   region_flag=("inside", "nearby"))
    table = CurveTable(kind="shift", g=g, phi=ones, value=ones, p_d=ones, region_flag=flags)
    assert table.n_rows == 2
    assert tuple(CURVE_HEADER) == ("g", "phi", "value", "p_d", "region_flag")


def test_write_curve_csv_uses_lf_and_17_digits():
    table = CurveTable(
        kind="shift",
        g=np.array([1.0 / 3.0]),
        phi=np.array([0.2]),
        value=np.array([2.0 / 3.0]),
        p_d=np.array([0.5]),
        region_flag=("inside",),
    )
    buffer = io.StringIO()
    write_curve_csv(table, buffer)
    text = buffer.getvalue()
    assert "\r" not in text
    assert "0.33333333333333331" in text
    assert float(text.splitlines()[1].split(",")[2]) == 2.0 / 3.0
