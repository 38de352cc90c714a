"""Curve sweeps over the coupling grid and their CSV serialization.

Every generated point also assembles the full information report, so the
hierarchy check (classical information <= post-selected information <=
joint maximum) runs as a side effect of curve generation; a violation
aborts the sweep rather than silently emitting bad rows.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .core import optimal_setup, pointer_shift, post_selection_probability
from .errors import EmptyRegion, ZeroPostSelection
from .fisher import fisher_report, region_bounds, sensitivity
from .scenario import resolve_g_mod

CURVE_KINDS = ("shift", "sensitivity", "cfi", "psel", "fd")
CURVE_HEADER = ("g", "phi", "value", "p_d", "region_flag")


@dataclass(frozen=True, eq=False)
class CurveTable:
    """Long-format sweep result: one row per (phi, g) pair, in grid order."""

    kind: str
    g: np.ndarray
    phi: np.ndarray
    value: np.ndarray
    p_d: np.ndarray
    region_flag: tuple

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"kind must be one of {CURVE_KINDS}, got {self.kind!r}")
        for name in ("g", "phi", "value", "p_d"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.g.size
        if not (self.phi.size == self.value.size == self.p_d.size == len(self.region_flag) == n):
            raise ValueError("all columns must have the same length")
        if not all(flag in ("inside", "outside") for flag in self.region_flag):
            raise ValueError("region_flag entries must be 'inside' or 'outside'")

    def __eq__(self, other):
        if not isinstance(other, CurveTable):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.region_flag == other.region_flag
            and all(
                np.array_equal(getattr(self, name), getattr(other, name), equal_nan=True)
                for name in ("g", "phi", "value", "p_d")
            )
        )

    @property
    def n_rows(self):
        return int(self.g.size)

    def rows_for_phi(self, phi_value):
        """Row indices belonging to one sweep angle."""
        return np.nonzero(self.phi == phi_value)[0]


def run_curve(scenario, kind):
    """Evaluate one curve kind on the scenario's g grid for each phi.

    Vanishing post-selection at a grid point is recorded as a NaN value
    with the row kept (flagged by its region column), never as an abort.
    """
    if kind not in CURVE_KINDS:
        raise ValueError(f"kind must be one of {CURVE_KINDS}, got {kind!r}")
    pointer = scenario.pointer()
    grid = scenario.g_grid()
    g_col, phi_col, val_col, p_col, flags = [], [], [], [], []
    for phi in scenario.phi:
        g_mod = resolve_g_mod(scenario, phi)
        try:
            region = region_bounds(
                optimal_setup(pointer, phi, g=0.0, g_M=g_mod), scenario.case
            )
        except EmptyRegion:
            region = None
        for g in grid:
            setup = optimal_setup(pointer, phi, g=float(g), g_M=g_mod)
            p_d = post_selection_probability(setup)
            try:
                report = fisher_report(setup)
                if kind == "psel":
                    value = p_d
                elif kind == "shift":
                    value = pointer_shift(setup)
                elif kind == "sensitivity":
                    value = sensitivity(setup)
                elif kind == "cfi":
                    value = report.cfi
                else:
                    value = report.fd_postselected
            except ZeroPostSelection:
                value = p_d if kind == "psel" else math.nan
            g_col.append(float(g))
            phi_col.append(float(phi))
            val_col.append(float(value))
            p_col.append(float(p_d))
            flags.append("inside" if region is not None and region.contains(g) else "outside")
    return CurveTable(
        kind=kind,
        g=np.array(g_col),
        phi=np.array(phi_col),
        value=np.array(val_col),
        p_d=np.array(p_col),
        region_flag=tuple(flags),
    )


def _format_float(x):
    return format(float(x), ".17g")


def write_curve_csv(table, stream):
    """Write the table as CSV (fixed header, LF line endings, 17-digit floats)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for i in range(table.n_rows):
        writer.writerow(
            (
                _format_float(table.g[i]),
                _format_float(table.phi[i]),
                _format_float(table.value[i]),
                _format_float(table.p_d[i]),
                table.region_flag[i],
            )
        )


def curve_csv_text(table):
    buffer = io.StringIO()
    write_curve_csv(table, buffer)
    return buffer.getvalue()


def read_curve_csv(stream, kind):
    """Parse a curve CSV back into a CurveTable (exact float round-trip)."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(header) != CURVE_HEADER:
        raise ValueError(f"expected header {','.join(CURVE_HEADER)}, got {header}")
    g_col, phi_col, val_col, p_col, flags = [], [], [], [], []
    for row in reader:
        if not row:
            continue
        if len(row) != len(CURVE_HEADER):
            raise ValueError(f"expected {len(CURVE_HEADER)} fields, got {row}")
        g_col.append(float(row[0]))
        phi_col.append(float(row[1]))
        val_col.append(float(row[2]))
        p_col.append(float(row[3]))
        flags.append(row[4])
    return CurveTable(
        kind=kind,
        g=np.array(g_col),
        phi=np.array(phi_col),
        value=np.array(val_col),
        p_d=np.array(p_col),
        region_flag=tuple(flags),
    )
