"""Commanded-intensity to physical-acceleration mapping.

A calibration table maps dimensionless haptic intensity commands (0-1) to
measured peak acceleration at the 230 Hz carrier. No measured values ship
with the package as physical truth; `data/example_calibration.csv` is a
clearly-labeled synthetic table that only demonstrates the schema. Between
measured knots the mapping is piecewise linear, which keeps it monotone
without shape constraints.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

from .errors import PerceptError

CALIBRATION_HEADER = "haptic_intensity,peak_acceleration_m_s2"

CARRIER_FREQUENCY_HZ = 230.0
HAPTIC_SHARPNESS = 1.0


class CalibrationFormatError(PerceptError, ValueError):
    """Unparseable or schema-violating calibration file (reports the row)."""


class NonMonotoneTableError(PerceptError, ValueError):
    """Intensities must strictly increase and accelerations must not decrease."""


class OutOfRangeError(PerceptError, ValueError):
    """Lookup outside the table's intensity span."""


@dataclass(frozen=True)
class CalibrationTable:
    points: tuple  # of (haptic_intensity, peak_acceleration_m_s2)
    carrier_frequency_hz: float = CARRIER_FREQUENCY_HZ
    haptic_sharpness: float = HAPTIC_SHARPNESS

    @property
    def intensity_span(self):
        return self.points[0][0], self.points[-1][0]


def _validate_points(points) -> tuple:
    if len(points) < 2:
        raise CalibrationFormatError(f"need at least 2 points, got {len(points)}")
    for row, (h, a) in enumerate(points, start=2):  # row 1 is the header
        if not 0.0 <= h <= 1.0:
            raise CalibrationFormatError(f"row {row}: haptic_intensity {h} outside [0, 1]")
    for i in range(1, len(points)):
        row = i + 2
        if points[i][0] == points[i - 1][0]:
            raise CalibrationFormatError(
                f"row {row}: duplicate haptic_intensity {points[i][0]}"
            )
        if points[i][0] < points[i - 1][0]:
            raise NonMonotoneTableError(
                f"row {row}: haptic_intensity decreases ({points[i][0]} after {points[i - 1][0]})"
            )
        if points[i][1] < points[i - 1][1]:
            raise NonMonotoneTableError(
                f"row {row}: peak_acceleration decreases ({points[i][1]} after {points[i - 1][1]})"
            )
    return tuple(points)


def load_calibration(source) -> CalibrationTable:
    """Load and validate a two-column calibration CSV (path, file, or text)."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        path = Path(source)
        if not path.exists():
            raise CalibrationFormatError(f"calibration file not found: {path}")
        text = path.read_text()
    lines = [ln.strip() for ln in io.StringIO(text) if ln.strip()]
    if not lines or lines[0].replace(" ", "") != CALIBRATION_HEADER:
        raise CalibrationFormatError(f"row 1: expected header '{CALIBRATION_HEADER}'")
    points = []
    for row, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 2:
            raise CalibrationFormatError(f"row {row}: expected 2 columns, got {len(cells)}")
        try:
            points.append((float(cells[0]), float(cells[1])))
        except ValueError:
            raise CalibrationFormatError(f"row {row}: non-numeric value in {cells}") from None
    return CalibrationTable(points=_validate_points(points))


def make_table(points) -> CalibrationTable:
    """Build a table from in-memory (intensity, acceleration) pairs."""
    return CalibrationTable(points=_validate_points(list(points)))


def intensity_to_acceleration(table: CalibrationTable, level: float) -> float:
    """Piecewise-linear interpolation of peak acceleration at `level`.

    Exact at knots, monotone in between; raises OutOfRangeError outside the
    table's intensity span.
    """
    lo, hi = table.intensity_span
    if not lo <= level <= hi:
        raise OutOfRangeError(f"level {level} outside calibrated span [{lo}, {hi}]")
    points = table.points
    for i in range(1, len(points)):
        h0, a0 = points[i - 1]
        h1, a1 = points[i]
        if level <= h1:
            if level == h0:
                return a0
            if level == h1:
                return a1
            return a0 + (a1 - a0) * (level - h0) / (h1 - h0)
    return points[-1][1]


def acceleration_to_intensity(table: CalibrationTable, acceleration: float) -> float:
    """Inverse lookup; on flat segments returns the lowest matching intensity."""
    a_lo, a_hi = table.points[0][1], table.points[-1][1]
    if not a_lo <= acceleration <= a_hi:
        raise OutOfRangeError(
            f"acceleration {acceleration} outside calibrated span [{a_lo}, {a_hi}]"
        )
    points = table.points
    for i in range(1, len(points)):
        h0, a0 = points[i - 1]
        h1, a1 = points[i]
        if acceleration <= a1:
            if acceleration == a0:
                return h0
            if a1 == a0:
                continue
            return h0 + (h1 - h0) * (acceleration - a0) / (a1 - a0)
    return points[-1][0]
