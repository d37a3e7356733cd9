"""Simulated comparator exams: tuning-fork perception time and monofilaments.

The tuning fork is modeled as an exponentially decaying 128 Hz vibration
A(t) = A0 * exp(-t / tau); a participant with amplitude threshold theta feels
it until t* = tau * ln(A0 / theta), and the examiner's watch quantizes that
to whole time-resolution ticks. Strike-to-strike variability enters as an
optional random multiplier on A0 (off by default so the closed form holds
exactly).

The monofilament exam walks the standard 20-piece evaluator set: descend
while sizes are felt, ascend while they are not, and record the minimum size
that was felt. Sizes at or below the multi-touch boundary get three touches;
"not felt" means zero detections across all touches for that size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import PerceptError

TUNING_FORK_FREQUENCY_HZ = 128.0

# Start sizes deemed normal per site class (grams-force).
MONOFILAMENT_START_GF = {"hand": 0.07, "dorsal_foot": 0.07, "plantar_foot": 0.4}

_DEFAULT_SET_RESOURCE = "monofilament_touch_test_20.json"


class MonofilamentSetError(PerceptError, ValueError):
    """A monofilament size table violates an invariant."""


@dataclass(frozen=True)
class TuningForkModel:
    initial_amplitude: float = 100.0
    decay_constant_s: float = 2.0
    frequency_hz: float = TUNING_FORK_FREQUENCY_HZ
    time_resolution_s: float = 1.0
    strike_cv: float = 0.0  # sd of the random strike multiplier on A0

    def validate(self) -> "TuningForkModel":
        if self.initial_amplitude <= 0:
            raise ValueError("initial_amplitude must be > 0")
        if self.decay_constant_s <= 0:
            raise ValueError("decay_constant_s must be > 0")
        if self.time_resolution_s <= 0:
            raise ValueError("time_resolution_s must be > 0")
        if self.strike_cv < 0:
            raise ValueError("strike_cv must be >= 0")
        return self


@dataclass(frozen=True)
class MonofilamentSet:
    sizes: tuple  # grams-force, strictly increasing
    multi_touch_boundary: float = 1.0  # sizes <= boundary get three touches

    def validate(self) -> "MonofilamentSet":
        if len(self.sizes) < 2:
            raise MonofilamentSetError("need at least 2 sizes")
        for i in range(1, len(self.sizes)):
            if self.sizes[i] <= self.sizes[i - 1]:
                raise MonofilamentSetError(
                    f"sizes must strictly increase ({self.sizes[i]} after {self.sizes[i - 1]})"
                )
        if self.sizes[0] < 0.008:
            raise MonofilamentSetError("smallest size below 0.008 gf")
        if self.sizes[-1] > 300.0:
            raise MonofilamentSetError("largest size above 300 gf")
        return self

    def touches_for(self, size: float) -> int:
        return 3 if size <= self.multi_touch_boundary else 1


@dataclass(frozen=True)
class MonofilamentResult:
    """threshold is the minimum felt size in grams-force, or None if nothing was felt."""

    threshold: float | None
    start_size: float
    touch_log: tuple  # of (size, touch_index, detected)


def load_monofilament_set(path=None) -> MonofilamentSet:
    """Load a size table from JSON; defaults to the packaged 20-piece set."""
    if path is None:
        raw = json.loads(
            resources.files("percept.data").joinpath(_DEFAULT_SET_RESOURCE).read_text()
        )
    else:
        raw = json.loads(Path(path).read_text())
    try:
        sizes = tuple(float(s) for s in raw["sizes_grams_force"])
        boundary = float(raw.get("multi_touch_boundary", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise MonofilamentSetError(f"bad monofilament set file: {exc}") from None
    return MonofilamentSet(sizes=sizes, multi_touch_boundary=boundary).validate()


def simulate_tuning_fork_time(model: TuningForkModel, amplitude_threshold: float, rng=None) -> float:
    """Seconds a participant with the given amplitude threshold feels one strike.

    Closed form tau * ln(A0 / theta), clipped below at zero and quantized
    (round half up) to the watch resolution. When strike_cv > 0 an rng must
    be supplied and A0 is scaled by a random strike multiplier.
    """
    model.validate()
    if amplitude_threshold <= 0:
        raise ValueError("amplitude_threshold must be > 0")
    a0 = model.initial_amplitude
    if model.strike_cv > 0:
        if rng is None:
            raise ValueError("strike_cv > 0 requires an rng")
        a0 *= max(0.05, 1.0 + model.strike_cv * rng.gauss(0.0, 1.0))
    if amplitude_threshold >= a0:
        return 0.0
    t = model.decay_constant_s * math.log(a0 / amplitude_threshold)
    res = model.time_resolution_s
    return math.floor(t / res + 0.5) * res


def average_perception_time(times) -> float:
    times = list(times)
    if not times:
        raise ValueError("empty perception-time list")
    return math.fsum(times) / len(times)


def run_monofilament_exam(
    mono_set: MonofilamentSet, feels_force, start_size: float, rng=None
) -> MonofilamentResult:
    """Run the full evaluator-size decision procedure.

    `feels_force(size, rng) -> bool` is queried once per touch. Starting from
    a felt size the exam descends and returns the last size felt before the
    first not-felt size; starting from a not-felt size it ascends and returns
    the first felt size. Returns threshold None if nothing up to the largest
    evaluator was felt.
    """
    mono_set.validate()
    sizes = mono_set.sizes
    if start_size not in sizes:
        raise ValueError(f"start_size {start_size} not in the evaluator set")

    log = []

    def felt_at(size: float) -> bool:
        detected_any = False
        for touch in range(mono_set.touches_for(size)):
            detected = bool(feels_force(size, rng))
            log.append((size, touch, detected))
            if detected:
                detected_any = True
                break
        return detected_any

    idx = sizes.index(start_size)
    if felt_at(start_size):
        while idx > 0:
            if felt_at(sizes[idx - 1]):
                idx -= 1
            else:
                break
        threshold = sizes[idx]
    else:
        threshold = None
        while idx + 1 < len(sizes):
            idx += 1
            if felt_at(sizes[idx]):
                threshold = sizes[idx]
                break

    return MonofilamentResult(threshold=threshold, start_size=start_size, touch_log=tuple(log))
