"""One-up/one-down staircase state machine for vibration perception thresholds.

The staircase starts at a low stimulus intensity and raises the level after
every miss, lowers it after every detection. A reversal is logged whenever the
direction flips; its value is the mean of the level that triggered the flip
and the level presented just before it. The run completes after a target
number of reversals, and the trial threshold is the mean of the reversal
values. Three consecutive misses at the maximum level saturate the run and
the threshold is recorded as NaN.

Levels are tracked internally as integer multiples of the step size, so a
long run cannot drift off the 0.05 grid; floats are produced only on output.
All state objects are immutable values: `apply_response` returns a new state,
and replaying a recorded history reproduces the final state exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PerceptError

ASCENDING = "ascending"
DESCENDING = "descending"

RUNNING = "running"
COMPLETE = "complete"
SATURATED = "saturated"

_GRID_TOL = 1e-9


class InvalidConfigError(PerceptError, ValueError):
    """A staircase configuration violates an invariant. Names the field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class StaircaseFinishedError(PerceptError, RuntimeError):
    """A response was applied to a complete or saturated staircase."""


class StaircaseIncompleteError(PerceptError, RuntimeError):
    """A threshold was requested from a still-running staircase."""


def _step_index(level: float, step_size: float, field: str) -> int:
    k = round(level / step_size)
    if abs(k * step_size - level) > _GRID_TOL:
        raise InvalidConfigError(field, f"{level} is not a multiple of step_size {step_size}")
    return k


@dataclass(frozen=True)
class StaircaseConfig:
    """Parameters of the adaptive procedure (defaults match the smartphone exam)."""

    initial_level: float = 0.05
    step_size: float = 0.05
    max_level: float = 1.0
    min_level: float = 0.05
    target_reversals: int = 8
    ceiling_misses_for_nan: int = 3

    def validate(self) -> "StaircaseConfig":
        if self.step_size <= 0:
            raise InvalidConfigError("step_size", "must be > 0")
        if not self.min_level > 0:
            raise InvalidConfigError("min_level", "must be > 0")
        if not self.min_level <= self.initial_level:
            raise InvalidConfigError("initial_level", "must be >= min_level")
        if not self.initial_level <= self.max_level:
            raise InvalidConfigError("initial_level", "must be <= max_level")
        if not self.max_level <= 1.0:
            raise InvalidConfigError("max_level", "must be <= 1.0")
        if self.target_reversals < 2:
            raise InvalidConfigError("target_reversals", "must be >= 2")
        if self.ceiling_misses_for_nan < 1:
            raise InvalidConfigError("ceiling_misses_for_nan", "must be >= 1")
        for field in ("min_level", "initial_level", "max_level"):
            _step_index(getattr(self, field), self.step_size, field)
        return self

    @property
    def min_step(self) -> int:
        return _step_index(self.min_level, self.step_size, "min_level")

    @property
    def max_step(self) -> int:
        return _step_index(self.max_level, self.step_size, "max_level")

    @property
    def initial_step(self) -> int:
        return _step_index(self.initial_level, self.step_size, "initial_level")

    def level_of(self, step: int) -> float:
        return step * self.step_size


@dataclass(frozen=True)
class ReversalPoint:
    """A direction flip: value is the mean of the flipping and preceding levels."""

    value: float
    triggering_index: int


@dataclass(frozen=True)
class StaircaseState:
    config: StaircaseConfig
    current_step: int
    direction: str
    history: tuple  # of (level, detected) pairs
    reversals: tuple  # of ReversalPoint
    consecutive_ceiling_misses: int
    status: str

    @property
    def current_level(self) -> float:
        return self.config.level_of(self.current_step)

    @property
    def running(self) -> bool:
        return self.status == RUNNING


@dataclass(frozen=True)
class TrialThreshold:
    """Outcome of one staircase run: mean reversal value, or NaN if saturated."""

    value: float
    reversal_values: tuple
    saturated: bool


@dataclass(frozen=True)
class SiteThreshold:
    """Aggregate of repeated trials at one body site (NaN trials excluded)."""

    value: float
    nan_count: int
    n_trials: int


def init_staircase(config: StaircaseConfig) -> StaircaseState:
    """Start a fresh staircase at the configured initial level, ascending."""
    config.validate()
    return StaircaseState(
        config=config,
        current_step=config.initial_step,
        direction=ASCENDING,
        history=(),
        reversals=(),
        consecutive_ceiling_misses=0,
        status=RUNNING,
    )


def apply_response(state: StaircaseState, detected: bool) -> StaircaseState:
    """Advance the staircase by one detect/no-detect response.

    A detection while ascending or a miss while descending records a reversal
    and flips the direction. The level then moves one step down after a
    detection, one step up after a miss, clamped to [min_level, max_level].
    A miss at the maximum level counts toward ceiling saturation; any
    detection resets that counter.
    """
    if state.status != RUNNING:
        raise StaircaseFinishedError(f"staircase already {state.status}")

    config = state.config
    level = state.current_level
    index = len(state.history)
    history = state.history + ((level, detected),)

    flipped = detected if state.direction == ASCENDING else not detected
    reversals = state.reversals
    if flipped:
        if index == 0:
            value = level  # no prior response; the level itself stands in
        else:
            value = (level + state.history[index - 1][0]) / 2
        reversals = reversals + (ReversalPoint(value=value, triggering_index=index),)

    if detected:
        misses = 0
    elif state.current_step == config.max_step:
        misses = state.consecutive_ceiling_misses + 1
    else:
        misses = state.consecutive_ceiling_misses

    if len(reversals) == config.target_reversals:
        status = COMPLETE
    elif misses >= config.ceiling_misses_for_nan:
        status = SATURATED
    else:
        status = RUNNING

    next_step = state.current_step + (-1 if detected else 1)
    next_step = min(max(next_step, config.min_step), config.max_step)

    return StaircaseState(
        config=config,
        current_step=next_step,
        direction=DESCENDING if detected else ASCENDING,
        history=history,
        reversals=reversals,
        consecutive_ceiling_misses=misses,
        status=status,
    )


def compute_threshold(state: StaircaseState) -> TrialThreshold:
    """Mean of the reversal values for a finished run; NaN when saturated."""
    if state.status == RUNNING:
        raise StaircaseIncompleteError("staircase still running")
    values = tuple(r.value for r in state.reversals)
    if state.status == SATURATED:
        return TrialThreshold(value=math.nan, reversal_values=values, saturated=True)
    return TrialThreshold(
        value=math.fsum(values) / len(values), reversal_values=values, saturated=False
    )


def aggregate_site_threshold(trials) -> SiteThreshold:
    """Average the non-NaN trial thresholds collected at one body site."""
    trials = list(trials)
    if not trials:
        raise ValueError("empty trial list")
    kept = [t.value for t in trials if not math.isnan(t.value)]
    nan_count = len(trials) - len(kept)
    if not kept:
        return SiteThreshold(value=math.nan, nan_count=nan_count, n_trials=len(trials))
    return SiteThreshold(
        value=math.fsum(kept) / len(kept), nan_count=nan_count, n_trials=len(trials)
    )


def run_staircase(config: StaircaseConfig, respond) -> StaircaseState:
    """Drive a staircase to completion with `respond(level) -> bool`."""
    state = init_staircase(config)
    while state.running:
        state = apply_response(state, respond(state.current_level))
    return state
