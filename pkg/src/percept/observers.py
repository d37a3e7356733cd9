"""Simulated participants with known psychometric ground truth.

These observers are the oracles for staircase convergence and for virtual
studies: a scaled logistic with guess and lapse rates, and a hard-threshold
deterministic observer whose staircase trace can be checked step for step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import PerceptError


class ObserverParameterError(PerceptError, ValueError):
    """An observer parameter set violates an invariant."""


class UnattainableLevelError(PerceptError, ValueError):
    """The requested performance level lies outside the observer's range."""


@dataclass(frozen=True)
class PsychometricObserver:
    """Detection probability p(I) = guess + (1 - guess - lapse) * sigmoid((I - alpha) / beta).

    alpha is the midpoint of the scaled sigmoid, beta its spread. guess_rate
    lifts the lower asymptote, lapse_rate lowers the upper one. Nominal ranges
    keep both below 0.5; construction only enforces guess + lapse < 1 so that
    out-of-range observers can still be built to exercise error paths.
    """

    alpha: float
    beta: float
    guess_rate: float = 0.0
    lapse_rate: float = 0.0
    false_positive_rate: float = 0.0

    def validate(self) -> "PsychometricObserver":
        if self.beta <= 0:
            raise ObserverParameterError("beta must be > 0")
        if not 0 <= self.guess_rate < 1:
            raise ObserverParameterError("guess_rate must be in [0, 1)")
        if not 0 <= self.lapse_rate < 1:
            raise ObserverParameterError("lapse_rate must be in [0, 1)")
        if self.guess_rate + self.lapse_rate >= 1:
            raise ObserverParameterError("guess_rate + lapse_rate must be < 1")
        if not 0 <= self.false_positive_rate < 1:
            raise ObserverParameterError("false_positive_rate must be in [0, 1)")
        return self


@dataclass(frozen=True)
class DeterministicObserver:
    """Hard-threshold observer: detects exactly when level >= hard_threshold."""

    hard_threshold: float

    def detects(self, level: float) -> bool:
        return level >= self.hard_threshold


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def detect_probability(observer: PsychometricObserver, level: float) -> float:
    """Probability that `observer` reports detecting a stimulus at `level`."""
    core = _sigmoid((level - observer.alpha) / observer.beta)
    return observer.guess_rate + (1.0 - observer.guess_rate - observer.lapse_rate) * core


def sample_response(observer: PsychometricObserver, level: float, rng) -> bool:
    """One Bernoulli detection draw; deterministic given the rng state."""
    return rng.random() < detect_probability(observer, level)


def fifty_percent_point(observer: PsychometricObserver) -> float:
    """Stimulus level at which detection probability is exactly 0.5.

    Closed-form logistic inversion: I* = alpha + beta * ln((0.5 - guess) / (0.5 - lapse)).
    Raises UnattainableLevelError when 0.5 is outside (guess, 1 - lapse).
    """
    if observer.guess_rate >= 0.5 or observer.lapse_rate >= 0.5:
        raise UnattainableLevelError(
            f"0.5 not in ({observer.guess_rate}, {1 - observer.lapse_rate})"
        )
    return observer.alpha + observer.beta * math.log(
        (0.5 - observer.guess_rate) / (0.5 - observer.lapse_rate)
    )


_OBSERVER_KEYS = {"alpha", "beta", "guess", "lapse", "false_positive_rate"}


def load_observer(path) -> PsychometricObserver:
    """Read observer parameters from a JSON file (alpha/beta/guess/lapse/false_positive_rate)."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ObserverParameterError("observer file must hold a JSON object")
    unknown = set(raw) - _OBSERVER_KEYS
    if unknown:
        raise ObserverParameterError(f"unknown observer fields: {sorted(unknown)}")
    for key in ("alpha", "beta"):
        if key not in raw:
            raise ObserverParameterError(f"missing observer field: {key}")
    return PsychometricObserver(
        alpha=float(raw["alpha"]),
        beta=float(raw["beta"]),
        guess_rate=float(raw.get("guess", 0.0)),
        lapse_rate=float(raw.get("lapse", 0.0)),
        false_positive_rate=float(raw.get("false_positive_rate", 0.0)),
    ).validate()


def dump_observer(observer: PsychometricObserver, path) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "alpha": observer.alpha,
                "beta": observer.beta,
                "guess": observer.guess_rate,
                "lapse": observer.lapse_rate,
                "false_positive_rate": observer.false_positive_rate,
            },
            indent=2,
        )
        + "\n"
    )
