"""Timed exam runner: scheduling, response classification, trial records.

One session drives one staircase trial. Stimuli are scheduled a random
3-6 s after the previous trial event (the accepted response, or the close of
an unanswered response window); a response counts as a true positive only
within the response window after stimulus onset. Responses before the first
stimulus are false positives; responses landing after a window closed are
ignored_late - both increment the trial's false-positive count and never
reach the staircase.

Time is injected: the simulation advances a virtual clock through the same
`SessionCore` state machine the live HTTP service drives with wall-clock
timestamps, so a recorded trial replays identically either way. All stored
times are quantized to milliseconds so the CSV round-trip is lossless.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .errors import PerceptError
from .observers import DeterministicObserver, sample_response
from .staircase import (
    RUNNING,
    StaircaseConfig,
    StaircaseState,
    TrialThreshold,
    apply_response,
    compute_threshold,
    init_staircase,
)

TRIAL_CSV_HEADER = (
    "participant_id,site,rep,stimulus_index,onset_s,haptic_intensity,detected,reversal,latency_s"
)

TRUE_POSITIVE = "true_positive"
IGNORED_LATE = "ignored_late"
FALSE_POSITIVE = "false_positive"


class SessionFinishedError(PerceptError, RuntimeError):
    """An event was submitted to a session whose trial already ended."""


class TrialCsvError(PerceptError, ValueError):
    """Malformed trial CSV (reports the offending row)."""


class BodySite(enum.Enum):
    """The six measured body locations."""

    H1 = ("hand", "index finger pad")
    H2 = ("hand", "back of index finger")
    H3 = ("hand", "pinky finger pad")
    W1 = ("hand", "dorsal wrist")
    W2 = ("hand", "volar wrist")
    F = ("plantar_foot", "big toe pad")

    def __init__(self, site_class: str, description: str):
        self.site_class = site_class
        self.description = description

    @property
    def code(self) -> str:
        return self.name


ALL_SITES = tuple(BodySite)


@dataclass(frozen=True)
class SessionConfig:
    isi_min_s: float = 3.0
    isi_max_s: float = 6.0
    response_window_s: float = 2.5
    stimulus_duration_s: float = 0.1
    reps_per_site: int = 5
    sites: tuple = ALL_SITES

    def validate(self) -> "SessionConfig":
        if not 0 < self.isi_min_s <= self.isi_max_s:
            raise ValueError("need 0 < isi_min_s <= isi_max_s")
        if not self.response_window_s > self.stimulus_duration_s > 0:
            raise ValueError("need response_window_s > stimulus_duration_s > 0")
        if self.reps_per_site < 1:
            raise ValueError("reps_per_site must be >= 1")
        return self


@dataclass(frozen=True)
class PendingStimulus:
    index: int
    level: float
    onset_s: float
    window_close_s: float
    scheduled_from_s: float


@dataclass(frozen=True)
class TrialRow:
    stimulus_index: int
    onset_s: float
    level: float
    detected: bool
    reversal: bool
    latency_s: Optional[float]


@dataclass(frozen=True)
class TrialRecord:
    participant_id: str
    site: Optional[BodySite]
    rep_index: int
    rows: tuple
    threshold: Optional[TrialThreshold]
    false_positive_count: int


@dataclass(frozen=True)
class SessionEvent:
    timestamp_s: float
    kind: str  # stimulus_onset | response | trial_complete | session_complete
    level: Optional[float] = None


def session_events(record: TrialRecord,
                   config: SessionConfig = SessionConfig()) -> tuple:
    """The trial as an ordered event timeline (timestamps nondecreasing)."""
    events = []
    for r in record.rows:
        events.append(SessionEvent(r.onset_s, "stimulus_onset", level=r.level))
        if r.latency_s is not None:
            events.append(SessionEvent(round(r.onset_s + r.latency_s, 3), "response"))
    events.sort(key=lambda e: e.timestamp_s)
    if record.rows and record.threshold is not None:
        last = record.rows[-1]
        if last.detected and last.latency_s is not None:
            end = round(last.onset_s + last.latency_s, 3)
        else:
            end = round(last.onset_s + config.response_window_s, 3)
        end = max(end, events[-1].timestamp_s)
        events.append(SessionEvent(end, "trial_complete"))
        events.append(SessionEvent(end, "session_complete"))
    return tuple(events)


def schedule_next_stimulus(config: SessionConfig, now: float, rng) -> float:
    """Next onset = now + U[isi_min, isi_max]; ms-quantized, seed-deterministic."""
    return round(now + rng.uniform(config.isi_min_s, config.isi_max_s), 3)


def classify_response(config: SessionConfig, stimulus_onset: float, response_time: float) -> str:
    """Classify one timestamped response against one stimulus onset."""
    if response_time < 0:
        raise ValueError("response_time must be >= 0")
    offset = response_time - stimulus_onset
    if offset < 0:
        return FALSE_POSITIVE
    if offset <= config.response_window_s:
        return TRUE_POSITIVE
    return IGNORED_LATE


class _Row:
    __slots__ = ("stimulus_index", "onset_s", "level", "detected", "reversal", "latency_s")

    def __init__(self, stimulus_index, onset_s, level, detected, reversal, latency_s):
        self.stimulus_index = stimulus_index
        self.onset_s = onset_s
        self.level = level
        self.detected = detected
        self.reversal = reversal
        self.latency_s = latency_s


class SessionCore:
    """State machine for one trial; shared by the simulator and the HTTP service.

    Events are processed in timestamp order: `pending()` schedules the next
    stimulus lazily, `submit_response(t)` classifies a response, and
    `advance_to(t)` closes any response windows that expired by time t.
    """

    def __init__(
        self,
        session_config: SessionConfig,
        staircase_config: StaircaseConfig,
        rng,
        participant_id: str = "",
        site: Optional[BodySite] = None,
        rep_index: int = 0,
        start_time: float = 0.0,
    ):
        self.session_config = session_config.validate()
        self.staircase_config = staircase_config.validate()
        self.participant_id = participant_id
        self.site = site
        self.rep_index = rep_index
        self._rng = rng
        self._staircase: StaircaseState = init_staircase(staircase_config)
        self._rows: list[_Row] = []
        self._false_positives = 0
        self._pending: Optional[PendingStimulus] = None
        self._preonset_latency: Optional[float] = None
        self._last_event_s = round(start_time, 3)

    @property
    def finished(self) -> bool:
        return self._staircase.status != RUNNING

    @property
    def staircase(self) -> StaircaseState:
        return self._staircase

    def pending(self) -> Optional[PendingStimulus]:
        """The scheduled (or newly scheduled) stimulus, or None when finished."""
        if self.finished:
            return None
        if self._pending is None:
            onset = schedule_next_stimulus(self.session_config, self._last_event_s, self._rng)
            self._pending = PendingStimulus(
                index=len(self._rows),
                level=round(self._staircase.current_level, 2),
                onset_s=onset,
                window_close_s=round(onset + self.session_config.response_window_s, 3),
                scheduled_from_s=self._last_event_s,
            )
        return self._pending

    def advance_to(self, t: float) -> None:
        """Close every response window that expires at or before time t."""
        while not self.finished:
            p = self.pending()
            if p.window_close_s <= t:
                self._close_cycle(detected=False, event_time=p.window_close_s,
                                  latency=self._preonset_latency)
            else:
                break

    def submit_response(self, t: float) -> str:
        """Process one timestamped response; returns its classification."""
        if self.finished:
            raise SessionFinishedError("trial already complete")
        if t < self._last_event_s - 1e-9:
            raise ValueError(
                f"response at {t} precedes the last session event at {self._last_event_s}"
            )
        self.advance_to(t)
        if self.finished:
            raise SessionFinishedError("trial completed before this response")
        p = self.pending()
        offset = t - p.onset_s
        if offset < 0:
            last = self._rows[-1] if self._rows else None
            if last is None:
                # before the very first stimulus
                self._false_positives += 1
                if self._preonset_latency is None:
                    self._preonset_latency = round(offset, 3)
                return FALSE_POSITIVE
            late_offset = t - last.onset_s
            if last.detected and late_offset <= self.session_config.response_window_s:
                return TRUE_POSITIVE  # duplicate press in an already-answered window
            self._false_positives += 1
            if last.latency_s is None:
                last.latency_s = round(late_offset, 3)
            return IGNORED_LATE
        if offset <= self.session_config.response_window_s:
            self._close_cycle(detected=True, event_time=t, latency=round(offset, 3))
            return TRUE_POSITIVE
        # advance_to() closed every window that expired by t
        raise AssertionError("unreachable: open window older than t")

    def _close_cycle(self, detected: bool, event_time: float, latency) -> None:
        p = self._pending
        before = len(self._staircase.reversals)
        self._staircase = apply_response(self._staircase, detected)
        self._rows.append(
            _Row(
                stimulus_index=p.index,
                onset_s=p.onset_s,
                level=p.level,
                detected=detected,
                reversal=len(self._staircase.reversals) > before,
                latency_s=latency,
            )
        )
        self._pending = None
        self._preonset_latency = None
        self._last_event_s = round(event_time, 3)

    def record(self) -> TrialRecord:
        """Snapshot of the trial (threshold present once the staircase ends)."""
        threshold = compute_threshold(self._staircase) if self.finished else None
        rows = tuple(
            TrialRow(r.stimulus_index, r.onset_s, r.level, r.detected, r.reversal, r.latency_s)
            for r in self._rows
        )
        return TrialRecord(
            participant_id=self.participant_id,
            site=self.site,
            rep_index=self.rep_index,
            rows=rows,
            threshold=threshold,
            false_positive_count=self._false_positives,
        )


class ObserverResponder:
    """Adapts an observer model to the session responder protocol.

    Called once per stimulus cycle with the pending stimulus; returns the
    absolute response time, or None for no response. A psychometric
    observer's false_positive_rate is spent as one spontaneous press in the
    pre-onset gap, which then consumes that cycle's response.
    """

    def __init__(self, observer, rng, latency_s: float = 0.5):
        self.observer = observer
        self.rng = rng
        self.latency_s = latency_s

    def respond(self, stim: PendingStimulus) -> Optional[float]:
        if isinstance(self.observer, DeterministicObserver):
            detected = self.observer.detects(stim.level)
        else:
            fp_rate = self.observer.false_positive_rate
            if fp_rate > 0 and self.rng.random() < fp_rate:
                gap = stim.onset_s - stim.scheduled_from_s
                return round(stim.scheduled_from_s + self.rng.random() * gap, 3)
            detected = sample_response(self.observer, stim.level, self.rng)
        if not detected:
            return None
        return round(stim.onset_s + self.latency_s, 3)


def run_trial(
    session_config: SessionConfig,
    staircase_config: StaircaseConfig,
    responder,
    rng,
    participant_id: str = "",
    site: Optional[BodySite] = None,
    rep_index: int = 0,
) -> TrialRecord:
    """Run one complete trial against a responder; pure given (configs, rng, responder)."""
    core = SessionCore(
        session_config,
        staircase_config,
        rng,
        participant_id=participant_id,
        site=site,
        rep_index=rep_index,
    )
    asked = -1
    while not core.finished:
        p = core.pending()
        if p.index != asked:
            asked = p.index
            t = responder.respond(p)
            if t is not None:
                try:
                    core.submit_response(t)
                except SessionFinishedError:
                    pass  # the trial saturated while this response was in flight
                continue
        core.advance_to(p.window_close_s)
    return core.record()


def _format_latency(latency) -> str:
    return "" if latency is None else f"{latency:.3f}"


def export_trial_csv(record: TrialRecord) -> bytes:
    """Deterministic byte-exact CSV (LF endings, 2-digit intensities)."""
    lines = [TRIAL_CSV_HEADER]
    site_code = record.site.code if record.site is not None else ""
    for r in record.rows:
        lines.append(
            f"{record.participant_id},{site_code},{record.rep_index},{r.stimulus_index},"
            f"{r.onset_s:.3f},{r.level:.2f},{str(r.detected).lower()},"
            f"{str(r.reversal).lower()},{_format_latency(r.latency_s)}"
        )
    return ("\n".join(lines) + "\n").encode("ascii")


def _parse_bool(cell: str, row: int) -> bool:
    if cell == "true":
        return True
    if cell == "false":
        return False
    raise TrialCsvError(f"row {row}: expected true/false, got {cell!r}")


def import_trial_csv(
    data,
    session_config: SessionConfig = SessionConfig(),
    staircase_config: StaircaseConfig = StaircaseConfig(),
) -> TrialRecord:
    """Rebuild a TrialRecord from its CSV bytes.

    The threshold and reversal flags are recomputed by replaying the detected
    flags through the staircase; a CSV whose reversal column disagrees with
    the replay is rejected. The false-positive count is recovered from
    latencies outside [0, response_window], which matches the live count
    whenever each cycle held at most one non-detecting response.
    """
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != TRIAL_CSV_HEADER:
        raise TrialCsvError("row 1: bad or missing header")
    if len(lines) == 1:
        return TrialRecord(
            participant_id="", site=None, rep_index=0, rows=(), threshold=None,
            false_positive_count=0,
        )

    participant_id = None
    site = None
    rep_index = None
    rows = []
    state = init_staircase(staircase_config)
    false_positives = 0
    window = session_config.response_window_s
    for rownum, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 9:
            raise TrialCsvError(f"row {rownum}: expected 9 columns, got {len(cells)}")
        pid, site_code, rep, idx, onset, level, detected, reversal, latency = cells
        if participant_id is None:
            participant_id = pid
            site = BodySite[site_code] if site_code else None
            rep_index = int(rep)
        elif pid != participant_id or int(rep) != rep_index:
            raise TrialCsvError(f"row {rownum}: mixed participant/rep in one trial file")
        try:
            detected_b = _parse_bool(detected, rownum)
            reversal_b = _parse_bool(reversal, rownum)
            onset_f = float(onset)
            level_f = float(level)
            latency_f = float(latency) if latency else None
        except ValueError as exc:
            raise TrialCsvError(f"row {rownum}: {exc}") from None
        if not state.running:
            raise TrialCsvError(f"row {rownum}: rows continue past staircase completion")
        if abs(round(state.current_level, 2) - level_f) > 1e-9:
            raise TrialCsvError(
                f"row {rownum}: level {level_f} does not replay (expected "
                f"{round(state.current_level, 2)})"
            )
        before = len(state.reversals)
        state = apply_response(state, detected_b)
        if (len(state.reversals) > before) != reversal_b:
            raise TrialCsvError(f"row {rownum}: reversal flag does not replay")
        if latency_f is not None and not 0 <= latency_f <= window:
            false_positives += 1
        rows.append(
            TrialRow(int(idx), onset_f, level_f, detected_b, reversal_b, latency_f)
        )
    threshold = compute_threshold(state) if not state.running else None
    return TrialRecord(
        participant_id=participant_id,
        site=site,
        rep_index=rep_index,
        rows=tuple(rows),
        threshold=threshold,
        false_positive_count=false_positives,
    )
