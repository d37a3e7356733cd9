"""Virtual three-modality study: cohort generation, exclusions, analysis.

A cohort spec holds per (age group, site) generator parameters: smartphone
observer midpoints in haptic-intensity units, latent tuning-fork perception
times in seconds (converted to amplitude thresholds through the decay model),
and latent monofilament force thresholds in log grams-force. Each simulated
participant then takes the full exam battery - five staircase trials per
site, five tuning-fork strikes per site, one monofilament exam per site -
and the analysis pipeline applies the exclusion rules and produces the
report: group summaries, the fixed comparison battery (3 site + 6 age), and
the 3 + 3 cross-modality correlations.

Every stochastic step draws from its own stream derived from the master seed
and a stable key (participant, site, modality, rep), so measurement values
do not depend on exam ordering and reruns are byte-identical.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .clinical import (
    MONOFILAMENT_START_GF,
    MonofilamentSet,
    TuningForkModel,
    average_perception_time,
    load_monofilament_set,
    run_monofilament_exam,
    simulate_tuning_fork_time,
)
from .errors import PerceptError
from .observers import PsychometricObserver
from .session import BodySite, ObserverResponder, SessionConfig, run_trial
from .staircase import StaircaseConfig, aggregate_site_threshold

MODALITIES = ("smartphone", "tuning_fork", "monofilament")
AGE_GROUPS = ("younger", "older")
UNITS = {"smartphone": "haptic_intensity", "tuning_fork": "seconds", "monofilament": "grams_force"}
CONTINUOUS_MODALITIES = ("smartphone", "tuning_fork")

MEASUREMENT_CSV_HEADER = (
    "participant_id,age_group,site,modality,value,unit,excluded,exclusion_reason"
)

PAPER_CALIBRATED_RESOURCE = "paper_calibrated.json"

# Alpha draws are clamped to keep simulated observers on the staircase grid's
# usable span; distortion of the group means is negligible for trend work.
_ALPHA_CLAMP = (0.06, 0.95)
_FORK_TIME_CLAMP = (0.0, 12.0)
_MONO_CLAMP_GF = (0.005, 400.0)


class CohortSpecError(PerceptError, ValueError):
    """A cohort spec file is malformed or violates an invariant."""


def rng_for(seed: int, *parts) -> random.Random:
    """Independent deterministic stream for a (seed, key...) tuple."""
    return random.Random(f"{seed}|" + "|".join(str(p) for p in parts))


@dataclass(frozen=True)
class SiteGenerator:
    smartphone_alpha: tuple  # (mean, sd)
    tuning_fork_time_s: tuple
    monofilament_log_gf: tuple


@dataclass(frozen=True)
class CohortSpec:
    n_younger: int
    n_older: int
    site_params: dict  # (age_group, site_code) -> SiteGenerator
    sites: tuple
    observer_beta: float = 0.02
    observer_guess: float = 0.0
    observer_lapse: float = 0.0
    fp_rate_normal: float = 0.005
    fp_rate_high: float = 0.35
    n_high_fp: dict = field(default_factory=lambda: {"younger": 0, "older": 0})
    n_equipment_change: dict = field(default_factory=lambda: {"younger": 0, "older": 0})
    responder_latency_s: float = 0.5
    fork_model: TuningForkModel = TuningForkModel(strike_cv=0.1)
    # volar-wrist confound: phone vibrations reaching the fingertips make W2
    # smartphone thresholds look hand-like; off by default
    w2_leakage_discount: float = 0.0
    seed: Optional[int] = None
    name: str = "cohort"

    def validate(self) -> "CohortSpec":
        if self.n_younger < 0 or self.n_older < 0:
            raise CohortSpecError("cohort counts must be >= 0")
        for group in AGE_GROUPS:
            if self.n_high_fp.get(group, 0) + self.n_equipment_change.get(group, 0) > (
                self.n_younger if group == "younger" else self.n_older
            ):
                raise CohortSpecError(f"more flagged than generated participants ({group})")
        if not 0 <= self.w2_leakage_discount < 1:
            raise CohortSpecError("w2_leakage_discount must be in [0, 1)")
        for (group, site), gen in self.site_params.items():
            for fname in ("smartphone_alpha", "tuning_fork_time_s", "monofilament_log_gf"):
                mean, sd = getattr(gen, fname)
                if sd < 0:
                    raise CohortSpecError(f"{group}/{site}/{fname}: sd must be >= 0")
        for site in self.sites:
            for group in AGE_GROUPS:
                if (group, site) not in self.site_params:
                    raise CohortSpecError(f"missing generator parameters for {group}/{site}")
        return self


def load_cohort_spec(path=None) -> CohortSpec:
    """Read a cohort spec JSON; defaults to the packaged calibrated spec."""
    if path is None:
        text = resources.files("percept.data").joinpath(PAPER_CALIBRATED_RESOURCE).read_text()
        label = PAPER_CALIBRATED_RESOURCE
    else:
        p = Path(path)
        if not p.exists():
            raise CohortSpecError(f"cohort spec not found: {p}")
        text = p.read_text()
        label = str(p)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CohortSpecError(f"{label}: invalid JSON at line {exc.lineno}: {exc.msg}") from None

    try:
        sites = tuple(raw["sites"].keys())
        site_params = {}
        for site, groups in raw["sites"].items():
            if site not in BodySite.__members__:
                raise CohortSpecError(f"{label}: unknown site code {site!r}")
            for group in AGE_GROUPS:
                g = groups[group]
                site_params[(group, site)] = SiteGenerator(
                    smartphone_alpha=tuple(float(v) for v in g["smartphone_alpha"]),
                    tuning_fork_time_s=tuple(float(v) for v in g["tuning_fork_time_s"]),
                    monofilament_log_gf=tuple(float(v) for v in g["monofilament_log_gf"]),
                )
        observer = raw.get("observer", {})
        fp = raw.get("false_positive_rate", {})
        fork = raw.get("tuning_fork", {})
        spec = CohortSpec(
            n_younger=int(raw["n_younger"]),
            n_older=int(raw["n_older"]),
            site_params=site_params,
            sites=sites,
            observer_beta=float(observer.get("beta", 0.02)),
            observer_guess=float(observer.get("guess", 0.0)),
            observer_lapse=float(observer.get("lapse", 0.0)),
            fp_rate_normal=float(fp.get("normal", 0.005)),
            fp_rate_high=float(fp.get("high", 0.35)),
            n_high_fp={g: int(v) for g, v in raw.get("n_high_fp", {}).items()},
            n_equipment_change={
                g: int(v) for g, v in raw.get("n_equipment_change", {}).items()
            },
            responder_latency_s=float(raw.get("responder_latency_s", 0.5)),
            w2_leakage_discount=float(raw.get("w2_leakage_discount", 0.0)),
            fork_model=TuningForkModel(
                initial_amplitude=float(fork.get("initial_amplitude", 100.0)),
                decay_constant_s=float(fork.get("decay_constant_s", 2.0)),
                time_resolution_s=float(fork.get("time_resolution_s", 1.0)),
                strike_cv=float(fork.get("strike_cv", 0.1)),
            ),
            seed=int(raw["seed"]) if "seed" in raw else None,
            name=str(raw.get("name", "cohort")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CohortSpecError):
            raise
        raise CohortSpecError(f"{label}: missing or malformed field: {exc}") from None
    return spec.validate()


@dataclass(frozen=True)
class Participant:
    participant_id: str
    age_group: str
    smartphone_alpha: dict  # site -> haptic intensity
    fork_threshold: dict  # site -> amplitude units
    mono_threshold_gf: dict  # site -> latent grams-force
    false_positive_rate: float
    equipment_change: bool


def _clamp(v, lo, hi):
    return min(max(v, lo), hi)


def generate_cohort(spec: CohortSpec, rng) -> tuple:
    """Draw the simulated participants; deterministic given (spec, rng state)."""
    spec.validate()
    participants = []
    for group, count, prefix in (
        ("younger", spec.n_younger, "Y"),
        ("older", spec.n_older, "O"),
    ):
        n_high = spec.n_high_fp.get(group, 0)
        n_equip = spec.n_equipment_change.get(group, 0)
        for i in range(count):
            alphas, forks, monos = {}, {}, {}
            for site in spec.sites:
                gen = spec.site_params[(group, site)]
                a_mean, a_sd = gen.smartphone_alpha
                alpha = _clamp(rng.gauss(a_mean, a_sd), *_ALPHA_CLAMP)
                if site == "W2" and spec.w2_leakage_discount > 0:
                    alpha = _clamp(alpha * (1 - spec.w2_leakage_discount), *_ALPHA_CLAMP)
                alphas[site] = alpha
                t_mean, t_sd = gen.tuning_fork_time_s
                latent_t = _clamp(rng.gauss(t_mean, t_sd), *_FORK_TIME_CLAMP)
                forks[site] = spec.fork_model.initial_amplitude * math.exp(
                    -latent_t / spec.fork_model.decay_constant_s
                )
                m_mean, m_sd = gen.monofilament_log_gf
                monos[site] = _clamp(math.exp(rng.gauss(m_mean, m_sd)), *_MONO_CLAMP_GF)
            participants.append(
                Participant(
                    participant_id=f"{prefix}{i + 1:03d}",
                    age_group=group,
                    smartphone_alpha=alphas,
                    fork_threshold=forks,
                    mono_threshold_gf=monos,
                    false_positive_rate=(
                        spec.fp_rate_high if i < n_high else spec.fp_rate_normal
                    ),
                    equipment_change=n_high <= i < n_high + n_equip,
                )
            )
    return tuple(participants)


@dataclass
class ParticipantLog:
    participant_id: str
    age_group: str
    equipment_change: bool
    fork_false_positives: int = 0
    mono_false_positives: int = 0
    smartphone_false_positives: int = 0
    orders: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SiteMeasurement:
    participant_id: str
    age_group: str
    site: str
    modality: str
    value: float  # NaN when the exam saturated / nothing was felt
    unit: str
    excluded: bool = False
    exclusion_reason: str = ""


@dataclass(frozen=True)
class ExclusionRule:
    max_false_positives: int = 3
    equipment_change_flag: bool = True

    def validate(self) -> "ExclusionRule":
        if self.max_false_positives < 0:
            raise ValueError("max_false_positives must be >= 0")
        return self


@dataclass(frozen=True)
class StudyRun:
    measurements: tuple
    logs: dict  # participant_id -> ParticipantLog
    seed: int


def _shuffled(rng, items):
    items = list(items)
    rng.shuffle(items)
    return items


def run_virtual_study(
    cohort,
    seed: int,
    session_config: Optional[SessionConfig] = None,
    staircase_config: Optional[StaircaseConfig] = None,
    fork_model: Optional[TuningForkModel] = None,
    mono_set: Optional[MonofilamentSet] = None,
    spec: Optional[CohortSpec] = None,
    sites: Optional[tuple] = None,
) -> StudyRun:
    """Simulate the full exam battery for every participant.

    Exam orderings are randomized and logged, but each measurement draws from
    a stream keyed by (participant, modality, site, rep), so order never
    changes any value - only the log.
    """
    session_config = (session_config or SessionConfig()).validate()
    staircase_config = (staircase_config or StaircaseConfig()).validate()
    fork_model = (fork_model or (spec.fork_model if spec else TuningForkModel(strike_cv=0.1))).validate()
    mono_set = (mono_set or load_monofilament_set()).validate()
    latency = spec.responder_latency_s if spec else 0.5
    if sites is None:
        sites = spec.sites if spec else tuple(s.code for s in session_config.sites)

    measurements = []
    logs = {}
    for p in cohort:
        log = ParticipantLog(
            participant_id=p.participant_id,
            age_group=p.age_group,
            equipment_change=p.equipment_change,
        )
        order_rng = rng_for(seed, p.participant_id, "orders")
        log.orders = {
            "sessions": _shuffled(order_rng, ["clinical", "smartphone"]),
            "clinical_exams": _shuffled(order_rng, ["monofilament", "tuning_fork"]),
            "sites_smartphone": _shuffled(order_rng, sites),
            "sites_tuning_fork": _shuffled(order_rng, sites),
            "sites_monofilament": _shuffled(order_rng, sites),
        }

        for site in sites:
            observer = PsychometricObserver(
                alpha=p.smartphone_alpha[site],
                beta=spec.observer_beta if spec else 0.02,
                guess_rate=spec.observer_guess if spec else 0.0,
                lapse_rate=spec.observer_lapse if spec else 0.0,
                false_positive_rate=p.false_positive_rate,
            )
            thresholds = []
            for rep in range(session_config.reps_per_site):
                rng = rng_for(seed, p.participant_id, "smartphone", site, rep)
                record = run_trial(
                    session_config,
                    staircase_config,
                    ObserverResponder(observer, rng, latency_s=latency),
                    rng,
                    participant_id=p.participant_id,
                    site=BodySite[site],
                    rep_index=rep,
                )
                thresholds.append(record.threshold)
                log.smartphone_false_positives += record.false_positive_count
            agg = aggregate_site_threshold(thresholds)
            measurements.append(
                _measurement(p, site, "smartphone", agg.value)
            )

            fork_rng = rng_for(seed, p.participant_id, "tuning_fork", site)
            times = []
            for _ in range(5):
                times.append(
                    simulate_tuning_fork_time(fork_model, p.fork_threshold[site], fork_rng)
                )
                if fork_rng.random() < p.false_positive_rate:
                    log.fork_false_positives += 1
            measurements.append(
                _measurement(p, site, "tuning_fork", average_perception_time(times))
            )

            mono_rng = rng_for(seed, p.participant_id, "monofilament", site)
            latent = p.mono_threshold_gf[site]
            result = run_monofilament_exam(
                mono_set,
                lambda size, _rng, latent=latent: size >= latent,
                MONOFILAMENT_START_GF[BodySite[site].site_class],
                mono_rng,
            )
            for _ in result.touch_log:
                if mono_rng.random() < p.false_positive_rate:
                    log.mono_false_positives += 1
            value = result.threshold if result.threshold is not None else math.nan
            measurements.append(_measurement(p, site, "monofilament", value))

        logs[p.participant_id] = log
    return StudyRun(measurements=tuple(measurements), logs=logs, seed=seed)


def _measurement(p, site, modality, value) -> SiteMeasurement:
    return SiteMeasurement(
        participant_id=p.participant_id,
        age_group=p.age_group,
        site=site,
        modality=modality,
        value=value if math.isnan(value) else round(value, 6),
        unit=UNITS[modality],
    )


def exclusion_reasons(rule: ExclusionRule, logs) -> dict:
    """participant_id -> reason for every participant the rule removes."""
    rule.validate()
    reasons = {}
    for pid, log in logs.items():
        if rule.equipment_change_flag and log.equipment_change:
            reasons[pid] = "equipment_change"
        elif max(log.fork_false_positives, log.mono_false_positives) > rule.max_false_positives:
            reasons[pid] = (
                f"false_positives:tuning_fork={log.fork_false_positives};"
                f"monofilament={log.mono_false_positives}"
            )
    return reasons


def flag_measurements(measurements, rule: ExclusionRule, logs) -> list:
    """All measurements in original order with exclusion flags applied."""
    reasons = exclusion_reasons(rule, logs)
    return [
        replace(m, excluded=True, exclusion_reason=reasons[m.participant_id])
        if m.participant_id in reasons
        else replace(m, excluded=False, exclusion_reason="")
        for m in measurements
    ]


def apply_exclusions(measurements, rule: ExclusionRule, logs) -> tuple:
    """Split measurements into (retained, excluded); whole participants only."""
    flagged = flag_measurements(measurements, rule, logs)
    retained = [m for m in flagged if not m.excluded]
    excluded = [m for m in flagged if m.excluded]
    return retained, excluded


def _fmt_value(v: float) -> str:
    return "NaN" if math.isnan(v) else f"{v:.6f}"


def measurements_to_csv(measurements) -> bytes:
    lines = [MEASUREMENT_CSV_HEADER]
    for m in measurements:
        if "," in m.exclusion_reason:
            raise ValueError("exclusion_reason must not contain commas")
        lines.append(
            f"{m.participant_id},{m.age_group},{m.site},{m.modality},"
            f"{_fmt_value(m.value)},{m.unit},{str(m.excluded).lower()},{m.exclusion_reason}"
        )
    return ("\n".join(lines) + "\n").encode("ascii")


def measurements_from_csv(data) -> list:
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != MEASUREMENT_CSV_HEADER:
        raise PerceptError("row 1: bad or missing measurement CSV header")
    out = []
    for rownum, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 8:
            raise PerceptError(f"row {rownum}: expected 8 columns, got {len(cells)}")
        pid, group, site, modality, value, unit, excluded, reason = cells
        if modality not in MODALITIES:
            raise PerceptError(f"row {rownum}: unknown modality {modality!r}")
        out.append(
            SiteMeasurement(
                participant_id=pid,
                age_group=group,
                site=site,
                modality=modality,
                value=math.nan if value == "NaN" else float(value),
                unit=unit,
                excluded=excluded == "true",
                exclusion_reason=reason,
            )
        )
    return out
