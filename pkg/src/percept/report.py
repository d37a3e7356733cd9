"""Study analysis: the fixed comparison battery and report rendering.

The report structure is constant regardless of the data: three index-finger
vs big-toe comparisons (one per modality), six younger-vs-older comparisons
(two sites x three modalities), three cross-modality correlations over all
sites and three more over the {H1, F} subset. Cells with too little data are
reported as skipped, never fatal. Smartphone and tuning-fork data are
continuous (mean/sd summaries, t tests); monofilament data are discrete
(median and type-1 quartiles, rank tests).

Directions encode the expected trends as one-sided alternatives: lower
smartphone VPT, higher tuning-fork time, and lower monofilament force all
mean better perception, so the finger-vs-toe and younger-vs-older contrasts
test "better" explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from . import stats
from .errors import PerceptError
from .study import CONTINUOUS_MODALITIES, MODALITIES

BONFERRONI_M = 3  # the three modalities testing each contrast

# alternative per modality: x is the "better-perception" sample
_SITE_ALTERNATIVE = {"smartphone": stats.LESS, "tuning_fork": stats.GREATER,
                     "monofilament": stats.LESS}

COMPARISON_SITE_A = "H1"
COMPARISON_SITE_B = "F"

_CORRELATION_PAIRS = (
    ("smartphone", "tuning_fork", "pearson"),
    ("smartphone", "monofilament", "spearman"),
    ("monofilament", "tuning_fork", "spearman"),
)


class InsufficientDataError(PerceptError, ValueError):
    """Raised internally when a comparison cell has too little data."""


@dataclass(frozen=True)
class SummaryEntry:
    site: str
    modality: str
    group: str  # "all" | "younger" | "older"
    summary: Optional[stats.GroupSummary]
    n_missing: int


@dataclass(frozen=True)
class Comparison:
    name: str
    kind: str  # "site" | "age"
    modality: str
    alternative: str
    m: int
    test: Optional[stats.TestResult]
    effect: Optional[stats.EffectSize]
    n_dropped: int
    skipped: bool = False
    skip_reason: str = ""


@dataclass(frozen=True)
class CorrelationEntry:
    modality_a: str
    modality_b: str
    method: str
    scope: str  # "all_sites" | "h1_f"
    coefficient: Optional[float]
    p_value: Optional[float]
    n: int
    skipped: bool = False
    skip_reason: str = ""


@dataclass(frozen=True)
class StudyReport:
    summaries: tuple
    site_comparisons: tuple
    age_comparisons: tuple
    correlations: tuple
    exclusions: tuple  # of (participant_id, reason)
    n_participants_retained: int
    n_participants_excluded: int
    group_counts: dict


def _values_by_participant(measurements, site, modality):
    return {
        m.participant_id: m.value
        for m in measurements
        if m.site == site and m.modality == modality
    }


def _non_nan(values):
    return [v for v in values if not math.isnan(v)]


def analyze_study(measurements, bonferroni_m: int = BONFERRONI_M) -> StudyReport:
    """Produce the full report from (possibly exclusion-flagged) measurements."""
    measurements = list(measurements)
    if not measurements:
        raise PerceptError("no measurements to analyze")
    exclusions = sorted(
        {(m.participant_id, m.exclusion_reason) for m in measurements if m.excluded}
    )
    retained = [m for m in measurements if not m.excluded]
    if not retained:
        raise PerceptError("every measurement is excluded")
    sites = sorted({m.site for m in retained})
    ages = {m.participant_id: m.age_group for m in retained}
    retained_ids = sorted(ages)
    group_counts = {
        g: sum(1 for pid in retained_ids if ages[pid] == g) for g in ("younger", "older")
    }

    summaries = []
    for site in sites:
        for modality in MODALITIES:
            by_pid = _values_by_participant(retained, site, modality)
            for group in ("all", "younger", "older"):
                values = [
                    v
                    for pid, v in sorted(by_pid.items())
                    if group == "all" or ages[pid] == group
                ]
                clean = _non_nan(values)
                mode = "continuous" if modality in CONTINUOUS_MODALITIES else "discrete"
                summary = stats.group_summary(clean, mode) if clean else None
                summaries.append(
                    SummaryEntry(
                        site=site,
                        modality=modality,
                        group=group,
                        summary=summary,
                        n_missing=len(values) - len(clean),
                    )
                )

    site_comparisons = tuple(
        _site_comparison(retained, modality, bonferroni_m) for modality in MODALITIES
    )
    age_comparisons = tuple(
        _age_comparison(retained, ages, site, modality, bonferroni_m)
        for site in (COMPARISON_SITE_A, COMPARISON_SITE_B)
        for modality in MODALITIES
    )

    correlations = []
    for scope, scope_sites in (("all_sites", sites), ("h1_f", [COMPARISON_SITE_A, COMPARISON_SITE_B])):
        for mod_a, mod_b, method in _CORRELATION_PAIRS:
            correlations.append(
                _correlation(retained, scope, scope_sites, mod_a, mod_b, method)
            )

    return StudyReport(
        summaries=tuple(summaries),
        site_comparisons=site_comparisons,
        age_comparisons=age_comparisons,
        correlations=tuple(correlations),
        exclusions=tuple(exclusions),
        n_participants_retained=len(retained_ids),
        n_participants_excluded=len({pid for pid, _ in exclusions}),
        group_counts=group_counts,
    )


def _skip(name, kind, modality, alternative, m, reason) -> Comparison:
    return Comparison(
        name=name, kind=kind, modality=modality, alternative=alternative, m=m,
        test=None, effect=None, n_dropped=0, skipped=True, skip_reason=reason,
    )


def _site_comparison(retained, modality, m) -> Comparison:
    """Paired H1-vs-F contrast for one modality."""
    alternative = _SITE_ALTERNATIVE[modality]
    name = f"site:{modality}:{COMPARISON_SITE_A}_vs_{COMPARISON_SITE_B}"
    a = _values_by_participant(retained, COMPARISON_SITE_A, modality)
    b = _values_by_participant(retained, COMPARISON_SITE_B, modality)
    pairs = [
        (a[pid], b[pid])
        for pid in sorted(set(a) & set(b))
        if not math.isnan(a[pid]) and not math.isnan(b[pid])
    ]
    n_dropped = len(set(a) & set(b)) - len(pairs)
    if len(pairs) < 2:
        return _skip(name, "site", modality, alternative, m, "insufficient-data")
    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    try:
        if modality in CONTINUOUS_MODALITIES:
            test = stats.t_test_one_sided(x, y, paired=True, alternative=alternative)
            effect = stats.cohens_d(x, y)
        else:
            test = stats.wilcoxon_signed_rank_one_sided(x, y, alternative=alternative)
            effect = stats.wilcoxon_r(test.z_statistic, test.n)
    except (stats.DegenerateSampleError, stats.AllZeroDifferencesError) as exc:
        return _skip(name, "site", modality, alternative, m, f"degenerate: {exc}")
    return Comparison(
        name=name, kind="site", modality=modality, alternative=alternative, m=m,
        test=test.with_bonferroni(m), effect=effect, n_dropped=n_dropped,
    )


def _age_comparison(retained, ages, site, modality, m) -> Comparison:
    """Unpaired younger-vs-older contrast at one site for one modality."""
    alternative = _SITE_ALTERNATIVE[modality]
    name = f"age:{modality}:{site}"
    by_pid = _values_by_participant(retained, site, modality)
    younger = _non_nan([v for pid, v in sorted(by_pid.items()) if ages[pid] == "younger"])
    older = _non_nan([v for pid, v in sorted(by_pid.items()) if ages[pid] == "older"])
    n_dropped = len(by_pid) - len(younger) - len(older)
    if len(younger) < 2 or len(older) < 2:
        return _skip(name, "age", modality, alternative, m, "insufficient-data")
    try:
        if modality in CONTINUOUS_MODALITIES:
            test = stats.t_test_one_sided(younger, older, paired=False, alternative=alternative)
            effect = stats.cohens_d(younger, older)
        else:
            test = stats.wilcoxon_rank_sum_one_sided(younger, older, alternative=alternative)
            effect = stats.wilcoxon_r(test.z_statistic, test.n)
    except stats.DegenerateSampleError as exc:
        return _skip(name, "age", modality, alternative, m, f"degenerate: {exc}")
    return Comparison(
        name=name, kind="age", modality=modality, alternative=alternative, m=m,
        test=test.with_bonferroni(m), effect=effect, n_dropped=n_dropped,
    )


def _correlation(retained, scope, scope_sites, mod_a, mod_b, method) -> CorrelationEntry:
    points = []
    for site in scope_sites:
        a = _values_by_participant(retained, site, mod_a)
        b = _values_by_participant(retained, site, mod_b)
        for pid in sorted(set(a) & set(b)):
            if not math.isnan(a[pid]) and not math.isnan(b[pid]):
                points.append((a[pid], b[pid]))
    if len(points) < 3:
        return CorrelationEntry(
            modality_a=mod_a, modality_b=mod_b, method=method, scope=scope,
            coefficient=None, p_value=None, n=len(points),
            skipped=True, skip_reason="insufficient-data",
        )
    x = [p[0] for p in points]
    y = [p[1] for p in points]
    try:
        r, p = stats.pearson(x, y) if method == "pearson" else stats.spearman(x, y)
    except stats.DegenerateSampleError as exc:
        return CorrelationEntry(
            modality_a=mod_a, modality_b=mod_b, method=method, scope=scope,
            coefficient=None, p_value=None, n=len(points),
            skipped=True, skip_reason=f"degenerate: {exc}",
        )
    return CorrelationEntry(
        modality_a=mod_a, modality_b=mod_b, method=method, scope=scope,
        coefficient=r, p_value=p, n=len(points),
    )


def _json_float(v):
    if v is None:
        return None
    if isinstance(v, float) and math.isnan(v):
        return "NaN"
    return v


def report_to_dict(report: StudyReport) -> dict:
    """JSON-ready dict with deterministic key order; NaN spelled 'NaN'."""

    def summary_dict(e: SummaryEntry):
        s = e.summary
        return {
            "site": e.site,
            "modality": e.modality,
            "group": e.group,
            "n": 0 if s is None else s.n,
            "n_missing": e.n_missing,
            "mean": _json_float(s.mean) if s else None,
            "std": _json_float(s.std) if s else None,
            "median": _json_float(s.median) if s else None,
            "q25": _json_float(s.q25) if s else None,
            "q75": _json_float(s.q75) if s else None,
            "small_n": s.small_n if s else False,
        }

    def comparison_dict(c: Comparison):
        return {
            "name": c.name,
            "kind": c.kind,
            "modality": c.modality,
            "alternative": c.alternative,
            "m": c.m,
            "method": c.test.method if c.test else None,
            "statistic": _json_float(c.test.statistic) if c.test else None,
            "p_value": _json_float(c.test.p_value) if c.test else None,
            "p_adjusted": _json_float(c.test.p_adjusted) if c.test else None,
            "z": _json_float(c.test.z_statistic) if c.test else None,
            "exact": c.test.exact if c.test else None,
            "n": c.test.n if c.test else None,
            "effect_kind": c.effect.kind if c.effect else None,
            "effect_value": _json_float(c.effect.value) if c.effect else None,
            "n_dropped": c.n_dropped,
            "skipped": c.skipped,
            "skip_reason": c.skip_reason,
        }

    def correlation_dict(c: CorrelationEntry):
        return {
            "pair": f"{c.modality_a}~{c.modality_b}",
            "method": c.method,
            "scope": c.scope,
            "coefficient": _json_float(c.coefficient),
            "p_value": _json_float(c.p_value),
            "n": c.n,
            "skipped": c.skipped,
            "skip_reason": c.skip_reason,
        }

    return {
        "participants": {
            "retained": report.n_participants_retained,
            "excluded": report.n_participants_excluded,
            "group_counts": report.group_counts,
        },
        "exclusions": [
            {"participant_id": pid, "reason": reason} for pid, reason in report.exclusions
        ],
        "group_summaries": [summary_dict(e) for e in report.summaries],
        "site_comparisons": [comparison_dict(c) for c in report.site_comparisons],
        "age_comparisons": [comparison_dict(c) for c in report.age_comparisons],
        "correlations": [correlation_dict(c) for c in report.correlations],
    }


def report_to_json(report: StudyReport) -> bytes:
    return (json.dumps(report_to_dict(report), indent=2, allow_nan=False) + "\n").encode("ascii")


def _fmt(v, digits=4):
    if v is None:
        return "-"
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        return f"{v:.{digits}g}"
    return str(v)


def render_report_text(report: StudyReport) -> str:
    """Human-readable fixed-width summary of the report."""
    lines = []
    lines.append(
        f"Participants: {report.n_participants_retained} retained "
        f"({report.group_counts.get('younger', 0)} younger, "
        f"{report.group_counts.get('older', 0)} older), "
        f"{report.n_participants_excluded} excluded"
    )
    if report.exclusions:
        lines.append("Exclusions:")
        for pid, reason in report.exclusions:
            lines.append(f"  {pid}: {reason}")
    lines.append("")
    lines.append("Group summaries (site / modality / group):")
    for e in report.summaries:
        s = e.summary
        if s is None:
            body = "no data"
        elif s.mode == "continuous":
            body = f"mean {_fmt(s.mean)} sd {_fmt(s.std)} (n={s.n})"
        else:
            body = f"median {_fmt(s.median)} [{_fmt(s.q25)}, {_fmt(s.q75)}] (n={s.n})"
        lines.append(f"  {e.site:<3} {e.modality:<12} {e.group:<8} {body}")
    lines.append("")
    lines.append("Comparisons:")
    for c in list(report.site_comparisons) + list(report.age_comparisons):
        if c.skipped:
            lines.append(f"  {c.name:<34} skipped ({c.skip_reason})")
            continue
        lines.append(
            f"  {c.name:<34} {c.test.method:<20} stat {_fmt(c.test.statistic)} "
            f"p {_fmt(c.test.p_value)} adj(m={c.m}) {_fmt(c.test.p_adjusted)} "
            f"{c.effect.kind} {_fmt(c.effect.value)}"
        )
    lines.append("")
    lines.append("Correlations:")
    for c in report.correlations:
        if c.skipped:
            lines.append(
                f"  {c.modality_a}~{c.modality_b} [{c.scope}] skipped ({c.skip_reason})"
            )
            continue
        lines.append(
            f"  {c.modality_a}~{c.modality_b:<13} [{c.scope:<9}] {c.method:<8} "
            f"r {_fmt(c.coefficient)} p {_fmt(c.p_value)} (n={c.n})"
        )
    return "\n".join(lines) + "\n"
