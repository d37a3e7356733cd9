"""Adaptive vibrotactile perception-threshold exams, simulation, and analysis."""

from .calibration import (
    CalibrationTable,
    acceleration_to_intensity,
    intensity_to_acceleration,
    load_calibration,
    make_table,
)
from .clinical import (
    MONOFILAMENT_START_GF,
    MonofilamentResult,
    MonofilamentSet,
    TuningForkModel,
    average_perception_time,
    load_monofilament_set,
    run_monofilament_exam,
    simulate_tuning_fork_time,
)
from .observers import (
    DeterministicObserver,
    PsychometricObserver,
    detect_probability,
    dump_observer,
    fifty_percent_point,
    load_observer,
    sample_response,
)
from .report import StudyReport, analyze_study, render_report_text, report_to_json
from .session import (
    BodySite,
    ObserverResponder,
    SessionConfig,
    SessionCore,
    SessionEvent,
    TrialRecord,
    classify_response,
    export_trial_csv,
    import_trial_csv,
    run_trial,
    schedule_next_stimulus,
    session_events,
)
from .staircase import (
    ReversalPoint,
    SiteThreshold,
    StaircaseConfig,
    StaircaseState,
    TrialThreshold,
    aggregate_site_threshold,
    apply_response,
    compute_threshold,
    init_staircase,
    run_staircase,
)
from .study import (
    CohortSpec,
    ExclusionRule,
    Participant,
    SiteMeasurement,
    apply_exclusions,
    flag_measurements,
    generate_cohort,
    load_cohort_spec,
    measurements_from_csv,
    measurements_to_csv,
    rng_for,
    run_virtual_study,
)

__version__ = "0.1.0"
