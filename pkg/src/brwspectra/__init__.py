"""Multifractal analysis of branching random walks: cumulants, Legendre
spectra, free energies, tree simulation and experiment reports."""

from .errors import BRWError, BudgetExceeded, ConfigError
from .experiments import (
    classify_report,
    conjugate_report,
    dimension_report,
    free_energy_curve,
    inhomogeneous_report,
    ldp_spectrum,
    mandelbrot_lq_spectrum,
    martingale_report,
    measure_dimension_check,
    selftest,
    spectrum_report,
    subtree_report,
)
from .gwtree import (
    gibbs_sample,
    grow,
    inhomogeneous_Y,
    ldp_count,
    mandelbrot_Y,
    partition_function,
    prune_subtree,
    spine_sample,
)
from .laws import (
    BetaStableAnalytic,
    DegenerateAnalytic,
    DiscreteFinite,
    GaussianIid,
    HeavyTilt,
    OffspringLaw,
    PercolationBernoulli,
    law_from_json,
    normalize_for_mandelbrot,
)
from .legendre import (
    ConjugateQuery,
    biconjugate_check,
    classify_direction,
    conjugate,
    gap,
    hat_P,
    level_set_I,
    spectrum_f,
)
from .report import ExperimentReport, Row
from .rng import CounterRNG
from .schedules import ParameterSchedule, Segment, schedule_for_target

__version__ = "0.1.0"

__all__ = [
    "BRWError",
    "BetaStableAnalytic",
    "BudgetExceeded",
    "ConfigError",
    "ConjugateQuery",
    "CounterRNG",
    "DegenerateAnalytic",
    "DiscreteFinite",
    "ExperimentReport",
    "GaussianIid",
    "HeavyTilt",
    "OffspringLaw",
    "ParameterSchedule",
    "PercolationBernoulli",
    "Row",
    "Segment",
    "biconjugate_check",
    "classify_direction",
    "classify_report",
    "conjugate",
    "conjugate_report",
    "dimension_report",
    "free_energy_curve",
    "gap",
    "gibbs_sample",
    "grow",
    "hat_P",
    "inhomogeneous_Y",
    "inhomogeneous_report",
    "law_from_json",
    "ldp_count",
    "ldp_spectrum",
    "level_set_I",
    "mandelbrot_Y",
    "mandelbrot_lq_spectrum",
    "martingale_report",
    "measure_dimension_check",
    "normalize_for_mandelbrot",
    "partition_function",
    "prune_subtree",
    "schedule_for_target",
    "selftest",
    "spectrum_f",
    "spectrum_report",
    "spine_sample",
    "subtree_report",
]
