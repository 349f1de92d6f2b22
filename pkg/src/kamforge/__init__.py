__version__ = "0.1.0"
from . import testbed
from ._chain import ConjugacyChain
from ._config import (
    RunConfig,
    ScheduleConfig,
    Tolerances,
    load_config,
    parse_config,
)
from ._diagnostics import (
    ConvergenceReport,
    NormMonitor,
    RotationEstimate,
    RotationMethod,
    RunMetrics,
    RunResult,
    StepRecord,
    conjugacy_residual,
    fit_convergence_order,
    hypothesis_report,
    rotation_number,
)
from ._divisors import (
    Convention,
    DiophantineParams,
    DivisorReport,
    check_diophantine,
    continued_fraction_convergents,
    golden_like_frequency,
    solve_homological,
)
from ._errors import (
    BadExponents,
    BoundaryHit,
    ConfigError,
    ConvergenceFailure,
    DegenerateSampleSet,
    DivergenceDetected,
    GridTooCoarse,
    IntersectionLost,
    InversionFailure,
    KamError,
    MeshExhausted,
    NoRootInRegion,
    NonzeroMean,
    NotConverged,
    NotDiophantine,
    SmallDivisorBreach,
    TargetOutsideRange,
    ToleranceUnreachable,
    TooFewPoints,
)
from ._fourier import (
    FourierSeries,
    NormFlavor,
    TorusGrid,
    Truncation,
    analyze,
    invert_near_identity,
    l1_modes,
    modulus_seminorm,
    strip_norm,
    synthesize,
    truncate,
)
from ._frequency import (
    CauchyReport,
    FrequencyMap,
    TranslationLedger,
    TranslationStep,
    cauchy_monitor,
    degree,
    degree_1d,
    degree_2d,
    estimate_upper_modulus,
    solve_frequency_equation,
    solve_frequency_range_mode,
    translation_scale,
)
from ._models import (
    ParamMapModel,
    TwistMapModel,
)
from ._modulus import (
    SAMPLE_GRID,
    ModulusOfContinuity,
    hoelder,
    lipschitz,
    log_lipschitz,
    power_gauge,
    tabulated,
)
from ._param import (
    ParamIterationState,
    param_kam_run,
    param_kam_step,
)
from ._schedule import (
    KamSchedule,
    gamma_bound,
    gamma_sum,
    h1_integral,
    schedule_init,
    shell_count,
)
from ._twist import (
    TwistIterationState,
    twist_kam_run,
    twist_kam_step,
)

__all__ = [
    "SAMPLE_GRID",
    "BadExponents",
    "BoundaryHit",
    "CauchyReport",
    "ConfigError",
    "ConjugacyChain",
    "Convention",
    "ConvergenceFailure",
    "ConvergenceReport",
    "DegenerateSampleSet",
    "DiophantineParams",
    "DivergenceDetected",
    "DivisorReport",
    "FourierSeries",
    "FrequencyMap",
    "GridTooCoarse",
    "IntersectionLost",
    "InversionFailure",
    "KamError",
    "KamSchedule",
    "MeshExhausted",
    "ModulusOfContinuity",
    "NoRootInRegion",
    "NonzeroMean",
    "NormFlavor",
    "NormMonitor",
    "NotConverged",
    "NotDiophantine",
    "ParamIterationState",
    "ParamMapModel",
    "RotationEstimate",
    "RotationMethod",
    "RunConfig",
    "RunMetrics",
    "RunResult",
    "ScheduleConfig",
    "SmallDivisorBreach",
    "StepRecord",
    "TargetOutsideRange",
    "ToleranceUnreachable",
    "Tolerances",
    "TooFewPoints",
    "TorusGrid",
    "TranslationLedger",
    "TranslationStep",
    "Truncation",
    "TwistIterationState",
    "TwistMapModel",
    "analyze",
    "cauchy_monitor",
    "check_diophantine",
    "conjugacy_residual",
    "continued_fraction_convergents",
    "degree",
    "degree_1d",
    "degree_2d",
    "estimate_upper_modulus",
    "fit_convergence_order",
    "gamma_bound",
    "gamma_sum",
    "golden_like_frequency",
    "h1_integral",
    "hoelder",
    "hypothesis_report",
    "invert_near_identity",
    "l1_modes",
    "lipschitz",
    "load_config",
    "log_lipschitz",
    "modulus_seminorm",
    "param_kam_run",
    "param_kam_step",
    "parse_config",
    "power_gauge",
    "rotation_number",
    "schedule_init",
    "shell_count",
    "solve_frequency_equation",
    "solve_frequency_range_mode",
    "solve_homological",
    "strip_norm",
    "synthesize",
    "tabulated",
    "testbed",
    "translation_scale",
    "truncate",
    "twist_kam_run",
    "twist_kam_step",
]
