"""Fronts of ``u_t = J*u - u + f(u)`` with heavy-tailed kernels and degenerate ``f``.

Waves exist when ``beta >= 1 + 1/(alpha - 2)``; below that threshold the
level sets accelerate.
"""
from .cauchy import Problem, Trace, run, simulate, stable_dt
from .certificates import (
    CertificateReport,
    LowerBarrier,
    Region,
    TwSupersolution,
    UpperBarrier,
    build_lower_barrier,
    build_tw_supersolution,
    build_upper_barrier,
    check_tail_estimate,
    verify_inequality,
)
from .errors import (
    BadParameter,
    BlowUp,
    ConfigError,
    FitDegenerate,
    FrontsError,
    GridMismatch,
    InsufficientData,
    MomentDiverges,
    NoConvergence,
    NonMonotoneSolution,
    NotApplicable,
    ProbeFailed,
    RegimeMismatch,
    TailTooHeavy,
)
from .fronts import (
    Empty,
    ExponentFit,
    LevelSetTrace,
    Regime,
    RegimeKind,
    classify_regime,
    estimate_speed,
    fit_exponent,
    level_position,
    tail_exponent_iteration,
)
from .grid import Convolver, Field, Grid, convolve, convolve_reference, make_front_datum
from .kernel import Kernel, absolute_moment, discretize, first_moment, make_kernel, tail_mass
from .reaction import Nonlinearity, make_nonlinearity
from .waves import (
    WaveOptions,
    WaveProfile,
    ignition_speed_curve,
    minimal_speed_probe,
    solve_ignition_wave,
    solve_wave,
)

__version__ = "0.1.0"
