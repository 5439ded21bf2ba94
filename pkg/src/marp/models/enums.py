"""Enumeration types for sets, schedules, runs and cone computations."""

from enum import Enum


class TiePolicy(str, Enum):
    """Selection rule when a projection has several nearest points."""

    LEX_MIN = "lex_min"
    ALL = "all"  # FiniteSet only, enumerates every choice
    NEAREST_TO_PREVIOUS = "nearest_to_previous"


class RunStatus(str, Enum):
    """Termination status of a solver run."""

    CONVERGED = "converged"
    CYCLE = "cycle"
    MAX_ITER = "max_iter"


class CertificateKind(str, Enum):
    RHO_HAT = "rho_hat"
    KAPPA_HAT = "kappa_hat"
    ETA = "eta"


class Exactness(str, Enum):
    """Trust level of a supremum over n."""

    ANALYTIC = "analytic"
    NUMERIC = "numeric"


class ConeMethod(str, Enum):
    EXACT_2D = "exact2d"
    SAMPLED = "sampled"


class RateMode(str, Enum):
    """Which gap sequence an empirical rate is fitted on."""

    ITERATION = "iteration"
    HALF_STEP = "half_step"


class Provenance(str, Enum):
    """Where an expected value in the example catalog comes from."""

    PUBLISHED = "published"
    DERIVED = "derived"
    TRIVIAL = "trivial"


class SweepParam(str, Enum):
    LAMBDA_CONST = "lambda-const"
    MU_CONST = "mu-const"
    LAMBDA_MU_CONST = "lambda-mu-const"
    ETA = "eta"
    START_COORDINATE = "start-coordinate"
