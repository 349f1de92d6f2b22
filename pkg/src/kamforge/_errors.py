from collections.abc import Sequence
from typing import Any


class KamError(Exception):
    """Base class of every error raised by kamforge."""


class GridTooCoarse(KamError, ValueError):
    """The sampling grid cannot resolve the requested cutoff."""


class DegenerateSampleSet(KamError, ValueError):
    """No admissible pair of parameter samples was supplied."""


class NonzeroMean(KamError, ValueError):
    """A difference equation was given a right-hand side with a mean term."""


class SmallDivisorBreach(KamError, ArithmeticError):
    """
    A stored mode hit a divisor below the guard.

    Parameters
    ----------
    mode : Sequence[int]
        The offending multi-index.
    divisor : float
        The modulus of the divisor.

    """

    def __init__(self, mode: Sequence[int], divisor: float) -> None:
        self.mode = tuple(int(k) for k in mode)
        self.divisor = float(divisor)
        super().__init__(
            f"|exp(i<k, omega>) - 1| = {self.divisor:.3e} at k = {self.mode} "
            "is below the guard."
        )


class NotDiophantine(KamError, ValueError):
    """The target frequency failed its Diophantine check."""

    def __init__(self, report: Any) -> None:
        self.report = report
        super().__init__(
            f"worst value {report.worst_value:.6g} at k = {report.worst_k} "
            f"is below gamma = {report.gamma:.6g}."
        )


class BoundaryHit(KamError, ArithmeticError):
    """The target value is attained on the boundary of the region."""


class MeshExhausted(KamError, RuntimeError):
    """Adaptive boundary refinement reached its cap."""


class TargetOutsideRange(KamError, ValueError):
    """The target frequency is not in the range of the frequency map."""


class BadExponents(KamError, ValueError):
    """The schedule exponents violate (1 + rho) ** eta > 2."""


class TooFewPoints(KamError, ValueError):
    """Not enough data above the noise floor for a fit."""


class ConfigError(KamError, ValueError):
    """A configuration document failed to parse or validate."""


class ConvergenceFailure(KamError, RuntimeError):
    """
    The iteration broke down; reported as a controlled divergence.

    Engine runs attach the partial run result as ``result``.
    """

    result: Any = None


class NoRootInRegion(ConvergenceFailure):
    """The frequency equation has no certified root in the search region."""


class ToleranceUnreachable(ConvergenceFailure):
    """The root solver stalled above the requested tolerance."""


class DivergenceDetected(ConvergenceFailure):
    """The perturbation norm grew on consecutive steps or became non-finite."""


class InversionFailure(ConvergenceFailure):
    """Newton inversion of a near-identity map did not converge."""


class IntersectionLost(ConvergenceFailure):
    """The action displacement no longer brackets zero."""


class NotConverged(ConvergenceFailure):
    """The step budget ran out before the tolerance was met."""
