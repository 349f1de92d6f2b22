import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from strenum import StrEnum

from ._chain import ConjugacyChain
from ._errors import DivergenceDetected, TooFewPoints
from ._fourier import TorusGrid
from ._models import ParamMapModel, TwistMapModel
from ._modulus import ModulusOfContinuity, lipschitz
from ._records import to_csv
from ._schedule import KamSchedule, h1_integral

LOGGER = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_WINDOWS = 8

#: Norms at or below this are round-off and stay out of order fits.
ORDER_FLOOR = 1e-12

PARAM_COLUMNS = ("nu", "K", "norm_grid", "norm_coeff", "shift", "freq_residual")
TWIST_COLUMNS = (
    *PARAM_COLUMNS,
    "g_norm",
    "shift_abs",
    "shift_sum_abs",
    "intersection_margin",
)


class RotationMethod(StrEnum):
    """Averaging used by :func:`rotation_number`."""

    WEIGHTED = "weighted"
    PLAIN = "plain"


@dataclass(frozen=True)
class RotationEstimate:
    value: float | NDArray[np.float64]
    uncertainty: float | NDArray[np.float64]
    iters: int


def _weights(size: int) -> NDArray[np.float64]:
    s = (np.arange(size) + 0.5) / size
    return np.exp(-1 / (s * (1 - s)))


def _average(increments: NDArray[np.float64], method: RotationMethod) -> NDArray[np.float64]:
    if method == RotationMethod.WEIGHTED:
        w = _weights(len(increments))
        return (w @ increments) / w.sum()
    lifts = np.cumsum(increments, axis=0)
    n = np.arange(1, len(increments) + 1)[:, None]
    half = len(increments) // 2
    return np.mean(lifts[half:] / n[half:], axis=0)


def rotation_number(
    map_: Callable[[NDArray[np.float64]], ArrayLike],
    x0: ArrayLike,
    iters: int = 10_000,
    *,
    angle_index: int = 0,
    period: float = 2 * math.pi,
    method: RotationMethod | str = RotationMethod.WEIGHTED,
) -> RotationEstimate:
    """
    Rotation number of an orbit by averaging angle increments.

    Parameters
    ----------
    map_ : Callable[[NDArray[np.float64]], ArrayLike]
        Map on states of shape (B, d); the angle coordinate is returned
        as a lift of its input.
    x0 : ArrayLike
        Initial state (d,) or a batch (B, d).
    iters : int, optional
        Orbit length, at least 10**4, by default 10**4.
    angle_index : int, optional
        Column holding the angle, by default 0.
    period : float, optional
        Angle period, by default 2 pi.
    method : RotationMethod | str, optional
        ``weighted`` applies the smooth weight ``exp(-1 / (t (1 - t)))``
        to the increments; ``plain`` averages ``(Theta_n - Theta_0) / n``
        over the last half-orbit. By default ``weighted``.

    Returns
    -------
    RotationEstimate
        Mean angle advance per iterate with the spread over 8
        half-overlapping windows as uncertainty.

    """
    if iters < 10_000:
        raise ValueError(f"iters must be at least 10000, got {iters}.")
    method = RotationMethod(method)
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    x[:, angle_index] = np.mod(x[:, angle_index], period)
    increments = np.empty((iters, len(x)))
    for t in range(iters):
        y = np.array(map_(x), dtype=float).reshape(x.shape)
        increments[t] = y[:, angle_index] - x[:, angle_index]
        y[:, angle_index] = np.mod(y[:, angle_index], period)
        x = y
    value = _average(increments, method)
    length = 2 * iters // (_WINDOWS + 1)
    windows = np.stack(
        [
            _average(increments[k * length // 2 : k * length // 2 + length], method)
            for k in range(_WINDOWS)
        ]
    )
    spread = windows.std(axis=0)
    if len(value) == 1:
        return RotationEstimate(float(value[0]), float(spread[0]), iters)
    return RotationEstimate(value, spread, iters)


def _torus_points(dim: int, grid: int) -> NDArray[np.float64]:
    size = max(8, round(grid ** (1 / dim)))
    return TorusGrid(dim, size).points


def conjugacy_residual(
    chain: ConjugacyChain,
    model: ParamMapModel | TwistMapModel,
    frequency: ArrayLike | None = None,
    grid: int = 1024,
) -> float:
    """
    Sup over a grid of ``W(rigid(x)) - F(W(x))``.

    The rigid model is ``theta + q`` for parameter runs and
    ``(theta + p, r - offset)`` for twist runs.

    Parameters
    ----------
    chain : ConjugacyChain
        The conjugacy.
    model : ParamMapModel | TwistMapModel
        The map, evaluated at the chain's base parameter or action.
    frequency : ArrayLike | None, optional
        Rotation vector of the rigid model, by default the chain's.
    grid : int, optional
        Total number of grid points, by default 1024.

    Returns
    -------
    float
        The largest componentwise residual.

    """
    w = chain.frequency if frequency is None else np.atleast_1d(np.asarray(frequency, dtype=float))
    theta = _torus_points(chain.dim, grid)
    ahead = theta + w
    if isinstance(model, ParamMapModel):
        lhs = ahead + chain.u.evaluate(ahead)
        rhs = model.step(theta + chain.u.evaluate(theta), chain.base)
        return float(np.max(np.abs(lhs - rhs)))
    if chain.v is None:
        raise ValueError("Twist residuals need a chain with an action part.")
    angle, action = model(theta + chain.u.evaluate(theta), chain.base + chain.v.evaluate(theta))
    lhs_angle = ahead + chain.u.evaluate(ahead)
    lhs_action = chain.base + chain.v.evaluate(ahead) - chain.offset
    return float(
        max(np.max(np.abs(lhs_angle - angle)), np.max(np.abs(lhs_action - action)))
    )


def fit_convergence_order(norms: Sequence[float]) -> float:
    """
    Slope of ``log |f_{nu+1}|`` against ``log |f_nu|``.

    Only the leading run of norms above :data:`ORDER_FLOOR` enters the fit.

    Examples
    --------
    >>> round(fit_convergence_order([1e-2, 1e-4, 1e-8, 1e-16]), 12)
    2.0

    """
    values = np.asarray(norms, dtype=float)
    below = np.flatnonzero(~(values > ORDER_FLOOR))
    usable = values[: below[0]] if below.size else values
    if len(usable) < 3:
        raise TooFewPoints(
            f"need 3 norms above the noise floor, got {len(usable)}."
        )
    logs = np.log(usable)
    slope, _ = np.polyfit(logs[:-1], logs[1:], 1)
    return float(slope)


@dataclass(frozen=True)
class StepRecord:
    """One row of the per-step metrics."""

    nu: int
    K: int
    norm_grid: float
    norm_coeff: float
    shift: float
    freq_residual: float
    g_norm: float | None = None
    shift_abs: float | None = None
    shift_sum_abs: float | None = None
    intersection_margin: float | None = None
    transform_norm: float = 0.0
    drift_norm: float = 0.0
    oscillation_ok: bool | None = None

    @property
    def total_norm(self) -> float:
        return self.norm_grid + (self.g_norm or 0.0)


@dataclass
class RunMetrics:
    """Per-step metrics of one run."""

    kind: str
    steps: list[StepRecord] = field(default_factory=list)

    @property
    def columns(self) -> tuple[str, ...]:
        return TWIST_COLUMNS if self.kind == "twist" else PARAM_COLUMNS

    @property
    def norms(self) -> list[float]:
        return [s.total_norm for s in self.steps]

    def append(self, record: StepRecord) -> None:
        self.steps.append(record)

    def to_records(self) -> list[dict[str, Any]]:
        return [asdict(s) for s in self.steps]

    def to_csv(self, path: str | Path | None = None) -> str:
        rows = [[getattr(s, c) for c in self.columns] for s in self.steps]
        return to_csv(self.columns, rows, path)


@dataclass(frozen=True)
class ConvergenceReport:
    """
    Norms, fitted order and smallness hypotheses of a run.

    Hypotheses use unit constants, so the flags are indicative.
    """

    norms: list[float]
    order: float | None
    flags: list[dict[str, bool]]
    margins: list[dict[str, float]]
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.flags)

    def holds(self, name: str) -> bool:
        """Whether hypothesis ``name`` held at every step."""
        return all(f[name] for f in self.flags if name in f)

    def to_record(self) -> dict[str, Any]:
        return {
            "norms": self.norms,
            "order": self.order,
            "flags": self.flags,
            "margins": self.margins,
            "residuals": self.residuals,
        }


def _hypotheses(
    schedule: KamSchedule,
    nu: int,
    record: StepRecord,
    kind: str,
    modulus_upper: ModulusOfContinuity,
) -> dict[str, tuple[bool, float]]:
    n, m, rho = schedule.n, schedule.m, schedule.rho
    g0 = schedule.gamma0
    mu, s = float(schedule.mu[nu]), float(schedule.s[nu])
    delta = schedule.delta(nu)
    delta_next = schedule.delta(nu + 1)
    big_gamma = schedule.gamma_sum(nu)
    size = g0 ** (n + m + 1) * s**m * mu * big_gamma
    out: dict[str, tuple[bool, float]] = {}

    lhs = h1_integral(float(schedule.K[nu + 1]), delta, n)
    ratio = schedule.relative_to_mu(lhs, nu)
    out["H1"] = (ratio <= 1, ratio)
    drift_name = "H2" if kind == "twist" else "H6"
    bound = math.sqrt(schedule.mu0)
    out[drift_name] = (record.drift_norm <= bound, record.drift_norm / bound)
    bound = min(float(schedule.s[nu + 1]), delta / 4)
    out["H3"] = (size <= bound, size / bound)
    try:
        bound = float(modulus_upper.inverse(g0 ** (n + m + 1) * s**m * mu**2))
        out["H4"] = (size <= bound, size / bound if bound > 0 else math.inf)
    except ValueError:
        out["H4"] = (False, math.inf)
    lhs = (
        2**m
        * mu ** (1 - rho)
        * (
            g0 ** (n + m + 1) * s**m * big_gamma / delta_next
            + g0 ** (n + m + 1) * s ** (m - 1) * big_gamma
            + 1
        )
    )
    out["H5"] = (lhs <= 1, lhs)
    return out


def hypothesis_report(
    schedule: KamSchedule | None,
    metrics: RunMetrics,
    *,
    modulus_upper: ModulusOfContinuity | None = None,
    residuals: dict[str, float] | None = None,
) -> ConvergenceReport:
    """
    Evaluate the smallness hypotheses step by step.

    Parameters
    ----------
    schedule : KamSchedule | None
        The run's schedule; without one no hypotheses are evaluated.
    metrics : RunMetrics
        The run's per-step metrics.
    modulus_upper : ModulusOfContinuity | None, optional
        Continuity gauge of the frequency map, by default Lipschitz.
    residuals : dict[str, float] | None, optional
        Final residuals to attach.

    Returns
    -------
    ConvergenceReport
        Per-step flags and margins; a margin is ``lhs / rhs`` except for
        H5, whose right-hand side is 1.

    """
    modulus = modulus_upper or lipschitz()
    norms = metrics.norms
    try:
        order: float | None = fit_convergence_order(norms)
    except TooFewPoints:
        order = None
    flags: list[dict[str, bool]] = []
    margins: list[dict[str, float]] = []
    if schedule is not None:
        for record in metrics.steps:
            if record.nu > schedule.depth - 1:
                break
            result = _hypotheses(schedule, record.nu, record, metrics.kind, modulus)
            flags.append({k: bool(v[0]) for k, v in result.items()})
            margins.append({k: float(v[1]) for k, v in result.items()})
            failed = sorted(k for k, v in result.items() if not v[0])
            if failed:
                LOGGER.debug("step %d: hypotheses %s fail", record.nu, failed)
    return ConvergenceReport(norms, order, flags, margins, dict(residuals or {}))


@dataclass
class NormMonitor:
    """Divergence policy: a non-finite norm or ``patience`` consecutive increases."""

    patience: int = 2
    floor: float = 100 * _EPS
    last: float = math.inf
    rises: int = 0

    def observe(self, nu: int, norm: float) -> None:
        if not math.isfinite(norm):
            raise DivergenceDetected(f"non-finite perturbation norm at step {nu}.")
        if norm > self.last and norm > self.floor:
            self.rises += 1
        else:
            self.rises = 0
        self.last = norm
        if self.rises >= self.patience:
            raise DivergenceDetected(
                f"norm grew on {self.patience} consecutive steps, "
                f"reaching {norm:.3e} at step {nu}."
            )


@dataclass(frozen=True)
class RunResult:
    """
    Outcome of an engine run.

    ``base`` is the limit parameter for parameter runs and the limit
    translated action for twist runs.
    """

    kind: str
    converged: bool
    base: NDArray[np.float64]
    chain: ConjugacyChain
    metrics: RunMetrics
    schedule: KamSchedule | None = None
    freq_residual: float | None = None
    residual: float | None = None
    error: str | None = None
    message: str | None = None

    @property
    def status(self) -> str:
        return "converged" if self.converged else "diverged"

    @property
    def steps(self) -> int:
        return max(len(self.metrics.steps) - 1, 0)

    @property
    def xi_inf(self) -> NDArray[np.float64]:
        return self.base

    @property
    def r_hat_inf(self) -> NDArray[np.float64]:
        return self.base

    @property
    def shift_sum(self) -> NDArray[np.float64]:
        """Sum of the translations, the total action or parameter shift."""
        return self.chain.translations.cumulative

    @property
    def r_tilde(self) -> NDArray[np.float64]:
        """Total action translation ``sum_i r*_i`` of a twist run."""
        return self.shift_sum

    @property
    def offset(self) -> NDArray[np.float64]:
        return np.asarray(self.chain.offset, dtype=float)

    def report(
        self, modulus_upper: ModulusOfContinuity | None = None
    ) -> ConvergenceReport:
        residuals = {
            k: v
            for k, v in (
                ("conjugacy", self.residual),
                ("frequency", self.freq_residual),
            )
            if v is not None
        }
        return hypothesis_report(
            self.schedule,
            self.metrics,
            modulus_upper=modulus_upper,
            residuals=residuals,
        )

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "kind": self.kind,
            "status": self.status,
            "steps": self.steps,
            "base": self.base.tolist(),
            "r_tilde" if self.kind == "twist" else "shift_sum": self.shift_sum.tolist(),
            "freq_residual": self.freq_residual,
            "residual": self.residual,
            "chain": self.chain.to_record(),
            "report": self.report().to_record(),
        }
        if self.error is not None:
            record["error"] = self.error
            record["message"] = self.message
        return record
