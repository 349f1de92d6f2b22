import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, least_squares

from ._errors import (
    BoundaryHit,
    MeshExhausted,
    NoRootInRegion,
    TargetOutsideRange,
    ToleranceUnreachable,
)
from ._modulus import ModulusOfContinuity, lipschitz, tabulated
from ._records import to_csv
from ._schedule import KamSchedule

LOGGER = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_MESH_CAP = 1 << 20

Drift: TypeAlias = Callable[[NDArray[np.float64]], Any]


@dataclass(frozen=True)
class FrequencyMap:
    """
    A continuous frequency map on an axis-aligned box.

    Parameters
    ----------
    func : Callable[[NDArray[np.float64]], Any]
        Vectorized map from points of shape (P, m) to values of shape
        (P, n); (P,) is accepted when n is 1.
    lower, upper : ArrayLike
        Corners of the box E (or Lambda).
    modulus_lower : ModulusOfContinuity | None, optional
        Weak-convexity gauge near ``base``.
    modulus_upper : ModulusOfContinuity | None, optional
        Continuity gauge; Lipschitz when missing.
    seminorm : float, optional
        Constant multiplying ``modulus_upper``, by default 1.
    base : ArrayLike | None, optional
        The base point r_* or xi_*.
    delta : float, optional
        Radius of the weak-convexity ball, by default 0.
    name : str, optional
        Identifier, by default "omega".

    """

    func: Callable[[NDArray[np.float64]], Any]
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    modulus_lower: ModulusOfContinuity | None = None
    modulus_upper: ModulusOfContinuity | None = None
    seminorm: float = 1.0
    base: NDArray[np.float64] | None = None
    delta: float = 0.0
    name: str = "omega"
    range_dim: int = field(init=False)

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or np.any(lower >= upper):
            raise ValueError(f"Invalid box [{lower}, {upper}].")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.base is not None:
            object.__setattr__(
                self, "base", np.atleast_1d(np.asarray(self.base, dtype=float))
            )
        probe = np.asarray(self.func(((lower + upper) / 2)[None, :]), dtype=float)
        object.__setattr__(self, "range_dim", int(probe.reshape(1, -1).shape[1]))

    @property
    def domain_dim(self) -> int:
        return int(self.lower.size)

    @property
    def center(self) -> NDArray[np.float64]:
        return (self.lower + self.upper) / 2

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 0 or (arr.ndim == 1 and arr.size == self.domain_dim)
        points = arr.reshape(-1, self.domain_dim)
        values = np.asarray(self.func(points), dtype=float).reshape(len(points), -1)
        return values[0] if single else values

    def mesh(self, size: int) -> NDArray[np.float64]:
        """Uniform mesh of the box with ``size`` points per axis, shape (P, m)."""
        axes = [np.linspace(a, b, size) for a, b in zip(self.lower, self.upper, strict=True)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.domain_dim)

    def check_continuity(self, size: int = 65) -> float:
        """
        Largest sampled ratio ``|w(x) - w(y)| / (seminorm * modulus_upper(|x - y|))``.

        Values at most 1 mean the continuity invariant holds on the mesh.
        """
        modulus = self.modulus_upper or lipschitz()
        x = self.mesh(size)
        values = self(x)
        dist = np.abs(x[:, None, :] - x[None, :, :]).sum(axis=-1)
        diff = np.abs(values[:, None, :] - values[None, :, :]).sum(axis=-1)
        mask = (dist > 0) & (dist <= 1)
        return float(np.max(diff[mask] / (self.seminorm * modulus(dist[mask]))))

    def check_weak_convexity(
        self, pairs: int = 10_000, rng: np.random.Generator | None = None
    ) -> float:
        """
        Smallest sampled ratio ``|w(x) - w(y)| / modulus_lower(|x - y|)`` in the ball.

        Values at least 1 mean the weak-convexity invariant holds.
        """
        if self.modulus_lower is None or self.base is None or self.delta <= 0:
            raise ValueError("modulus_lower, base and delta are required.")
        rng = np.random.default_rng(0) if rng is None else rng
        shape = (pairs, self.domain_dim)
        x = self.base + rng.uniform(-self.delta, self.delta, shape)
        y = self.base + rng.uniform(-self.delta, self.delta, shape)
        dist = np.abs(x - y).sum(axis=1)
        keep = dist > 0
        diff = np.abs(self(x) - self(y)).sum(axis=1)
        return float(np.min(diff[keep] / self.modulus_lower(dist[keep])))


def translation_scale(freq: FrequencyMap, size: float) -> float:
    """
    Expected translation size ``modulus_lower^-1(2 size)`` for a drift change ``size``.

    Falls back to ``size`` without a lower gauge.
    """
    if freq.modulus_lower is None or size <= 0:
        return float(size)
    try:
        return float(freq.modulus_lower.inverse(2 * size))
    except ValueError:
        return float(size)


def estimate_upper_modulus(freq: FrequencyMap, size: int = 257) -> ModulusOfContinuity:
    """Tabulated continuity gauge of ``freq`` from axis increments on a mesh."""
    scales = np.logspace(-6, 0, 25)
    x = freq.mesh(size if freq.domain_dim == 1 else 33)
    base = freq(x)
    sup = np.zeros_like(scales)
    for i, h in enumerate(scales):
        for axis in range(freq.domain_dim):
            y = x.copy()
            y[:, axis] = np.minimum(y[:, axis] + h, freq.upper[axis])
            sup[i] = max(sup[i], float(np.max(np.abs(freq(y) - base).sum(axis=1))))
    return tabulated(scales, np.maximum(sup, 1e-300), name=f"{freq.name}_upper")


@dataclass(frozen=True)
class TranslationStep:
    index: int
    shift: NDArray[np.float64]
    residual: float
    mu: float | None = None


@dataclass
class TranslationLedger:
    """Translations applied by one run; owned by that run."""

    dim: int = 1
    steps: list[TranslationStep] = field(default_factory=list)

    def record(
        self, index: int, shift: ArrayLike, residual: float, mu: float | None = None
    ) -> TranslationStep:
        step = TranslationStep(
            index, np.atleast_1d(np.asarray(shift, dtype=float)), float(residual), mu
        )
        self.steps.append(step)
        return step

    @property
    def cumulative(self) -> NDArray[np.float64]:
        """Sum of all shifts."""
        total = np.zeros(self.dim)
        for step in self.steps:
            total = total + step.shift
        return total

    def to_records(self) -> list[dict[str, Any]]:
        return [
            {
                "nu": s.index,
                "shift": s.shift.tolist(),
                "residual": s.residual,
                "mu": s.mu,
            }
            for s in self.steps
        ]

    def to_csv(self, path: str | Path | None = None) -> str:
        header = [
            "nu",
            *(f"shift_{j}" for j in range(self.dim)),
            "shift_abs",
            "mu",
            "ratio",
            "residual",
        ]
        rows = []
        for s in self.steps:
            size = float(np.abs(s.shift).sum())
            ratio = size / s.mu if s.mu else None
            rows.append([s.index, *s.shift, size, s.mu, ratio, s.residual])
        return to_csv(header, rows, path)


@dataclass(frozen=True)
class CauchyReport:
    ratios: list[float]
    flagged_steps: list[int]

    @property
    def flagged(self) -> bool:
        return bool(self.flagged_steps)

    @property
    def constant(self) -> float:
        """Smallest c with ``|shift| <= c * mu`` over the ledger."""
        return max(self.ratios, default=0.0)


def cauchy_monitor(
    ledger: TranslationLedger,
    mu: KamSchedule | Sequence[float] | None = None,
) -> CauchyReport:
    """
    Ratios ``|shift_nu| / mu_nu`` and flags for tenfold growth.

    Parameters
    ----------
    ledger : TranslationLedger
        The run's ledger.
    mu : KamSchedule | Sequence[float] | None, optional
        Scale per step: the schedule's ``mu``, an explicit sequence,
        or (by default) the ``mu`` recorded with each step.

    Returns
    -------
    CauchyReport
        Per-step ratios and the indices of flagged steps. Shifts below the
        rounding floor count as zero and never start a flag.

    """
    ratios: list[float] = []
    flagged: list[int] = []
    for i, step in enumerate(ledger.steps):
        size = float(np.abs(step.shift).sum())
        if size <= 100 * _EPS:
            ratio = 0.0
        elif isinstance(mu, KamSchedule):
            ratio = mu.relative_to_mu(size, step.index)
        else:
            scale = float(mu[i]) if mu is not None else float(step.mu or math.nan)
            ratio = size / scale if scale > 0 else math.inf
        if ratios and ratios[-1] > 0 and ratio > 10 * ratios[-1]:
            flagged.append(i)
            LOGGER.warning(
                "translation ratio grew from %.3e to %.3e at step %d",
                ratios[-1],
                ratio,
                step.index,
            )
        ratios.append(ratio)
    return CauchyReport(ratios, flagged)


def _sign_change_brackets(
    g: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    a: float,
    b: float,
    mesh: int,
    depth: int = 6,
) -> list[tuple[float, float, int]]:
    xs = np.linspace(a, b, mesh + 1)
    values = g(xs)
    keep = (values != 0) | (np.arange(len(xs)) == 0) | (np.arange(len(xs)) == mesh)
    xs, signs = xs[keep], np.sign(values[keep])
    brackets = []
    for lo, hi, s_lo, s_hi in zip(xs[:-1], xs[1:], signs[:-1], signs[1:], strict=True):
        if s_lo == s_hi:
            continue
        if depth > 0:
            inner = _sign_change_brackets(g, lo, hi, 8, depth - 1)
            if len(inner) > 1:
                brackets.extend(inner)
                continue
        brackets.append((float(lo), float(hi), int((s_hi - s_lo) // 2)))
    return brackets


def degree_1d(
    freq: FrequencyMap,
    interval: tuple[float, float] | None = None,
    p: float = 0.0,
    mesh: int = 64,
) -> int:
    """
    Degree of ``freq`` at ``p`` on an interval by sign counting.

    Parameters
    ----------
    freq : FrequencyMap
        A scalar map of one variable.
    interval : tuple[float, float] | None, optional
        The interval, by default the map's box.
    p : float, optional
        The target value, by default 0.
    mesh : int, optional
        Initial mesh intervals, by default 64.

    Returns
    -------
    int
        The sum of +1 (upward) and -1 (downward) sign changes of ``freq - p``.

    Raises
    ------
    BoundaryHit
        If ``|freq - p| < 1e-12`` at an endpoint.

    """
    if freq.domain_dim != 1 or freq.range_dim != 1:
        raise ValueError("degree_1d needs a scalar map of one variable.")
    a, b = interval if interval is not None else (freq.lower[0], freq.upper[0])

    def g(x: NDArray[np.float64]) -> NDArray[np.float64]:
        return freq(np.asarray(x, dtype=float).reshape(-1, 1))[:, 0] - p

    ends = g(np.array([a, b]))
    if np.min(np.abs(ends)) < 1e-12:
        raise BoundaryHit(f"|omega - p| < 1e-12 at an endpoint of [{a}, {b}].")
    return sum(s for _, _, s in _sign_change_brackets(g, a, b, mesh))


def _box_boundary(
    lower: NDArray[np.float64], upper: NDArray[np.float64], per_side: int
) -> NDArray[np.float64]:
    t = np.arange(per_side) / per_side
    (x0, y0), (x1, y1) = lower, upper
    sides = [
        np.stack([x0 + (x1 - x0) * t, np.full_like(t, y0)], axis=1),
        np.stack([np.full_like(t, x1), y0 + (y1 - y0) * t], axis=1),
        np.stack([x1 - (x1 - x0) * t, np.full_like(t, y1)], axis=1),
        np.stack([np.full_like(t, x0), y1 - (y1 - y0) * t], axis=1),
    ]
    return np.concatenate(sides)


def degree_2d(
    freq: FrequencyMap,
    box: tuple[ArrayLike, ArrayLike] | None = None,
    p: ArrayLike = (0.0, 0.0),
    mesh: int = 64,
) -> int:
    """
    Winding number of ``freq - p`` along the boundary of a box.

    Parameters
    ----------
    freq : FrequencyMap
        A planar map of two variables.
    box : tuple[ArrayLike, ArrayLike] | None, optional
        Lower and upper corners, by default the map's box.
    p : ArrayLike, optional
        The target, by default the origin.
    mesh : int, optional
        Initial samples per side, by default 64.

    Returns
    -------
    int
        The degree, counted positively for counterclockwise winding.

    Raises
    ------
    BoundaryHit
        If a boundary sample lies within 1e-9 of ``p``.
    MeshExhausted
        If ``2**20`` boundary samples still leave a step of at least pi/2.

    """
    if freq.domain_dim != 2 or freq.range_dim != 2:
        raise ValueError("degree_2d needs a planar map of two variables.")
    lower, upper = (
        (freq.lower, freq.upper)
        if box is None
        else (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
    )
    target = np.asarray(p, dtype=float)
    per_side = mesh
    while True:
        values = freq(_box_boundary(lower, upper, per_side)) - target
        if np.min(np.hypot(values[:, 0], values[:, 1])) < 1e-9:
            raise BoundaryHit(f"omega comes within 1e-9 of {target} on the boundary.")
        angles = np.arctan2(values[:, 1], values[:, 0])
        steps = np.diff(np.append(angles, angles[0]))
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        if np.max(np.abs(steps)) < np.pi / 2:
            return round(float(np.sum(steps)) / (2 * np.pi))
        per_side *= 2
        if 4 * per_side > _MESH_CAP:
            raise MeshExhausted(
                f"boundary steps still reach {np.max(np.abs(steps)):.3f} rad "
                f"at {4 * per_side // 2} samples."
            )


def degree(freq: FrequencyMap, p: ArrayLike) -> int | None:
    """
    Degree of ``freq`` at ``p`` on its box, or None above two dimensions.

    Examples
    --------
    >>> degree(FrequencyMap(lambda x: x**3, -1, 1), 0.0)
    1

    """
    p_ = np.atleast_1d(np.asarray(p, dtype=float))
    if freq.domain_dim == freq.range_dim == 1:
        return degree_1d(freq, p=float(p_[0]))
    if freq.domain_dim == freq.range_dim == 2:
        return degree_2d(freq, p=p_)
    return None


def _residual_function(
    freq: FrequencyMap, drift: Drift | None, target: NDArray[np.float64]
) -> Callable[[NDArray[np.float64]], NDArray[np.float64]]:
    def residual(x: NDArray[np.float64]) -> NDArray[np.float64]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        value = freq(x) - target
        if drift is not None:
            value = value + np.broadcast_to(
                np.asarray(drift(x), dtype=float), value.shape
            )
        return value

    return residual


def _solve_scalar(
    g: Callable[[float], float],
    start: float,
    radius: float,
    lower: float,
    upper: float,
    tol: float,
) -> float:
    g0 = g(start)
    if abs(g0) <= tol:
        return start
    sign0 = math.copysign(1.0, g0)

    def root_in(a: float, b: float) -> float:
        return float(brentq(g, min(a, b), max(a, b), xtol=1e-300, rtol=4 * _EPS, maxiter=400))

    # secant predictor, accepted only if it yields a tight bracket
    probe = min(max(start + 1e-7 * max(1.0, abs(start)), lower), upper)
    if probe != start:
        slope = (g(probe) - g0) / (probe - start)
        if slope != 0 and math.isfinite(slope):
            guess = start - g0 / slope
            far = start + 1.1 * (guess - start)
            if abs(far - start) <= radius and lower <= far <= upper:
                if math.copysign(1.0, g(far)) != sign0:
                    return root_in(start, far)
    last = {1: start, -1: start}
    for offset in radius * 2.0 ** -np.arange(52, -1, -1):
        for side in (1, -1):
            x = min(max(start + side * float(offset), lower), upper)
            if x == last[side]:
                continue
            gx = g(x)
            if gx == 0:
                return x
            if math.copysign(1.0, gx) != sign0:
                return root_in(last[side], x)
            last[side] = x
    raise NoRootInRegion(
        f"no sign change of omega + drift - target within {radius:g} of {start:g}."
    )


def _solve_newton(
    g: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    start: NDArray[np.float64],
    radius: float,
    lower: NDArray[np.float64],
    upper: NDArray[np.float64],
    tol: float,
) -> NDArray[np.float64]:
    x = start.copy()
    gx = g(x)
    for _ in range(50):
        if np.max(np.abs(gx)) <= tol:
            return x
        step = 1e-6 * np.maximum(1.0, np.abs(x))
        jac = np.stack(
            [(g(x + step[j] * np.eye(len(x))[j]) - gx) / step[j] for j in range(len(x))],
            axis=1,
        )
        try:
            dx = np.linalg.solve(jac, -gx)
        except np.linalg.LinAlgError:
            break
        x_new = x + dx
        if (
            np.max(np.abs(x_new - start)) > radius
            or np.any(x_new < lower)
            or np.any(x_new > upper)
        ):
            break
        x, gx = x_new, g(x_new)
    LOGGER.debug("Newton left the trust region; falling back to a grid scan")
    lo = np.maximum(lower, start - radius)
    hi = np.minimum(upper, start + radius)
    per_axis = 64 if len(start) <= 2 else 8
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi, strict=True)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(start))
    norms = np.array([np.linalg.norm(g(p)) for p in grid])
    best = _refine_candidates(g, grid[np.argsort(norms)[:8]], lo, hi, start)
    residual = float(np.max(np.abs(g(best))))
    if residual <= tol:
        return best
    if residual > math.sqrt(tol):
        raise NoRootInRegion(f"grid scan found no root; best residual {residual:.3e}.")
    raise ToleranceUnreachable(f"stalled at residual {residual:.3e} > {tol:.3e}.")


def _refine_candidates(
    g: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    candidates: NDArray[np.float64],
    lower: NDArray[np.float64],
    upper: NDArray[np.float64],
    start: NDArray[np.float64],
) -> NDArray[np.float64]:
    best, best_key = candidates[0], (math.inf, math.inf)
    for x0 in candidates:
        fit = least_squares(
            g,
            x0,
            bounds=(lower, upper),
            method="trf",
            xtol=_EPS,
            ftol=_EPS,
            gtol=_EPS,
        )
        key = (round(float(np.linalg.norm(fit.fun)), 14), float(np.abs(fit.x - start).sum()))
        if key < best_key:
            best, best_key = fit.x, key
    return np.asarray(best, dtype=float)


def solve_frequency_equation(
    freq: FrequencyMap,
    drift: Drift | None,
    target: ArrayLike,
    start: ArrayLike,
    trust_radius: float | None = None,
    tol: float = 1e-12,
    *,
    ledger: TranslationLedger | None = None,
    index: int | None = None,
    mu: float | None = None,
) -> NDArray[np.float64]:
    """
    Solve ``freq(x) + drift(x) = target`` for the root closest to ``start``.

    Parameters
    ----------
    freq : FrequencyMap
        The frequency map.
    drift : Drift | None
        Accumulated mean drift, re-evaluated at every trial point.
    target : ArrayLike
        The prescribed frequency.
    start : ArrayLike
        The previous translated action or parameter.
    trust_radius : float | None, optional
        Search radius around ``start``, by default the box diameter.
    tol : float, optional
        Residual tolerance, by default 1e-12.
    ledger : TranslationLedger | None, optional
        When given, the shift ``x - start`` is recorded.
    index : int | None, optional
        Step index for the ledger entry.
    mu : float | None, optional
        Scale recorded with the ledger entry.

    Returns
    -------
    NDArray[np.float64]
        The translated point.

    Raises
    ------
    NoRootInRegion
        If no bracket or certified root is found.
    ToleranceUnreachable
        If the solver stalls above ``tol``.

    """
    target_ = np.atleast_1d(np.asarray(target, dtype=float))
    start_ = np.atleast_1d(np.asarray(start, dtype=float))
    if freq.domain_dim != freq.range_dim:
        x = solve_frequency_range_mode(freq, drift, target_, start_, tol)
    else:
        g = _residual_function(freq, drift, target_)
        radius = (
            float(np.max(freq.upper - freq.lower)) if trust_radius is None else trust_radius
        )
        if freq.domain_dim == 1:
            root = _solve_scalar(
                lambda t: float(g(np.array([t]))[0]),
                float(start_[0]),
                radius,
                float(freq.lower[0]),
                float(freq.upper[0]),
                tol,
            )
            x = np.array([root])
        else:
            x = _solve_newton(g, start_, radius, freq.lower, freq.upper, tol)
    residual = float(np.max(np.abs(_residual_function(freq, drift, target_)(x))))
    if residual > tol:
        raise ToleranceUnreachable(
            f"frequency residual {residual:.3e} exceeds tolerance {tol:.3e}."
        )
    if ledger is not None:
        ledger.record(len(ledger.steps) if index is None else index, x - start_, residual, mu)
    return x


def solve_frequency_range_mode(
    freq: FrequencyMap,
    drift: Drift | None,
    target: ArrayLike,
    start: ArrayLike | None = None,
    tol: float = 1e-10,
    *,
    clearance: float | None = None,
) -> NDArray[np.float64]:
    """
    Least-squares solve of the frequency equation when ``m != n`` is allowed.

    Parameters
    ----------
    freq : FrequencyMap
        The frequency map.
    drift : Drift | None
        Accumulated mean drift.
    target : ArrayLike
        The prescribed frequency.
    start : ArrayLike | None, optional
        Preferred point for tie-breaking, by default the box center.
    tol : float, optional
        Residual tolerance, by default 1e-10.
    clearance : float | None, optional
        Largest admissible coarse-scan residual, by default four times the
        largest change between neighboring scan points.

    Returns
    -------
    NDArray[np.float64]
        A point with residual at most ``tol``.

    Raises
    ------
    TargetOutsideRange
        If the coarse scan misses the clearance or refinement misses ``tol``.

    """
    target_ = np.atleast_1d(np.asarray(target, dtype=float))
    start_ = freq.center if start is None else np.atleast_1d(np.asarray(start, dtype=float))
    g = _residual_function(freq, drift, target_)
    m = freq.domain_dim
    per_axis = {1: 1025, 2: 64}.get(m, 12)
    axes = [np.linspace(a, b, per_axis) for a, b in zip(freq.lower, freq.upper, strict=True)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    points = mesh.reshape(-1, m)
    norms = np.array([np.linalg.norm(g(p)) for p in points])
    if clearance is None:
        shaped = norms.reshape((per_axis,) * m)
        jumps = [np.max(np.abs(np.diff(shaped, axis=a))) for a in range(m)]
        clearance = 4 * max(jumps)
    best_scan = float(np.min(norms))
    if best_scan > clearance:
        raise TargetOutsideRange(
            f"coarse scan residual {best_scan:.3e} exceeds clearance {clearance:.3e}."
        )
    x = _refine_candidates(g, points[np.argsort(norms)[:8]], freq.lower, freq.upper, start_)
    residual = float(np.linalg.norm(g(x)))
    if residual > tol:
        raise TargetOutsideRange(
            f"refined residual {residual:.3e} exceeds tolerance {tol:.3e}."
        )
    return x
