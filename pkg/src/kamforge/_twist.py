import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._chain import ConjugacyChain
from ._diagnostics import NormMonitor, RunMetrics, RunResult, StepRecord, conjugacy_residual
from ._divisors import DiophantineParams, check_diophantine, solve_homological
from ._errors import (
    ConvergenceFailure,
    DivergenceDetected,
    IntersectionLost,
    InversionFailure,
    NoRootInRegion,
    NotConverged,
    NotDiophantine,
    ToleranceUnreachable,
)
from ._fourier import FourierSeries, NormFlavor, TorusGrid, invert_near_identity, truncate
from ._frequency import degree, solve_frequency_equation, translation_scale
from ._models import TwistMapModel
from ._schedule import KamSchedule, schedule_init

LOGGER = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_WINDOW_NODES = 9


@dataclass(frozen=True)
class TwistIterationState:
    """
    Iterate of the twist engine.

    ``f`` and ``g`` are the angle and action errors of the embedded circle
    ``theta -> (theta + u, r_hat + v)``; ``displacement`` is the action
    displacement of its image, whose sign change is the intersection proxy.
    """

    nu: int
    f: FourierSeries
    g: FourierSeries
    r_hat: NDArray[np.float64]
    shift_sum: NDArray[np.float64]
    chain: ConjugacyChain
    norm_f: float
    norm_g: float
    displacement_min: float
    displacement_max: float
    oscillation_ok: bool
    cutoff: int = 0

    @property
    def norm(self) -> float:
        return self.norm_f + self.norm_g

    @property
    def freq_residual(self) -> float:
        return float(np.max(np.abs(self.f.mean)))

    @property
    def intersection_margin(self) -> float:
        """Positive when the displacement strictly changes sign."""
        return min(self.displacement_max, -self.displacement_min)


def _angle_error(
    model: TwistMapModel,
    u: FourierSeries,
    v: FourierSeries,
    r_hat: NDArray[np.float64],
    grid: TorusGrid,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    theta = grid.points
    angle, action = model(theta + u.evaluate(theta), r_hat + v.evaluate(theta))
    phi = invert_near_identity(u, angle)
    return phi - theta - model.target, phi, action


def _errors(
    model: TwistMapModel,
    u: FourierSeries,
    v: FourierSeries,
    r_hat: NDArray[np.float64],
    offset: NDArray[np.float64],
    grid: TorusGrid,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    # the image should be (theta + p + u(theta + p), r_hat + v(theta + p) - offset)
    f, phi, action = _angle_error(model, u, v, r_hat, grid)
    g = action - (r_hat + v.evaluate(phi) - offset)
    return f, g


def _evaluate_state(
    nu: int,
    model: TwistMapModel,
    chain: ConjugacyChain,
    grid: TorusGrid,
    cutoff: int,
    shift_sum: NDArray[np.float64],
) -> TwistIterationState:
    assert chain.v is not None
    f, g = _errors(model, chain.u, chain.v, chain.base, chain.offset, grid)
    displacement = g - chain.offset
    spread = float(np.max(np.abs(displacement - displacement.mean(axis=0))))
    floor = 100 * _EPS * (1 + float(np.max(np.abs(chain.base))))
    return TwistIterationState(
        nu=nu,
        f=grid.analyze(f),
        g=grid.analyze(g),
        r_hat=chain.base,
        shift_sum=shift_sum,
        chain=chain,
        norm_f=float(np.max(np.abs(f))),
        norm_g=float(np.max(np.abs(g))),
        displacement_min=float(np.min(displacement)),
        displacement_max=float(np.max(displacement)),
        oscillation_ok=bool(np.max(np.abs(displacement)) <= 2 * spread + floor),
        cutoff=cutoff,
    )


def _check_intersection(model: TwistMapModel, state: TwistIterationState) -> None:
    floor = 100 * _EPS * (1 + float(np.max(np.abs(state.r_hat))))
    if state.intersection_margin >= -floor:
        if not state.oscillation_ok:
            LOGGER.warning(
                "step %d: displacement exceeds twice its oscillation", state.nu
            )
        return
    message = (
        f"action displacement stays in [{state.displacement_min:.3e}, "
        f"{state.displacement_max:.3e}] at step {state.nu}."
    )
    if model.intersection:
        raise IntersectionLost(message)
    LOGGER.debug("no intersection: %s", message)


def _action_part(
    model: TwistMapModel,
    u: FourierSeries,
    v: FourierSeries,
    r_hat: NDArray[np.float64],
    offset: NDArray[np.float64],
    grid: TorusGrid,
    cutoff: int,
    guard: float,
) -> tuple[NDArray[np.float64], FourierSeries]:
    """New offset and the solution ``V`` of the action equation at ``r_hat``."""
    _, g = _errors(model, u, v, r_hat, offset, grid)
    g_head, g_mean, _ = truncate(grid.analyze(g), cutoff)
    return offset - np.real(np.atleast_1d(g_mean)), solve_homological(
        g_head, model.target, guard
    )


def _drift_window(
    model: TwistMapModel,
    u: FourierSeries,
    action: Callable[[NDArray[np.float64]], FourierSeries],
    grid: TorusGrid,
    center: NDArray[np.float64],
    width: float,
) -> Callable[[NDArray[np.float64]], NDArray[np.float64]]:
    """
    Accumulated drift ``mean(f) + p - omega`` near ``center``.

    ``action(r)`` is the action part of the circle at base action ``r``.
    """
    p = model.target

    def direct(r: NDArray[np.float64]) -> NDArray[np.float64]:
        r = np.atleast_1d(r)
        f, _, _ = _angle_error(model, u, action(r), r, grid)
        return f.mean(axis=0) + p - model.freq(r)

    if model.dim != 1:
        return direct
    lower = max(float(model.freq.lower[0]), float(center[0]) - width / 2)
    upper = min(float(model.freq.upper[0]), float(center[0]) + width / 2)
    if not upper > lower:
        return direct
    window = np.polynomial.Chebyshev.interpolate(
        lambda x: np.array([direct(np.array([t]))[0] for t in x]),
        _WINDOW_NODES - 1,
        domain=[lower, upper],
    )

    def drift(r: NDArray[np.float64]) -> NDArray[np.float64]:
        x = float(np.atleast_1d(r)[0])
        if lower <= x <= upper:
            return np.array([window(x)])
        return direct(r)

    return drift


def twist_kam_step(
    state: TwistIterationState,
    model: TwistMapModel,
    schedule: KamSchedule,
    *,
    kcap: int = 256,
    guard: float = 1e-8,
    freq_tol: float = 1e-12,
    translate: bool = True,
) -> TwistIterationState:
    """
    One conjugation step of the twist engine.

    The frequency equation fixes the new base action first, with the
    action part re-solved at every trial action. At that action the error's
    mean moves into the normal-form offset and ``V`` solves the action
    equation. The angle error is then re-evaluated with the new action part,
    ``U`` solves the angle equation and the circle is re-parametrized by
    ``id + U``.

    Parameters
    ----------
    state : TwistIterationState
        The current iterate.
    model : TwistMapModel
        The map.
    schedule : KamSchedule
        Supplies ``K[nu + 1]`` and the drift window ``4 s[nu]``.
    kcap : int, optional
        Largest cutoff, by default 256.
    guard : float, optional
        Small-divisor guard, by default 1e-8.
    freq_tol : float, optional
        Tolerance of the frequency equation, by default 1e-12.
    translate : bool, optional
        Whether to solve the frequency equation, by default True.

    Returns
    -------
    TwistIterationState
        The iterate at step ``nu + 1``.

    Raises
    ------
    IntersectionLost
        If the new image no longer crosses the circle.

    """
    nu, chain = state.nu, state.chain
    assert chain.v is not None
    p = chain.frequency
    cutoff = schedule.cutoff(nu, cap=kcap)
    grid = TorusGrid.for_cutoff(model.dim, cutoff)
    u, v, r_hat = chain.u, chain.v, chain.base

    def action(r: NDArray[np.float64]) -> FourierSeries:
        _, V = _action_part(model, u, v, r, chain.offset, grid, cutoff, guard)
        return v + V

    if translate:
        drift = _drift_window(model, u, action, grid, r_hat, 4 * float(schedule.s[nu]))
        r_next = solve_frequency_equation(
            model.freq,
            drift,
            p,
            r_hat,
            tol=freq_tol,
            ledger=chain.translations,
            index=nu + 1,
            mu=translation_scale(model.freq, state.norm_f),
        )
    else:
        r_next = r_hat
    # both homological equations are solved at the translated action
    offset, V = _action_part(model, u, v, r_next, chain.offset, grid, cutoff, guard)
    v_new = v + V
    f, _ = _errors(model, u, v_new, r_next, offset, grid)
    f_head, _, remainder = truncate(grid.analyze(f), cutoff)
    U = solve_homological(f_head, p, guard)
    theta = grid.points
    step = U.evaluate(theta)
    u_next = grid.analyze(step + u.evaluate(theta + step))
    v_next = grid.analyze(v_new.evaluate(theta + step))
    new_chain = chain.extend((U, V), u_next, v_next, base=r_next, offset=offset)
    new = _evaluate_state(
        nu + 1,
        model,
        new_chain,
        grid,
        cutoff,
        state.shift_sum + (r_next - r_hat),
    )
    _check_intersection(model, new)
    LOGGER.debug(
        "step %d: K=%d |f|=%.3e |g|=%.3e tail=%.3e r=%s",
        nu + 1,
        cutoff,
        new.norm_f,
        new.norm_g,
        remainder,
        r_next,
    )
    return new


def _check_degree(model: TwistMapModel) -> int | None:
    value = degree(model.freq, model.target)
    if value == 0:
        raise NoRootInRegion(f"deg(omega, E, p) = 0 for p = {model.target}.")
    return value


def twist_kam_run(
    model: TwistMapModel,
    *,
    tol: float = 1e-12,
    freq_tol: float = 1e-10,
    max_steps: int = 40,
    kcap: int = 256,
    guard: float = 1e-8,
    diophantine: DiophantineParams | None = None,
    schedule: KamSchedule | None = None,
    translate: bool = True,
) -> RunResult:
    """
    Iterate :func:`twist_kam_step` until ``|f| + |g| < tol``.

    Parameters
    ----------
    model : TwistMapModel
        The map and its base action.
    tol : float, optional
        Grid sup of ``|f| + |g|`` at which the run stops, by default 1e-12.
    freq_tol : float, optional
        Bound on the final frequency residual, by default 1e-10.
    max_steps : int, optional
        Step budget, by default 40.
    kcap : int, optional
        Largest cutoff, by default 256.
    guard : float, optional
        Small-divisor guard, by default 1e-8.
    diophantine : DiophantineParams | None, optional
        Constants checked against ``p`` before the run.
    schedule : KamSchedule | None, optional
        By default built from ``model.epsilon`` with ``n = m = dim``.
    translate : bool, optional
        ``False`` disables the action translation, by default True.

    Returns
    -------
    RunResult
        The converged run; ``shift_sum`` is the total action translation
        and ``offset`` the action drift of the normal form.

    Raises
    ------
    NotDiophantine
        If ``p`` fails the Diophantine check.
    NoRootInRegion
        If the degree of the frequency map at ``p`` vanishes.
    ConvergenceFailure
        On divergence, a lost intersection or an exhausted budget; the
        partial result is attached as ``result``.

    """
    p = model.target
    report = check_diophantine(p, diophantine or DiophantineParams())
    if not report.satisfied:
        raise NotDiophantine(report)
    deg = _check_degree(model)
    LOGGER.debug("degree of omega at p: %s", deg)
    if schedule is None and model.epsilon > 0:
        schedule = schedule_init(model.epsilon, n=model.dim, m=model.dim)
    chain = ConjugacyChain.identity(model.dim, p, model.r_star, twist=True)
    cutoff = schedule.cutoff(0, cap=kcap) if schedule is not None else 8
    grid = TorusGrid.for_cutoff(model.dim, cutoff)
    state = _evaluate_state(0, model, chain, grid, 0, np.zeros(model.dim))
    metrics = RunMetrics("twist")
    monitor = NormMonitor()
    previous: TwistIterationState | None = None
    step_size = 0.0
    try:
        _check_intersection(model, state)
        while True:
            metrics.append(_twist_record(state, previous, model, schedule, step_size))
            monitor.observe(state.nu, state.norm)
            if state.norm < tol:
                break
            if state.nu >= max_steps or schedule is None:
                raise NotConverged(
                    f"|f| + |g| = {state.norm:.3e} after {state.nu} steps (tol {tol:.1e})."
                )
            try:
                new = twist_kam_step(
                    state,
                    model,
                    schedule,
                    kcap=kcap,
                    guard=guard,
                    freq_tol=min(freq_tol, tol),
                    translate=translate,
                )
            except InversionFailure as e:
                raise DivergenceDetected(
                    f"conjugacy lost invertibility at step {state.nu + 1}."
                ) from e
            U, V = new.chain.parts[-1]
            step_size = max(U.norm(), V.norm())
            previous, state = state, new
        if state.freq_residual > freq_tol:
            raise ToleranceUnreachable(
                f"final frequency residual {state.freq_residual:.3e} exceeds {freq_tol:.1e}."
            )
    except ConvergenceFailure as err:
        err.result = RunResult(
            "twist",
            False,
            state.r_hat,
            state.chain,
            metrics,
            schedule,
            freq_residual=state.freq_residual,
            error=type(err).__name__,
            message=str(err),
        )
        LOGGER.info("twist run stopped at step %d: %s", state.nu, err)
        raise
    residual = conjugacy_residual(state.chain, model)
    LOGGER.info(
        "twist run converged in %d steps: r=%s shift=%s residual=%.3e",
        state.nu,
        state.r_hat,
        state.shift_sum,
        residual,
    )
    return RunResult(
        "twist",
        True,
        state.r_hat,
        state.chain,
        metrics,
        schedule,
        freq_residual=state.freq_residual,
        residual=residual,
    )


def _twist_record(
    state: TwistIterationState,
    previous: TwistIterationState | None,
    model: TwistMapModel,
    schedule: KamSchedule | None,
    step_size: float,
) -> StepRecord:
    h = 0.0
    if schedule is not None and state.nu < len(schedule.h):
        h = float(schedule.h[state.nu])
    head = truncate(state.f, state.cutoff).series if state.cutoff else state.f
    shift = np.zeros(model.dim) if previous is None else state.r_hat - previous.r_hat
    travelled = sum(float(np.abs(s.shift).sum()) for s in state.chain.translations.steps)
    return StepRecord(
        nu=state.nu,
        K=state.cutoff,
        norm_grid=state.norm_f,
        norm_coeff=head.norm(h, NormFlavor.COEFF_WEIGHTED),
        shift=float(shift.sum()),
        freq_residual=state.freq_residual,
        g_norm=state.norm_g,
        shift_abs=float(np.abs(shift).sum()),
        shift_sum_abs=travelled,
        intersection_margin=state.intersection_margin,
        transform_norm=step_size,
        drift_norm=float(np.abs(model.target - model.freq(state.r_hat)).sum()),
        oscillation_ok=state.oscillation_ok,
    )
