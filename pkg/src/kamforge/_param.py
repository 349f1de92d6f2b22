import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._chain import ConjugacyChain
from ._diagnostics import NormMonitor, RunMetrics, RunResult, StepRecord, conjugacy_residual
from ._divisors import DiophantineParams, check_diophantine, solve_homological
from ._errors import (
    ConvergenceFailure,
    DivergenceDetected,
    InversionFailure,
    NotConverged,
    NotDiophantine,
    ToleranceUnreachable,
)
from ._fourier import FourierSeries, NormFlavor, TorusGrid, invert_near_identity, truncate
from ._frequency import solve_frequency_equation, translation_scale
from ._models import ParamMapModel
from ._schedule import KamSchedule, schedule_init

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamIterationState:
    """
    Iterate of the parameter engine.

    ``f`` is the perturbation of the conjugated map at ``xi`` and
    ``norm`` its sup over the working grid.
    """

    nu: int
    f: FourierSeries
    xi: NDArray[np.float64]
    chain: ConjugacyChain
    norm: float
    cutoff: int = 0

    @property
    def freq_residual(self) -> float:
        return float(np.max(np.abs(self.f.mean)))


def _error_values(
    model: ParamMapModel, u: FourierSeries, xi: NDArray[np.float64], grid: TorusGrid
) -> NDArray[np.float64]:
    # phi = (id + u)^-1 F_xi (id + u) - id - q on the grid
    theta = grid.points
    image = model.step(theta + u.evaluate(theta), xi)
    phi = invert_near_identity(u, image)
    return phi - theta - model.target


def _evaluate_state(
    nu: int,
    model: ParamMapModel,
    chain: ConjugacyChain,
    grid: TorusGrid,
    cutoff: int,
) -> ParamIterationState:
    values = _error_values(model, chain.u, chain.base, grid)
    return ParamIterationState(
        nu=nu,
        f=grid.analyze(values),
        xi=chain.base,
        chain=chain,
        norm=float(np.max(np.abs(values))),
        cutoff=cutoff,
    )


def param_kam_step(
    state: ParamIterationState,
    model: ParamMapModel,
    schedule: KamSchedule,
    *,
    kcap: int = 256,
    guard: float = 1e-8,
    freq_tol: float = 1e-12,
    translate: bool = True,
) -> ParamIterationState:
    """
    One conjugation step of the parameter engine.

    The frequency equation fixes the new parameter first; ``U`` then solves
    the homological equation for the error at that parameter.

    Parameters
    ----------
    state : ParamIterationState
        The current iterate.
    model : ParamMapModel
        The map.
    schedule : KamSchedule
        Supplies the cutoff ``K[nu + 1]``.
    kcap : int, optional
        Largest cutoff, by default 256.
    guard : float, optional
        Small-divisor guard, by default 1e-8.
    freq_tol : float, optional
        Tolerance of the frequency equation, by default 1e-12.
    translate : bool, optional
        Whether to solve the frequency equation; ``False`` keeps the
        parameter fixed. By default True.

    Returns
    -------
    ParamIterationState
        The iterate at step ``nu + 1``.

    """
    nu, chain = state.nu, state.chain
    q = chain.frequency
    cutoff = schedule.cutoff(nu, cap=kcap)
    grid = TorusGrid.for_cutoff(model.dim, cutoff)
    u = chain.u
    if translate:

        def drift(xi: NDArray[np.float64]) -> NDArray[np.float64]:
            mean = _error_values(model, u, xi, grid).mean(axis=0)
            return mean + q - model.freq(xi)

        xi = solve_frequency_equation(
            model.freq,
            drift,
            q,
            state.xi,
            tol=freq_tol,
            ledger=chain.translations,
            index=nu + 1,
            mu=translation_scale(model.freq, state.norm),
        )
    else:
        xi = state.xi
    # U solves the error at the translated parameter
    f = grid.analyze(_error_values(model, u, xi, grid))
    head, _, remainder = truncate(f, cutoff)
    U = solve_homological(head, q, guard)
    theta = grid.points
    step = U.evaluate(theta)
    u_next = grid.analyze(step + u.evaluate(theta + step))
    new = _evaluate_state(nu + 1, model, chain.extend((U,), u_next, base=xi), grid, cutoff)
    LOGGER.debug(
        "step %d: K=%d |f|=%.3e tail=%.3e xi=%s",
        nu + 1,
        cutoff,
        new.norm,
        remainder,
        xi,
    )
    return new


def param_kam_run(
    model: ParamMapModel,
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
    Iterate :func:`param_kam_step` until the perturbation is below ``tol``.

    Parameters
    ----------
    model : ParamMapModel
        The map and its base parameter.
    tol : float, optional
        Grid sup of the perturbation at which the run stops, by default 1e-12.
    freq_tol : float, optional
        Bound on the final frequency residual, by default 1e-10.
    max_steps : int, optional
        Step budget, by default 40.
    kcap : int, optional
        Largest cutoff, by default 256.
    guard : float, optional
        Small-divisor guard, by default 1e-8.
    diophantine : DiophantineParams | None, optional
        Constants checked against ``q`` before the run.
    schedule : KamSchedule | None, optional
        By default built from ``model.epsilon`` with ``n = m = dim``.
    translate : bool, optional
        ``False`` disables the parameter translation, by default True.

    Returns
    -------
    RunResult
        The converged run.

    Raises
    ------
    NotDiophantine
        If ``q`` fails the Diophantine check.
    ConvergenceFailure
        On divergence, a failed translation or an exhausted budget; the
        partial result is attached as ``result``.

    """
    q = model.target
    report = check_diophantine(q, diophantine or DiophantineParams())
    if not report.satisfied:
        raise NotDiophantine(report)
    if schedule is None and model.epsilon > 0:
        schedule = schedule_init(
            model.epsilon, n=model.dim, m=model.freq.domain_dim, h0=model.h0
        )
    chain = ConjugacyChain.identity(model.dim, q, model.xi_star)
    cutoff = schedule.cutoff(0, cap=kcap) if schedule is not None else 8
    state = _evaluate_state(0, model, chain, TorusGrid.for_cutoff(model.dim, cutoff), 0)
    metrics = RunMetrics("param")
    monitor = NormMonitor()
    _check_collar(model, state.norm)
    previous: ParamIterationState | None = None
    step_size = 0.0
    try:
        while True:
            metrics.append(_param_record(state, previous, model, schedule, step_size))
            monitor.observe(state.nu, state.norm)
            if state.norm < tol:
                break
            if state.nu >= max_steps or schedule is None:
                raise NotConverged(
                    f"|f| = {state.norm:.3e} after {state.nu} steps (tol {tol:.1e})."
                )
            try:
                new = param_kam_step(
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
            step_size = new.chain.parts[-1][0].norm()
            previous, state = state, new
        if state.freq_residual > freq_tol:
            raise ToleranceUnreachable(
                f"final frequency residual {state.freq_residual:.3e} exceeds {freq_tol:.1e}."
            )
    except ConvergenceFailure as err:
        err.result = RunResult(
            "param",
            False,
            state.xi,
            state.chain,
            metrics,
            schedule,
            freq_residual=state.freq_residual,
            error=type(err).__name__,
            message=str(err),
        )
        LOGGER.info("parameter run stopped at step %d: %s", state.nu, err)
        raise
    residual = conjugacy_residual(state.chain, model)
    LOGGER.info(
        "parameter run converged in %d steps: xi=%s residual=%.3e",
        state.nu,
        state.xi,
        residual,
    )
    return RunResult(
        "param",
        True,
        state.xi,
        state.chain,
        metrics,
        schedule,
        freq_residual=state.freq_residual,
        residual=residual,
    )


def _check_collar(model: ParamMapModel, size: float) -> None:
    gap = float(
        np.min(
            np.concatenate(
                [model.xi_star - model.freq.lower, model.freq.upper - model.xi_star]
            )
        )
    )
    if gap < 2 * size:
        LOGGER.warning(
            "base parameter lies %.3e from the box boundary, less than 2|f0| = %.3e",
            gap,
            2 * size,
        )


def _param_record(
    state: ParamIterationState,
    previous: ParamIterationState | None,
    model: ParamMapModel,
    schedule: KamSchedule | None,
    step_size: float,
) -> StepRecord:
    h = 0.0
    if schedule is not None and state.nu < len(schedule.h):
        h = float(schedule.h[state.nu])
    head = truncate(state.f, state.cutoff).series if state.cutoff else state.f
    shift = 0.0 if previous is None else float(np.abs(state.xi - previous.xi).sum())
    return StepRecord(
        nu=state.nu,
        K=state.cutoff,
        norm_grid=state.norm,
        norm_coeff=head.norm(h, NormFlavor.COEFF_WEIGHTED),
        shift=shift,
        freq_residual=state.freq_residual,
        transform_norm=step_size,
        drift_norm=float(np.abs(model.target - model.freq(state.xi)).sum()),
    )
