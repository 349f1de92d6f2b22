import math

import numpy as np
import pytest

from kamforge._chain import ConjugacyChain
from kamforge._diagnostics import conjugacy_residual, fit_convergence_order, rotation_number
from kamforge._divisors import DiophantineParams, golden_like_frequency
from kamforge._errors import ConvergenceFailure, NotDiophantine
from kamforge._fourier import TorusGrid
from kamforge._frequency import FrequencyMap, cauchy_monitor
from kamforge._models import ParamMapModel
from kamforge._param import _evaluate_state, param_kam_run, param_kam_step
from kamforge._schedule import schedule_init
from kamforge.testbed import get_entry


def _initial_state(model: ParamMapModel, cutoff: int = 8):
    chain = ConjugacyChain.identity(model.dim, model.target, model.xi_star)
    return _evaluate_state(0, model, chain, TorusGrid.for_cutoff(model.dim, cutoff), 0)


@pytest.mark.parametrize(
    "name, shift", [("rotation", -1e-3), ("zero_mean_rotation", 0.0)]
)
def test_first_step_translation(name: str, shift: float) -> None:
    model = get_entry(name).model(1e-3)
    assert isinstance(model, ParamMapModel)
    state = _initial_state(model)
    assert state.norm == pytest.approx(2e-3 if shift else 1e-3, rel=1e-9)
    new = param_kam_step(state, model, schedule_init(1e-3))
    assert new.xi[0] - state.xi[0] == pytest.approx(shift, abs=1e-12)
    assert new.nu == 1
    assert new.norm < 1e-5
    assert len(new.chain.translations.steps) == 1
    assert new.chain.translations.steps[0].index == 1


def test_first_step_two_dimensional() -> None:
    q = np.concatenate([golden_like_frequency([1]), golden_like_frequency([2])])
    freq = FrequencyMap(lambda x: x, q - 0.5, q + 0.5, base=q)
    model = ParamMapModel(
        freq,
        lambda th, xi: np.stack([1 + np.cos(th[:, 0]), 0.5 + np.cos(th[:, 1])], axis=1),
        epsilon=1e-3,
    )
    state = _initial_state(model)
    new = param_kam_step(state, model, schedule_init(1e-3, n=2, m=2))
    assert new.xi - q == pytest.approx([-1e-3, -5e-4], abs=1e-12)


@pytest.mark.parametrize("name", ["rotation", "zero_mean_rotation"])
def test_run_converges(name: str) -> None:
    model = get_entry(name).model()
    assert isinstance(model, ParamMapModel)
    result = param_kam_run(model)
    assert result.converged
    assert result.status == "converged"
    assert result.steps >= 1
    assert result.residual is not None and result.residual <= 1e-10
    assert result.freq_residual is not None and result.freq_residual <= 1e-10
    assert len(result.chain.translations.steps) == result.steps
    assert result.shift_sum == pytest.approx(result.xi_inf - model.xi_star, abs=1e-15)
    estimate = rotation_number(lambda th: model.step(th, result.xi_inf), [0.3])
    assert estimate.value == pytest.approx(float(model.target[0]), abs=1e-9)


def test_run_first_order_shift() -> None:
    model = get_entry("rotation").model(1e-4)
    result = param_kam_run(model)
    assert result.xi_inf[0] - model.xi_star[0] == pytest.approx(-1e-4, rel=1e-2)


def test_run_nowhere_hoelder_parameter_field() -> None:
    model = get_entry("nowhere_hoelder").model()
    result = param_kam_run(model)
    assert result.converged
    assert result.residual is not None and result.residual <= 1e-10
    assert result.freq_residual is not None and result.freq_residual <= 1e-10
    assert not cauchy_monitor(result.chain.translations).flagged


@pytest.mark.parametrize("epsilon", [1e-2, 3e-2])
def test_run_quadratic_convergence(epsilon: float) -> None:
    result = param_kam_run(get_entry("rotation").model(epsilon))
    assert result.converged
    assert fit_convergence_order(result.metrics.norms) >= 1.5


def test_run_unperturbed() -> None:
    model = get_entry("rotation").model(0.0)
    result = param_kam_run(model)
    assert result.converged
    assert result.steps == 0
    assert result.schedule is None
    assert result.xi_inf == pytest.approx(model.xi_star)


def test_run_rejects_resonant_target() -> None:
    model = get_entry("rotation").model(1e-4, target=math.pi)
    with pytest.raises(NotDiophantine):
        param_kam_run(model)


def test_run_diophantine_constants_are_configurable() -> None:
    model = get_entry("rotation").model(1e-4)
    with pytest.raises(NotDiophantine):
        param_kam_run(model, diophantine=DiophantineParams(gamma=10.0))


def test_run_without_translation_stalls() -> None:
    model = get_entry("rotation").model(1e-4)
    with pytest.raises(ConvergenceFailure) as info:
        param_kam_run(model, translate=False, max_steps=6)
    result = info.value.result
    assert result is not None
    assert result.status == "diverged"
    assert result.freq_residual > 1e-6


def test_run_step_budget() -> None:
    model = get_entry("rotation").model(1e-2)
    with pytest.raises(ConvergenceFailure) as info:
        param_kam_run(model, max_steps=1)
    assert type(info.value).__name__ == "NotConverged"
    assert info.value.result.steps == 1
    assert info.value.result.to_record()["error"] == "NotConverged"


def test_run_metrics_columns() -> None:
    result = param_kam_run(get_entry("rotation").model(1e-4))
    rows = result.metrics.to_csv().splitlines()
    assert rows[0] == "nu,K,norm_grid,norm_coeff,shift,freq_residual"
    assert len(rows) == result.steps + 2
    norms = result.metrics.norms
    assert norms[-1] < 1e-12
    assert all(b < a for a, b in zip(norms, norms[1:], strict=False))


def test_truncated_run_residual_tracks_norm() -> None:
    model = get_entry("rotation").model(1e-2)
    with pytest.raises(ConvergenceFailure) as info:
        param_kam_run(model, max_steps=2)
    result = info.value.result
    norm = result.metrics.steps[-1].norm_grid
    residual = conjugacy_residual(result.chain, model)
    assert norm / 3 <= residual <= 3 * norm


def test_translation_ledger_is_cauchy() -> None:
    result = param_kam_run(get_entry("rotation").model(1e-4))
    report = cauchy_monitor(result.chain.translations)
    assert not report.flagged
    assert report.ratios[0] == pytest.approx(0.5, rel=1e-6)


def test_run_is_deterministic() -> None:
    first = param_kam_run(get_entry("nowhere_hoelder").model())
    second = param_kam_run(get_entry("nowhere_hoelder").model())
    assert first.metrics.to_csv() == second.metrics.to_csv()
    assert first.chain.translations.to_csv() == second.chain.translations.to_csv()
