import math
import warnings
from pathlib import Path

import numpy as np
import pytest

from kamforge._chain import ConjugacyChain
from kamforge._diagnostics import (
    PARAM_COLUMNS,
    TWIST_COLUMNS,
    NormMonitor,
    RotationMethod,
    RunMetrics,
    StepRecord,
    _hypotheses,
    conjugacy_residual,
    fit_convergence_order,
    hypothesis_report,
    rotation_number,
)
from kamforge._errors import DivergenceDetected, TooFewPoints
from kamforge._fourier import FourierSeries
from kamforge._modulus import lipschitz
from kamforge._schedule import schedule_init
from kamforge.testbed import get_entry, standard_family


@pytest.mark.parametrize("method", list(RotationMethod))
def test_rotation_number_of_rigid_rotation(method: RotationMethod, golden: float) -> None:
    estimate = rotation_number(lambda x: x + golden, [0.1], method=method)
    assert estimate.value == pytest.approx(golden, abs=1e-12)
    assert estimate.uncertainty < 1e-12
    assert estimate.iters == 10_000


def test_rotation_number_of_batch() -> None:
    shifts = np.array([[0.1], [0.2]])
    estimate = rotation_number(lambda x: x + shifts, np.zeros((2, 1)))
    assert estimate.value == pytest.approx([0.1, 0.2], abs=1e-12)


def test_rotation_number_of_circle_map(golden: float) -> None:
    model = get_entry("rotation").model(0.0)
    estimate = rotation_number(lambda th: model.step(th, model.xi_star), [1.0])
    assert estimate.value == pytest.approx(golden, abs=1e-12)


def test_rotation_number_requires_long_orbit() -> None:
    with pytest.raises(ValueError, match="10000"):
        rotation_number(lambda x: x, [0.0], iters=100)


def test_rotation_number_of_standard_map_orbit() -> None:
    model = standard_family(0.0)
    estimate = rotation_number(model.state_map, [0.1, 0.3])
    assert estimate.value == pytest.approx(0.3, abs=1e-12)


def test_conjugacy_residual_identity() -> None:
    model = standard_family(0.0)
    chain = ConjugacyChain.identity(1, model.target, model.r_star, twist=True)
    assert conjugacy_residual(chain, model) < 1e-14
    param = get_entry("rotation").model(0.0)
    chain = ConjugacyChain.identity(1, param.target, param.xi_star)
    assert conjugacy_residual(chain, param) < 1e-14


def test_conjugacy_residual_detects_wrong_frequency(golden: float) -> None:
    model = standard_family(0.0)
    chain = ConjugacyChain.identity(1, model.target, model.r_star, twist=True)
    assert conjugacy_residual(chain, model, frequency=golden + 1e-3) == pytest.approx(1e-3)


def test_conjugacy_residual_needs_action_part() -> None:
    model = standard_family(0.0)
    chain = ConjugacyChain.identity(1, model.target, model.r_star)
    with pytest.raises(ValueError):
        conjugacy_residual(chain, model)


@pytest.mark.parametrize("order", [1.5, 2.0])
def test_fit_convergence_order(order: float) -> None:
    norms = [1e-2 ** (order**k) for k in range(5)]
    assert fit_convergence_order(norms) == pytest.approx(order, rel=1e-9)


def test_fit_convergence_order_needs_three_norms() -> None:
    with pytest.raises(TooFewPoints):
        fit_convergence_order([1e-2, 1e-4, 1e-20, 1e-30])


def test_norm_monitor() -> None:
    monitor = NormMonitor()
    for nu, norm in enumerate([1e-2, 1e-4, 2e-4, 1e-6]):
        monitor.observe(nu, norm)
    with pytest.raises(DivergenceDetected, match="consecutive"):
        for nu, norm in enumerate([1e-3, 1e-2, 1e-1]):
            monitor.observe(nu, norm)
    with pytest.raises(DivergenceDetected, match="non-finite"):
        NormMonitor().observe(0, math.nan)


def test_norm_monitor_ignores_rounding_noise() -> None:
    monitor = NormMonitor()
    for nu, norm in enumerate([1e-15, 2e-15, 3e-15, 4e-15]):
        monitor.observe(nu, norm)


def _record(nu: int, norm: float) -> StepRecord:
    return StepRecord(nu=nu, K=8, norm_grid=norm, norm_coeff=norm, shift=0.0, freq_residual=0.0)


def test_run_metrics_csv(tmp_path: Path) -> None:
    metrics = RunMetrics("param")
    metrics.append(_record(0, 1e-3))
    metrics.append(_record(1, 1e-6))
    path = tmp_path / "metrics.csv"
    text = metrics.to_csv(path)
    assert path.read_text(encoding="utf-8") == text
    lines = text.splitlines()
    assert lines[0] == ",".join(PARAM_COLUMNS)
    assert lines[2].split(",")[:3] == ["1", "8", "9.9999999999999995e-07"]
    assert metrics.norms == [1e-3, 1e-6]
    assert RunMetrics("twist").columns == TWIST_COLUMNS


def test_step_record_total_norm() -> None:
    record = StepRecord(0, 8, 1e-3, 1e-3, 0.0, 0.0, g_norm=2e-3)
    assert record.total_norm == pytest.approx(3e-3)


def test_hypothesis_report_without_schedule() -> None:
    metrics = RunMetrics("param")
    metrics.append(_record(0, 1e-3))
    report = hypothesis_report(None, metrics)
    assert report.flags == []
    assert report.order is None
    assert report.holds("H1")


@pytest.mark.parametrize("epsilon, holds", [(1e-40, True), (0.5, False)])
def test_hypothesis_report_h3_h5(epsilon: float, holds: bool) -> None:
    metrics = RunMetrics("twist")
    metrics.append(_record(0, epsilon))
    report = hypothesis_report(schedule_init(epsilon), metrics)
    assert report.steps == 1
    assert set(report.flags[0]) == {"H1", "H2", "H3", "H4", "H5"}
    assert report.holds("H3") is holds
    assert report.holds("H5") is holds
    record = report.to_record()
    assert record["margins"][0]["H3"] == pytest.approx(report.margins[0]["H3"])


def test_parameter_report_names_drift_hypothesis() -> None:
    metrics = RunMetrics("param")
    metrics.append(_record(0, 1e-3))
    report = hypothesis_report(schedule_init(1e-3), metrics)
    assert "H6" in report.flags[0]
    assert "H2" not in report.flags[0]


def test_chain_embedding_and_record() -> None:
    u = FourierSeries.from_modes({1: -0.05j, -1: 0.05j})
    chain = ConjugacyChain.identity(1, [0.5], [2.0], twist=True)
    chain = chain.extend((u, u), u, u, base=[2.5], offset=[1e-3])
    angle, action = chain.embed(np.array([0.3]))
    assert angle[0, 0] == pytest.approx(0.3 + 0.1 * math.sin(0.3))
    assert action[0, 0] == pytest.approx(2.5 + 0.1 * math.sin(0.3))
    assert chain.depth == 1
    assert chain.is_invertible()
    assert chain.transform_norm() == pytest.approx(0.1, rel=1e-2)
    record = chain.to_record()
    assert record["base"] == [2.5]
    assert record["offset"] == [1e-3]
    assert record["cutoffs"] == [[1, 1]]
    assert FourierSeries.from_record(record["v"]).coefficient(1) == pytest.approx(-0.05j)


def test_hypotheses_after_scale_underflow() -> None:
    schedule = schedule_init(1e-3)
    assert schedule.mu[25] == 0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        result = _hypotheses(schedule, 25, _record(25, 1e-14), "param", lipschitz())
    assert result["H1"] == (True, 0.0)
    assert result["H3"][0]
