import logging

import numpy as np
import pytest

from kamforge._errors import BoundaryHit, NoRootInRegion, TargetOutsideRange
from kamforge._frequency import (
    FrequencyMap,
    TranslationLedger,
    cauchy_monitor,
    degree,
    degree_1d,
    degree_2d,
    estimate_upper_modulus,
    solve_frequency_equation,
    solve_frequency_range_mode,
    translation_scale,
)
from kamforge._modulus import lipschitz
from kamforge.testbed import get_entry, weakly_convex_frequency


def _quadratic_2d(x: np.ndarray) -> np.ndarray:
    return np.stack([2 * x[:, 0] + x[:, 1], x[:, 1] + 0.1 * x[:, 0] ** 2], axis=1)


def test_frequency_map_shapes() -> None:
    freq = FrequencyMap(_quadratic_2d, [-1, -1], [1, 1])
    assert freq.domain_dim == 2
    assert freq.range_dim == 2
    assert freq([0.5, 0.0]) == pytest.approx([1.0, 0.025])
    assert freq.mesh(3).shape == (9, 2)
    assert freq(freq.mesh(3)).shape == (9, 2)


def test_frequency_map_rejects_empty_box() -> None:
    with pytest.raises(ValueError, match="box"):
        FrequencyMap(lambda x: x, [1.0], [0.0])


@pytest.mark.parametrize(
    "name, expected",
    [
        ("identity_1d", 1),
        ("reversed_1d", -1),
        ("square_1d", 0),
        ("cubic", 1),
        ("identity_2d", 1),
        ("complex_square", 2),
    ],
)
def test_degree_of_catalog_maps(name: str, expected: int) -> None:
    entry = get_entry(name)
    assert degree(entry.model(), entry.target) == expected


def test_degree_1d_subinterval() -> None:
    freq = FrequencyMap(lambda x: x**2, [-1.0], [1.0])
    assert degree_1d(freq, (0.0, 1.0), p=0.25) == 1
    assert degree_1d(freq, (-1.0, 0.0), p=0.25) == -1


def test_degree_2d_subbox() -> None:
    freq = get_entry("complex_square").model()
    assert degree_2d(freq, ([0.1, -0.5], [1.0, 0.5]), p=(0.1, 0.0)) == 1


def test_degree_boundary_hit() -> None:
    with pytest.raises(BoundaryHit):
        degree(get_entry("identity_1d").model(), 1.0)
    with pytest.raises(BoundaryHit):
        degree(get_entry("identity_2d").model(), (1.0, 0.0))


def test_degree_above_two_dimensions() -> None:
    freq = FrequencyMap(lambda x: x, np.zeros(3), np.ones(3))
    assert degree(freq, np.full(3, 0.5)) is None


def test_solve_weakly_convex_inverse() -> None:
    freq = weakly_convex_frequency(3)
    assert freq.base is not None
    r_star = float(freq.base[0])
    p = float(freq(freq.base)[0])
    root = solve_frequency_equation(freq, None, p + 1e-6, freq.base)
    assert root[0] - r_star == pytest.approx(0.01, rel=1e-9)


def test_solve_with_drift_and_ledger() -> None:
    freq = FrequencyMap(lambda x: x, [-1.0], [1.0], modulus_upper=lipschitz())
    ledger = TranslationLedger()
    root = solve_frequency_equation(
        freq, lambda x: 0.1 * np.sin(x), 0.3, [0.0], ledger=ledger, index=1, mu=0.5
    )
    assert root[0] + 0.1 * np.sin(root[0]) == pytest.approx(0.3, abs=1e-12)
    assert len(ledger.steps) == 1
    assert ledger.steps[0].index == 1
    assert ledger.cumulative == pytest.approx(root)


def test_solve_no_root_in_region() -> None:
    freq = FrequencyMap(lambda x: x, [-1.0], [1.0])
    with pytest.raises(NoRootInRegion):
        solve_frequency_equation(freq, None, 0.5, [0.0], trust_radius=0.1)


def test_solve_two_dimensional() -> None:
    freq = FrequencyMap(_quadratic_2d, [-1, -1], [1, 1])
    target = _quadratic_2d(np.array([[0.3, -0.2]]))[0]
    root = solve_frequency_equation(freq, None, target, [0.0, 0.0])
    assert root == pytest.approx([0.3, -0.2], abs=1e-10)


def test_range_mode() -> None:
    freq = FrequencyMap(lambda x: x[:, 0] + x[:, 1], [0, 0], [1, 1])
    root = solve_frequency_equation(freq, None, 0.5, [0.5, 0.5])
    assert freq(root)[0] == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(TargetOutsideRange):
        solve_frequency_range_mode(freq, None, 5.0)


def test_translation_ledger_csv() -> None:
    ledger = TranslationLedger(dim=2)
    ledger.record(1, [1e-3, -2e-3], 1e-14, mu=1e-2)
    ledger.record(2, [1e-6, 0.0], 1e-15)
    text = ledger.to_csv()
    lines = text.splitlines()
    assert lines[0] == "nu,shift_0,shift_1,shift_abs,mu,ratio,residual"
    assert lines[1].startswith("1,0.001,-0.002,")
    assert lines[2].split(",")[4:6] == ["", ""]
    assert ledger.cumulative == pytest.approx([1.001e-3, -2e-3])


def test_cauchy_monitor_flags_growth(caplog: pytest.LogCaptureFixture) -> None:
    ledger = TranslationLedger()
    for i, shift in enumerate([1e-2, 1e-4, 1e-3], start=1):
        ledger.record(i, [shift], 0.0)
    with caplog.at_level(logging.WARNING):
        report = cauchy_monitor(ledger, [1e-2, 1e-3, 1e-5])
    assert report.ratios == pytest.approx([1.0, 0.1, 100.0])
    assert report.flagged_steps == [2]
    assert report.flagged
    assert report.constant == pytest.approx(100.0)
    assert "grew" in caplog.text


def test_cauchy_monitor_ignores_rounding() -> None:
    ledger = TranslationLedger()
    ledger.record(1, [1e-3], 0.0, mu=1e-3)
    ledger.record(2, [0.0], 0.0, mu=1e-6)
    report = cauchy_monitor(ledger)
    assert report.ratios == [1.0, 0.0]
    assert not report.flagged


def test_translation_scale() -> None:
    freq = weakly_convex_frequency(3)
    assert translation_scale(freq, 1e-6) == pytest.approx(0.02)
    plain = FrequencyMap(lambda x: x, [-1.0], [1.0])
    assert translation_scale(plain, 1e-6) == 1e-6


def test_continuity_and_convexity_checks() -> None:
    freq = weakly_convex_frequency(3)
    assert freq.check_continuity() <= 1 + 1e-12
    assert freq.check_weak_convexity() >= 1
    with pytest.raises(ValueError):
        FrequencyMap(lambda x: x, [-1.0], [1.0]).check_weak_convexity()


def test_estimate_upper_modulus() -> None:
    freq = FrequencyMap(lambda x: 2 * x, [-1.0], [1.0], name="double")
    gauge = estimate_upper_modulus(freq)
    assert gauge.name == "double_upper"
    assert gauge(1e-3) == pytest.approx(2e-3, rel=1e-6)


def test_degree_invariant_under_small_drifts(rng: np.random.Generator) -> None:
    base = get_entry("cubic").model()
    for _ in range(100):
        a, b, c = rng.uniform(-0.4, 0.4), rng.uniform(0, 10), rng.uniform(0, 2 * np.pi)
        drifted = FrequencyMap(
            lambda x, a=a, b=b, c=c: base.func(x) + a * np.sin(b * x + c),
            base.lower,
            base.upper,
        )
        assert degree(drifted, 0.0) == 1


def test_degree_2d_invariant_under_small_drifts(rng: np.random.Generator) -> None:
    base = get_entry("complex_square").model()
    for _ in range(100):
        a = rng.uniform(-0.3, 0.3, 2)
        b = rng.uniform(0, 5, 2)
        drifted = FrequencyMap(
            lambda x, a=a, b=b: base.func(x) + a * np.sin(b * x[:, ::-1]),
            base.lower,
            base.upper,
        )
        assert degree(drifted, (0.1, 0.0)) == 2


def test_range_mode_one_parameter_two_frequencies() -> None:
    freq = FrequencyMap(
        lambda x: np.concatenate([x, 2 * x + 0.1 * x**2], axis=1), [-1.0], [1.0]
    )
    root = solve_frequency_equation(freq, None, [0.3, 0.609], [0.0])
    assert root == pytest.approx([0.3], abs=1e-10)
    assert freq(root) == pytest.approx([0.3, 0.609], abs=1e-10)
    with pytest.raises(TargetOutsideRange):
        solve_frequency_equation(freq, None, [0.3, 0.2], [0.0])
