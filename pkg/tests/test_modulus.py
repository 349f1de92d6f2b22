import math

import numpy as np
import pytest

from kamforge._modulus import (
    SAMPLE_GRID,
    ModulusOfContinuity,
    hoelder,
    lipschitz,
    log_lipschitz,
    power_gauge,
    tabulated,
)


@pytest.mark.parametrize(
    "modulus", [lipschitz(), hoelder(0.5), hoelder(1.0), log_lipschitz()]
)
def test_standard_gauges(modulus: ModulusOfContinuity) -> None:
    assert modulus.is_gauge()
    assert modulus.satisfies_definition()
    y = modulus(np.array([1e-6, 1e-3, 0.5]))
    assert modulus.inverse(y) == pytest.approx([1e-6, 1e-3, 0.5], rel=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 1.5])
def test_hoelder_rejects(alpha: float) -> None:
    with pytest.raises(ValueError):
        hoelder(alpha)


def test_weaker_than() -> None:
    assert lipschitz().not_weaker_than(hoelder(0.5))
    assert not log_lipschitz().not_weaker_than(lipschitz())


def test_power_gauge() -> None:
    gauge = power_gauge(3, 0.25)
    assert gauge.name == "power(3, 0.25)"
    assert gauge(0.5) == pytest.approx(0.25 * 0.125)
    assert gauge.inverse(0.25 * 0.125) == pytest.approx(0.5)
    assert not gauge.satisfies_definition()
    with pytest.raises(ValueError):
        power_gauge(0, 1)


def test_tabulated_inverse() -> None:
    xs = np.logspace(-8, 0, 33)
    gauge = tabulated(xs, np.sqrt(xs))
    assert gauge.name == "tabulated"
    assert gauge.is_gauge()
    for x in (1e-6, 1e-2, 0.3):
        assert gauge.inverse(gauge(x)) == pytest.approx(x, rel=1e-9)
    with pytest.raises(ValueError, match="tabulated"):
        gauge.inverse(10.0)


def test_tabulated_monotone_envelope() -> None:
    gauge = tabulated([0.1, 0.2, 0.3], [0.5, 0.1, 0.6])
    assert gauge(0.2) >= 0.5


def test_tabulated_warns_when_too_flat() -> None:
    with pytest.warns(UserWarning, match="unbounded"):
        tabulated(SAMPLE_GRID, SAMPLE_GRID**2)


def test_tabulated_rejects_nonpositive() -> None:
    with pytest.raises(ValueError):
        tabulated([0.0, 1.0], [0.0, 1.0])


def test_log_lipschitz_value() -> None:
    assert log_lipschitz()(math.exp(-1)) == pytest.approx(0.5)
