import math

import numpy as np
import pytest

from kamforge._errors import DegenerateSampleSet, GridTooCoarse, InversionFailure
from kamforge._fourier import (
    FourierSeries,
    NormFlavor,
    TorusGrid,
    analyze,
    invert_near_identity,
    l1_modes,
    modulus_seminorm,
    strip_norm,
    truncate,
)
from kamforge._modulus import hoelder, lipschitz


@pytest.mark.parametrize("dim, cutoff, count", [(1, 3, 7), (2, 2, 13), (3, 1, 7)])
def test_l1_modes(dim: int, cutoff: int, count: int) -> None:
    modes = l1_modes(dim, cutoff)
    assert modes.shape == (count, dim)
    assert np.all(np.abs(modes).sum(axis=1) <= cutoff)


def test_from_modes_real_iff_hermitian() -> None:
    assert FourierSeries.from_modes({1: 0.5j, -1: -0.5j}).real
    assert not FourierSeries.from_modes({1: 1.0}).real


def test_evaluate_sine() -> None:
    f = FourierSeries.from_modes({1: -0.5j, -1: 0.5j})
    theta = np.linspace(0, 2 * np.pi, 17)
    assert f(theta) == pytest.approx(np.sin(theta), abs=1e-14)
    assert f(0.3) == pytest.approx(math.sin(0.3))


def test_rejects_modes_outside_ball() -> None:
    coeffs = np.zeros((3, 3, 1), dtype=complex)
    coeffs[0, 0, 0] = 1
    with pytest.raises(ValueError, match="l1 ball"):
        FourierSeries(coeffs, real=False)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("cutoff", [2, 5])
def test_analyze_recovers_trigonometric_polynomial(
    dim: int, cutoff: int, rng: np.random.Generator
) -> None:
    modes = l1_modes(dim, cutoff)
    half = {tuple(k): complex(*rng.normal(size=2)) for k in modes if tuple(k) > (0,) * dim}
    coeffs = {**half, **{tuple(-i for i in k): c.conjugate() for k, c in half.items()}}
    coeffs[(0,) * dim] = 0.7
    f = FourierSeries.from_modes(coeffs, dim=dim, cutoff=cutoff)
    grid = TorusGrid.for_cutoff(dim, cutoff)
    g = grid.analyze(f.evaluate(grid.points), cutoff)
    assert g.real
    assert np.max(np.abs(g.coeffs - f.coeffs)) < 1e-13


@pytest.mark.parametrize("size, cutoff", [(7, 3), (4, 2)])
def test_analyze_grid_too_coarse(size: int, cutoff: int) -> None:
    with pytest.raises(GridTooCoarse):
        analyze(np.zeros(size), cutoff)


def test_on_grid_matches_evaluate(rng: np.random.Generator) -> None:
    f = FourierSeries.from_modes({(1, 0): 1 + 2j, (-1, 0): 1 - 2j, (1, -1): 0.5, (-1, 1): 0.5}, dim=2)
    grid = TorusGrid(2, 8)
    assert f.grid_values(8) == pytest.approx(f.evaluate(grid.points), abs=1e-13)
    with pytest.raises(GridTooCoarse):
        f.on_grid(2)


def test_shift_and_derivative() -> None:
    f = FourierSeries.from_modes({2: 1.0, -2: 1.0})
    theta = np.linspace(0, 1, 5)
    assert f.shift(0.25)(theta) == pytest.approx(2 * np.cos(2 * (theta + 0.25)))
    assert f.derivative()(theta) == pytest.approx(-4 * np.sin(2 * theta))


def test_arithmetic_aligns_cutoffs() -> None:
    a = FourierSeries.from_modes({1: 1.0, -1: 1.0})
    b = FourierSeries.from_modes({3: 1.0, -3: 1.0})
    c = a + b * 2
    assert c.cutoff == 3
    assert c.coefficient(3) == pytest.approx(2)
    assert (c - a).coefficient(1) == 0
    assert (-a).coefficient(-1) == -1


def test_truncate() -> None:
    f = FourierSeries.from_modes({0: 2.0, 1: 0.5, -1: 0.5, 3: 0.1, -3: 0.1})
    head, mean, remainder = truncate(f, 2)
    assert mean == pytest.approx(2.0)
    assert head.cutoff == 2
    assert head.coefficient(0) == 0
    assert head.coefficient(1) == pytest.approx(0.5)
    assert remainder == pytest.approx(0.2)
    assert truncate(f, 2, h=1.0).remainder_norm == pytest.approx(0.2 * math.e**3)
    with pytest.raises(ValueError, match="exceeds"):
        truncate(f, 4)


@pytest.mark.parametrize("h", [0.0, 0.3, 1.0])
def test_strip_norm_of_cosine(h: float) -> None:
    # sup of |cos(x + i y)| over |y| <= h is cosh(h), reached at x = 0
    f = FourierSeries.from_modes({1: 0.5, -1: 0.5})
    assert strip_norm(f, h) == pytest.approx(math.cosh(h), rel=1e-12)
    assert strip_norm(f, h, NormFlavor.COEFF_WEIGHTED) == pytest.approx(math.exp(h))
    assert f.norm(h) <= f.norm(h, "coeff_weighted") + 1e-12


def test_strip_norm_rejects_negative_width() -> None:
    with pytest.raises(ValueError):
        strip_norm(FourierSeries.zeros(1), -0.1)


def test_modulus_seminorm() -> None:
    series = {
        xi: FourierSeries.from_modes({1: 0.5 * xi, -1: 0.5 * xi}) for xi in (0.0, 0.25, 0.5)
    }
    assert modulus_seminorm(series, lipschitz()) == pytest.approx(1.0)
    assert modulus_seminorm(series, hoelder(0.5)) == pytest.approx(0.5 / math.sqrt(0.5))
    with pytest.raises(DegenerateSampleSet):
        modulus_seminorm({0.0: series[0.0], 3.0: series[0.5]}, lipschitz())


def test_record_round_trip() -> None:
    f = FourierSeries.from_modes({(1, 0): 0.25 - 0.5j, (-1, 0): 0.25 + 0.5j}, dim=2)
    g = FourierSeries.from_record(f.to_record())
    assert np.array_equal(g.coeffs, f.coeffs)
    assert g.real


@pytest.mark.parametrize("amplitude", [0.1, 0.5])
def test_invert_near_identity(amplitude: float) -> None:
    u = FourierSeries.from_modes({1: -0.5j * amplitude, -1: 0.5j * amplitude})
    phi = np.linspace(-3, 9, 25)[:, None]
    targets = phi + amplitude * np.sin(phi)
    assert invert_near_identity(u, targets) == pytest.approx(phi, abs=1e-13)


def test_invert_near_identity_fails_for_folded_map() -> None:
    u = FourierSeries.from_modes({1: -1.5j, -1: 1.5j})
    with pytest.raises(InversionFailure):
        invert_near_identity(u, np.linspace(0, 6, 50)[:, None], max_iter=5)


@pytest.mark.parametrize("cutoff, size", [(0, 2), (1, 4), (8, 32)])
def test_torus_grid_for_cutoff(cutoff: int, size: int) -> None:
    grid = TorusGrid.for_cutoff(2, cutoff)
    assert grid.size == size
    assert grid.cutoff >= cutoff
    assert grid.points.shape == (size**2, 2)
