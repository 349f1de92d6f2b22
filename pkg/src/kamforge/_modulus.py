import warnings
from collections.abc import Callable
from dataclasses import dataclass
from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

#: Log-spaced sample grid on which gauges are checked and inverted.
SAMPLE_GRID: NDArray[np.float64] = np.logspace(-12, 0, 241)

_RTOL = 4 * float(np.finfo(float).eps)

Gauge: TypeAlias = Callable[[NDArray[np.float64]], NDArray[np.float64]]


@dataclass(frozen=True)
class ModulusOfContinuity:
    """
    A named, strictly increasing gauge on (0, 1].

    Parameters
    ----------
    name : str
        Identifier used in reports.
    func : Gauge
        The gauge, vectorized over numpy arrays.
    inverse_func : Gauge | None, optional
        Closed-form inverse. When missing, :meth:`inverse` brackets on
        :data:`SAMPLE_GRID` and refines with Brent's method.

    """

    name: str
    func: Gauge
    inverse_func: Gauge | None = None

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def inverse(self, y: ArrayLike) -> NDArray[np.float64]:
        """
        Numeric inverse on ``[self(1e-12), self(1)]``.

        Raises
        ------
        ValueError
            If a value lies outside the tabulated range.

        """
        y_ = np.asarray(y, dtype=float)
        if self.inverse_func is not None:
            return np.asarray(self.inverse_func(y_), dtype=float)
        table = self(SAMPLE_GRID)
        if np.any(y_ < table[0]) or np.any(y_ > table[-1]):
            raise ValueError(
                f"{self.name}: inverse is tabulated on "
                f"[{table[0]:.3e}, {table[-1]:.3e}] only."
            )

        def solve(value: float) -> float:
            i = int(np.searchsorted(table, value))
            if table[min(i, len(table) - 1)] == value:
                return float(SAMPLE_GRID[min(i, len(table) - 1)])
            lo, hi = SAMPLE_GRID[max(i - 1, 0)], SAMPLE_GRID[min(i, len(table) - 1)]
            return float(
                brentq(lambda x: float(self(x)) - value, lo, hi, xtol=1e-300, rtol=_RTOL)
            )

        return np.vectorize(solve, otypes=[float])(y_)

    def is_gauge(self) -> bool:
        """Strictly increasing on the sample grid and small near zero."""
        values = self(SAMPLE_GRID)
        return bool(
            np.all(values > 0)
            and np.all(np.diff(values) > 0)
            and values[0] <= 0.05 * values[-1]
        )

    def satisfies_definition(self, bound: float = 1e6) -> bool:
        """Whether ``x / self(x)`` stays below ``bound`` at the 10 smallest samples."""
        x = SAMPLE_GRID[:10]
        return bool(np.all(x / self(x) <= bound))

    def not_weaker_than(self, other: "ModulusOfContinuity", bound: float = 1e6) -> bool:
        """Whether ``self / other`` stays bounded near zero."""
        x = SAMPLE_GRID[:10]
        return bool(np.all(self(x) / other(x) <= bound))


def lipschitz() -> ModulusOfContinuity:
    return ModulusOfContinuity("lipschitz", lambda x: x, lambda y: y)


def hoelder(alpha: float) -> ModulusOfContinuity:
    """Hoelder gauge ``x ** alpha`` with ``0 < alpha <= 1``."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}.")
    return ModulusOfContinuity(
        f"hoelder({alpha:g})", lambda x: x**alpha, lambda y: y ** (1 / alpha)
    )


def log_lipschitz() -> ModulusOfContinuity:
    """Logarithmic Lipschitz gauge ``1 / (1 - log x)``."""
    return ModulusOfContinuity(
        "log_lipschitz",
        lambda x: 1 / (1 - np.log(x)),
        lambda y: np.exp(1 - 1 / y),
    )


def power_gauge(beta: float, scale: float = 0.25) -> ModulusOfContinuity:
    """
    Lower gauge ``scale * x ** beta`` for degenerate frequency maps.

    It bounds increments from below, so it need not satisfy
    :meth:`ModulusOfContinuity.satisfies_definition`.
    """
    if beta <= 0 or scale <= 0:
        raise ValueError("beta and scale must be positive.")
    return ModulusOfContinuity(
        f"power({beta:g}, {scale:g})",
        lambda x: scale * x**beta,
        lambda y: (y / scale) ** (1 / beta),
    )


def tabulated(
    xs: ArrayLike, ys: ArrayLike, name: str = "tabulated"
) -> ModulusOfContinuity:
    """
    Monotone envelope of sampled increments, interpolated in log-log space.

    Parameters
    ----------
    xs : ArrayLike
        Positive increment sizes.
    ys : ArrayLike
        Observed (or bounding) increments at ``xs``.
    name : str, optional
        Identifier, by default "tabulated".

    Returns
    -------
    ModulusOfContinuity
        A gauge that is linear below ``min(xs)`` and above ``max(xs)``.

    """
    order = np.argsort(np.asarray(xs, dtype=float))
    x = np.asarray(xs, dtype=float)[order]
    y = np.maximum.accumulate(np.asarray(ys, dtype=float)[order])
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("tabulated gauges need positive samples.")
    y = y + 1e-9 * x
    lx, ly = np.log(x), np.log(y)

    def func(t: NDArray[np.float64]) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=float)
        inside = np.exp(np.interp(np.log(np.clip(t, x[0], x[-1])), lx, ly))
        return np.where(
            t < x[0], y[0] * t / x[0], np.where(t > x[-1], y[-1] * t / x[-1], inside)
        )

    gauge = ModulusOfContinuity(name, func)
    if not gauge.satisfies_definition():
        warnings.warn(
            f"{name}: x / gauge(x) is unbounded near zero on the sample grid.",
            stacklevel=2,
        )
    return gauge
