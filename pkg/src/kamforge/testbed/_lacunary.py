import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .._modulus import SAMPLE_GRID, ModulusOfContinuity, lipschitz, tabulated

#: Largest ``|xi|`` at which the field is evaluated.
XI_BOUND = 16.0

#: Largest phase error a kept term may carry for ``|xi| <= XI_BOUND``.
PHASE_TOLERANCE = 1e-6

#: Largest frequency whose phase stays within :data:`PHASE_TOLERANCE`.
MAX_FREQUENCY = PHASE_TOLERANCE / (XI_BOUND * float(np.finfo(float).eps))

#: Dyadic scales over which the Hoelder exponent is fitted.
DYADIC_SCALES: NDArray[np.float64] = 2.0 ** -np.arange(4, 21)

#: Factor between the sampled oscillation and the tabulated upper gauge.
MODULUS_FACTOR = 2.0


@dataclass(frozen=True)
class LacunaryField:
    """
    Lacunary trigonometric series ``amplitude * sum_j a_j cos(b_j xi + phase_j)``.

    Parameters
    ----------
    amplitude : float
        Overall factor.
    coefficients : NDArray[np.float64]
        The weights ``a_j``.
    frequencies : NDArray[np.float64]
        The frequencies ``b_j``.
    phases : NDArray[np.float64]
        The phases ``phase_j``.

    """

    amplitude: float
    coefficients: NDArray[np.float64]
    frequencies: NDArray[np.float64]
    phases: NDArray[np.float64]

    @property
    def terms(self) -> int:
        return int(self.coefficients.size)

    @property
    def sup_bound(self) -> float:
        """``amplitude * sum_j a_j``."""
        return float(self.amplitude * self.coefficients.sum())

    def __call__(self, xi: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(xi, dtype=float)
        phase = x[..., None] * self.frequencies + self.phases
        return self.amplitude * np.cos(phase) @ self.coefficients

    def oscillation(
        self,
        scales: ArrayLike = SAMPLE_GRID,
        samples: int = 512,
        rng: np.random.Generator | None = None,
    ) -> NDArray[np.float64]:
        """
        Largest sampled increment ``|F(x + t) - F(x)|`` with ``h / 2 <= t <= h``.

        Parameters
        ----------
        scales : ArrayLike, optional
            Increasing scales ``h``, by default :data:`SAMPLE_GRID`.
        samples : int, optional
            Base points on [0, 1], by default 512.
        rng : np.random.Generator | None, optional
            Source of base points and offsets, by default seeded with 0.

        Returns
        -------
        NDArray[np.float64]
            The sampled oscillation per scale, made non-decreasing.

        """
        rng = np.random.default_rng(0) if rng is None else rng
        h = np.asarray(scales, dtype=float)
        x = rng.uniform(0, 1, samples)
        t = rng.uniform(0.5, 1, samples)
        base = self(x)
        sup = np.array([np.max(np.abs(self(x + s * t) - base)) for s in h])
        return np.maximum.accumulate(sup)

    @cached_property
    def modulus(self) -> ModulusOfContinuity:
        """
        Upper gauge tabulated from :meth:`oscillation` on :data:`SAMPLE_GRID`.

        It is :data:`MODULUS_FACTOR` times the sampled oscillation; the zero
        field gets the Lipschitz gauge.
        """
        if self.amplitude == 0:
            return lipschitz()
        sup = np.maximum(self.oscillation(), np.finfo(float).tiny)
        return tabulated(SAMPLE_GRID, MODULUS_FACTOR * sup, name="lacunary")

    def check_modulus(
        self, pairs: int = 10_000, rng: np.random.Generator | None = None
    ) -> float:
        """Largest sampled ratio ``|F(x) - F(y)| / modulus(|x - y|)`` on [0, 1]."""
        rng = np.random.default_rng(1) if rng is None else rng
        x = rng.uniform(0, 1, pairs)
        y = np.clip(x + rng.choice(SAMPLE_GRID, pairs), None, 2)
        return float(np.max(np.abs(self(x) - self(y)) / self.modulus(np.abs(x - y))))

    def hoelder_exponent(
        self,
        scales: ArrayLike = DYADIC_SCALES,
        rng: np.random.Generator | None = None,
        samples: int = 4096,
        interval: tuple[float, float] = (0.0, 1.0),
    ) -> float:
        """
        Slope of the log-log regression of mean increments against scale.

        The increment at scale ``h`` is taken over offsets uniform in
        ``[h / 2, h]``. A field with Hoelder exponent ``alpha`` on the scale
        range gives a slope near ``alpha``.

        Parameters
        ----------
        scales : ArrayLike, optional
            Increment sizes, by default ``2 ** -4 ... 2 ** -20``.
        rng : np.random.Generator | None, optional
            Source of base points, by default seeded with 0.
        samples : int, optional
            Base points per scale, by default 4096.
        interval : tuple[float, float], optional
            Interval of the base points, by default (0, 1).

        Returns
        -------
        float
            The fitted exponent.

        """
        if self.amplitude == 0:
            return math.inf
        rng = np.random.default_rng(0) if rng is None else rng
        h = np.asarray(scales, dtype=float)
        x = rng.uniform(*interval, samples)
        t = rng.uniform(0.5, 1, samples)
        base = self(x)
        increments = np.array([np.mean(np.abs(self(x + s * t) - base)) for s in h])
        slope, _ = np.polyfit(np.log(h), np.log(increments), 1)
        return float(slope)


def nowhere_hoelder_parameter_field(
    seed: int, amplitude: float, n_terms: int = 3
) -> LacunaryField:
    """
    A continuous field whose increments barely shrink on dyadic scales.

    The weights are ``a_j = 1 / j!`` and the frequencies ``b_j = exp(j * j!)``,
    so the partial sums converge uniformly while ``b_3 ~ 6.6e7`` keeps the
    third term saturated on every scale down to ``2 ** -20``.

    Parameters
    ----------
    seed : int
        Seed of the phases.
    amplitude : float
        Overall factor; the sup norm is at most ``amplitude * (e - 1)``.
    n_terms : int, optional
        Number of terms requested, by default 3.

    Returns
    -------
    LacunaryField
        The field. Terms whose frequency exceeds :data:`MAX_FREQUENCY` have no
        resolved phase in double precision and are dropped with a warning.

    Examples
    --------
    >>> field = nowhere_hoelder_parameter_field(0, 0.0)
    >>> field.terms, field.sup_bound
    (3, 0.0)

    """
    if amplitude < 0:
        raise ValueError(f"amplitude must be non-negative, got {amplitude}.")
    j = np.arange(1, n_terms + 1)
    factorials = np.array([math.factorial(int(i)) for i in j], dtype=float)
    with np.errstate(over="ignore"):
        frequencies = np.exp(j * factorials)
    keep = frequencies <= MAX_FREQUENCY
    if not np.all(keep):
        warnings.warn(
            f"dropping {int(np.sum(~keep))} lacunary terms whose phase is not "
            "resolved in double precision.",
            stacklevel=2,
        )
    phases = np.random.default_rng(seed).uniform(0, 2 * np.pi, n_terms)
    return LacunaryField(
        float(amplitude), 1 / factorials[keep], frequencies[keep], phases[keep]
    )
