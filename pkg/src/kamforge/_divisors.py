import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from strenum import StrEnum

from ._errors import NonzeroMean, SmallDivisorBreach
from ._fourier import FourierSeries, l1_modes

#: Quotients are unrolled until the convergent denominator exceeds this.
_DENOMINATOR_FLOOR = 2**40


class Convention(StrEnum):
    """Unit in which rotation vectors are measured."""

    PERIOD_TWO_PI = "period_two_pi"
    PERIOD_ONE = "period_one"

    @property
    def period(self) -> float:
        return 2 * math.pi if self == Convention.PERIOD_TWO_PI else 1.0


@dataclass(frozen=True)
class DiophantineParams:
    """
    Constants of the Diophantine condition ``|<k, w> - k0| >= gamma / |k|^tau``.

    Parameters
    ----------
    gamma : float
        Positive constant.
    tau : float
        Exponent; it must exceed ``n - 1``.
    M : float
        Upper bound on ``|w|``.
    kmax : int
        Largest ``|k|_1`` enumerated.

    """

    gamma: float = 1.0
    tau: float = 1.5
    M: float = 10.0
    kmax: int = 64

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}.")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}.")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}.")
        if self.kmax < 1:
            raise ValueError(f"kmax must be at least 1, got {self.kmax}.")


@dataclass(frozen=True)
class DivisorReport:
    """Outcome of :func:`check_diophantine`."""

    worst_k: tuple[int, ...]
    worst_value: float
    satisfied: bool
    gamma: float
    tau: float
    kmax: int
    bounded: bool

    def to_record(self) -> dict[str, Any]:
        record = asdict(self)
        record["worst_k"] = list(self.worst_k)
        return record


def _half_modes(dim: int, kmax: int) -> NDArray[np.int64]:
    modes = l1_modes(dim, kmax)
    first = modes[np.arange(len(modes)), np.argmax(modes != 0, axis=1)]
    return modes[first > 0]


def check_diophantine(
    omega: ArrayLike,
    params: DiophantineParams,
    convention: Convention | str = Convention.PERIOD_TWO_PI,
) -> DivisorReport:
    """
    Exhaustive Diophantine check of a rotation vector.

    Parameters
    ----------
    omega : ArrayLike
        The rotation vector.
    params : DiophantineParams
        Constants and enumeration depth.
    convention : Convention | str, optional
        Whether angles have period 2 pi or 1, by default 2 pi.

    Returns
    -------
    DivisorReport
        The minimum of ``|k|_1^tau * dist(<k, omega>, period Z)`` over
        ``0 < |k|_1 <= kmax`` (one representative of each pair ``+-k``).

    Raises
    ------
    ValueError
        If tau does not exceed ``n - 1`` or omega is not finite.

    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if not np.all(np.isfinite(w)):
        raise ValueError("omega must be finite.")
    if not params.tau > w.size - 1:
        raise ValueError(f"tau must exceed n - 1 = {w.size - 1}, got {params.tau}.")
    period = Convention(convention).period
    modes = _half_modes(w.size, params.kmax)
    phase = modes @ w
    dist = np.abs(phase - period * np.round(phase / period))
    values = np.abs(modes).sum(axis=1) ** params.tau * dist
    i = int(np.argmin(values))
    return DivisorReport(
        worst_k=tuple(int(k) for k in modes[i]),
        worst_value=float(values[i]),
        satisfied=bool(values[i] >= params.gamma),
        gamma=params.gamma,
        tau=params.tau,
        kmax=params.kmax,
        bounded=bool(np.abs(w).sum() <= params.M),
    )


def continued_fraction_convergents(quotients: Sequence[int]) -> list[tuple[int, int]]:
    """
    Convergents ``p_n / q_n`` of ``[a_0; a_1, a_2, ...]``.

    Examples
    --------
    >>> continued_fraction_convergents([0, 1, 1, 1])
    [(0, 1), (1, 1), (1, 2), (2, 3)]

    """
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    out = []
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def golden_like_frequency(
    tail: Sequence[int], head: Sequence[int] = ()
) -> NDArray[np.float64]:
    """
    ``2 pi alpha`` for ``alpha = [0; head, tail, tail, ...]``.

    Parameters
    ----------
    tail : Sequence[int]
        The periodic part of the partial quotients; entries in {1, 2}.
    head : Sequence[int], optional
        A finite pre-period, entries in {1, 2}, by default empty.

    Returns
    -------
    NDArray[np.float64]
        The one-dimensional rotation vector.

    Raises
    ------
    ValueError
        If the tail is empty or a quotient lies outside {1, 2}.

    """
    if not tail:
        raise ValueError("The periodic tail must be non-empty.")
    if any(a not in (1, 2) for a in (*head, *tail)):
        raise ValueError("Partial quotients must lie in {1, 2}.")
    quotients = [0, *head]
    while continued_fraction_convergents(quotients)[-1][1] < _DENOMINATOR_FLOOR:
        quotients.extend(tail)
    p, q = continued_fraction_convergents(quotients)[-1]
    return np.array([2 * math.pi * (p / q)])


def solve_homological(
    rhs: FourierSeries,
    omega: ArrayLike,
    guard: float = 1e-8,
    convention: Convention | str = Convention.PERIOD_TWO_PI,
) -> FourierSeries:
    """
    Solve ``U(theta + omega) - U(theta) = rhs(theta)`` mode by mode.

    Parameters
    ----------
    rhs : FourierSeries
        Zero-mean right-hand side.
    omega : ArrayLike
        The rotation vector.
    guard : float, optional
        Smallest admissible ``|exp(i <k, omega>) - 1|``, by default 1e-8.
    convention : Convention | str, optional
        Angle period convention, by default 2 pi.

    Returns
    -------
    FourierSeries
        The zero-mean solution, with ``U_k = f_k / (exp(i <k, omega>) - 1)``.

    Raises
    ------
    NonzeroMean
        If ``|f_0| > 1e-14``.
    SmallDivisorBreach
        If some stored mode has a divisor below ``guard``.

    """
    if np.max(np.abs(rhs.mean)) > 1e-14:
        raise NonzeroMean(f"rhs mean {rhs.mean} must be removed before solving.")
    if guard <= 0:
        raise ValueError(f"guard must be positive, got {guard}.")
    w = np.broadcast_to(np.asarray(omega, dtype=float), (rhs.dim,))
    scale = 2 * math.pi / Convention(convention).period
    modes, flat = rhs.modes, rhs.flat
    divisor = np.exp(1j * scale * (modes @ w)) - 1
    active = np.any(modes != 0, axis=1)
    small = active & (np.abs(divisor) < guard)
    if np.any(small):
        i = int(np.argmax(small))
        raise SmallDivisorBreach(modes[i], float(np.abs(divisor[i])))
    solution = np.zeros_like(flat)
    solution[active] = flat[active] / divisor[active, None]
    coeffs = np.zeros_like(rhs.coeffs)
    coeffs[tuple((modes + rhs.cutoff).T)] = solution
    return FourierSeries(coeffs, real=rhs.real)
