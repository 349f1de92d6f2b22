import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import comb, gamma, gammainc, gammaincc

from ._divisors import DiophantineParams
from ._errors import BadExponents

_SHELL_CHUNK = 1 << 20
_SHELL_CAP = 1 << 24
_LOG_MAX = math.log(float(np.finfo(float).max))


def shell_count(dim: int, radius: NDArray[np.int64]) -> NDArray[np.float64]:
    """Number of ``k`` in ``Z^dim`` with ``|k|_1 == radius`` (``radius >= 1``)."""
    radius = np.asarray(radius)
    total = np.zeros(radius.shape, dtype=float)
    for j in range(1, dim + 1):
        total += 2.0**j * comb(dim, j) * comb(radius - 1, j - 1)
    return total


def gamma_sum(cutoff: float, delta: float, tau: float, dim: int) -> float:
    """
    ``sum_{0 < |k|_1 <= cutoff} |k|^tau exp(-|k| delta / 4)`` over ``Z^dim``.

    Shells are summed exactly up to ``2**24`` and the rest by the
    leading-order integral.
    """
    a = delta / 4
    last = int(min(cutoff, math.ceil((4 * (tau + dim) + 160) / delta) + 10))
    total = 0.0
    for start in range(1, min(last, _SHELL_CAP) + 1, _SHELL_CHUNK):
        l = np.arange(start, min(start + _SHELL_CHUNK, last + 1), dtype=float)
        total += float(np.sum(shell_count(dim, l) * l**tau * np.exp(-a * l)))
    if last > _SHELL_CAP:
        p = tau + dim
        lead = 2.0**dim / math.factorial(dim - 1) * gamma(p) / a**p
        total += lead * (gammainc(p, a * last) - gammainc(p, a * _SHELL_CAP))
    return total


def gamma_bound(delta: float, tau: float) -> float:
    """The display bound ``4^tau tau! / delta^tau``."""
    return float(4.0**tau * gamma(tau + 1) / delta**tau)


def h1_integral(cutoff: float, delta: float, dim: int) -> float:
    """``int_K^inf l^n exp(-l delta / 4) dl`` as an upper incomplete gamma."""
    a = delta / 4
    return float(gammaincc(dim + 1, a * cutoff) * gamma(dim + 1) / a ** (dim + 1))


@dataclass(frozen=True)
class KamSchedule:
    """
    Bookkeeping sequences of the iteration.

    ``h[nu]``, ``s[nu]`` and ``mu[nu]`` are indexed by step; ``K[nu]`` is the
    cutoff used in step ``nu - 1`` (``K[0]`` is unused and set to 0).
    ``log_mu`` holds ``log mu[nu]``, which stays finite after ``mu`` underflows.
    """

    epsilon: float
    n: int
    m: int
    rho: float
    eta: float
    h0: float
    s0: float
    tau: float
    gamma0: float
    mu0: float
    log_base: float
    h: NDArray[np.float64]
    s: NDArray[np.float64]
    mu: NDArray[np.float64]
    K: NDArray[np.float64]
    log_mu: NDArray[np.float64]
    diophantine: DiophantineParams | None = None

    @property
    def depth(self) -> int:
        return len(self.mu) - 2

    def delta(self, nu: int) -> float:
        return float(self.h[nu] - self.h[nu + 1])

    def gamma_sum(self, nu: int) -> float:
        return gamma_sum(float(self.K[nu + 1]), self.delta(nu), self.tau, self.n)

    def cutoff(self, nu: int, floor: int = 8, cap: int = 256) -> int:
        """``K[nu + 1]`` clipped to ``[floor, cap]``."""
        index = min(nu + 1, len(self.K) - 1)
        return int(np.clip(self.K[index], floor, cap))

    def relative_to_mu(self, value: float, nu: int) -> float:
        """``value / mu[nu]`` computed from ``log_mu``; 0 for non-positive values."""
        if value <= 0:
            return 0.0
        exponent = math.log(value) - float(self.log_mu[min(nu, len(self.log_mu) - 1)])
        return math.exp(exponent) if exponent < _LOG_MAX else math.inf


def schedule_init(
    epsilon: float,
    n: int = 1,
    m: int = 1,
    rho: float = 0.5,
    eta: float = 2.0,
    h0: float = 1.0,
    s0: float = 0.05,
    *,
    depth: int = 32,
    log_base: float = math.e,
    diophantine: DiophantineParams | None = None,
) -> KamSchedule:
    """
    Initial parameters and recursions of the iteration.

    Parameters
    ----------
    epsilon : float
        Perturbation size in (0, 1).
    n : int, optional
        Number of angles, by default 1.
    m : int, optional
        Number of actions or parameters, by default 1.
    rho : float, optional
        Contraction exponent in (0, 1), by default 0.5.
    eta : float, optional
        Cutoff exponent with ``(1 + rho) ** eta > 2``, by default 2.
    h0 : float, optional
        Initial strip width, by default 1.
    s0 : float, optional
        Initial action radius, by default 0.05.
    depth : int, optional
        Number of steps to tabulate, by default 32.
    log_base : float, optional
        Base of the logarithm in the cutoff recursion, by default e.
    diophantine : DiophantineParams | None, optional
        Supplies tau; otherwise ``tau = n + 0.5``.

    Returns
    -------
    KamSchedule
        The populated schedule.

    Raises
    ------
    BadExponents
        If ``(1 + rho) ** eta <= 2``.
    ValueError
        If epsilon or rho lie outside (0, 1).

    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}.")
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}.")
    if (1 + rho) ** eta <= 2:
        raise BadExponents(f"(1 + rho) ** eta = {(1 + rho) ** eta:g} must exceed 2.")
    tau = diophantine.tau if diophantine is not None else n + 0.5
    gamma0 = epsilon ** (1 / (4 * (n + m + 2)))
    mu0 = epsilon ** (1 / (8 * eta * (m + 1)))
    size = depth + 2
    h, s, log_mu, K = (np.zeros(size) for _ in range(4))
    h[0], s[0], log_mu[0] = h0, s0, math.log(mu0)
    for nu in range(size - 1):
        h[nu + 1] = h[nu] / 2 + h0 / 4
        s[nu + 1] = s[nu] / 2
        log_mu[nu + 1] = (1 + rho) * log_mu[nu]
        log_inv = -log_mu[nu] / math.log(log_base)
        with np.errstate(over="ignore"):
            K[nu + 1] = np.float64(math.floor(log_inv) + 1) ** (3 * eta)
    # mu underflows to 0 for deep steps
    mu = np.exp(log_mu)
    return KamSchedule(
        epsilon=epsilon,
        n=n,
        m=m,
        rho=rho,
        eta=eta,
        h0=h0,
        s0=s0,
        tau=tau,
        gamma0=gamma0,
        mu0=mu0,
        log_base=log_base,
        h=h,
        s=s,
        mu=mu,
        K=K,
        log_mu=log_mu,
        diophantine=diophantine,
    )
