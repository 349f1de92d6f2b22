from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._frequency import FrequencyMap

AngleField: TypeAlias = Callable[[NDArray[Any], NDArray[Any]], ArrayLike]


def _as_columns(values: ArrayLike, rows: int, dim: int) -> NDArray[Any]:
    arr = np.asarray(values)
    if arr.size == rows * dim:
        return arr.reshape(rows, dim)
    return np.broadcast_to(arr, (rows, dim))


@dataclass(frozen=True)
class ParamMapModel:
    """
    Map ``theta -> theta + omega(xi) + epsilon f(theta, xi)`` on the n-torus.

    Parameters
    ----------
    freq : FrequencyMap
        The frequency map over the parameter box.
    perturbation : AngleField
        ``f(theta, xi)`` for angles of shape (P, n) and one parameter
        of shape (m,); returns (P, n), or (P,) when n is 1.
    epsilon : float, optional
        Perturbation size, by default 0.
    xi_star : ArrayLike | None, optional
        Base parameter, by default ``freq.base`` or the box center.
    h0 : float, optional
        Initial strip width, by default 1.
    name : str, optional
        Identifier, by default "param".

    """

    freq: FrequencyMap
    perturbation: AngleField
    epsilon: float = 0.0
    xi_star: NDArray[np.float64] | None = None
    h0: float = 1.0
    name: str = "param"

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}.")
        xi = self.xi_star
        if xi is None:
            xi = self.freq.base if self.freq.base is not None else self.freq.center
        object.__setattr__(self, "xi_star", np.atleast_1d(np.asarray(xi, dtype=float)))

    @property
    def dim(self) -> int:
        return self.freq.range_dim

    @property
    def target(self) -> NDArray[np.float64]:
        """The frequency ``q = omega(xi_star)``."""
        return self.freq(self.xi_star)

    def perturb(self, theta: ArrayLike, xi: ArrayLike) -> NDArray[Any]:
        """``f(theta, xi)`` with shape (P, n)."""
        th = np.asarray(theta).reshape(-1, self.dim)
        values = self.perturbation(th, np.atleast_1d(np.asarray(xi, dtype=float)))
        return _as_columns(values, len(th), self.dim)

    def step(self, theta: ArrayLike, xi: ArrayLike) -> NDArray[Any]:
        """One iterate, returned as a lift of ``theta``; shape (P, n)."""
        th = np.asarray(theta).reshape(-1, self.dim)
        return th + self.freq(xi) + self.epsilon * self.perturb(th, xi)

    def periodicity_gap(self, xi: ArrayLike | None = None, size: int = 16) -> float:
        """Largest change of ``f`` under ``theta -> theta + 2 pi e_j`` on a grid."""
        xi_ = self.xi_star if xi is None else xi
        axis = 2 * np.pi * np.arange(size) / size
        theta = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), -1)
        theta = theta.reshape(-1, self.dim)
        base = self.perturb(theta, xi_)
        return max(
            float(np.max(np.abs(self.perturb(theta + 2 * np.pi * e, xi_) - base)))
            for e in np.eye(self.dim)
        )

    def frequency_bound(self, size: int = 33) -> float:
        """Sampled ``max |omega|`` over the parameter box."""
        return float(np.max(np.abs(self.freq(self.freq.mesh(size)))))


@dataclass(frozen=True)
class TwistMapModel:
    """
    Twist map ``(theta, r) -> (theta + omega(r) + eps f, r + eps g)``.

    Parameters
    ----------
    freq : FrequencyMap
        Frequency map over the action box; its ``func`` must accept
        complex arguments for :func:`kamforge.testbed.jacobian_determinant`.
    f_pert, g_pert : AngleField
        Perturbations evaluated pointwise at angles and actions of shape (P, n).
    epsilon : float, optional
        Perturbation size, by default 0.
    r_star : ArrayLike | None, optional
        Base action, by default ``freq.base`` or the box center.
    intersection : bool, optional
        Whether the map has the intersection property, by default True.
    name : str, optional
        Identifier, by default "twist".

    """

    freq: FrequencyMap
    f_pert: AngleField
    g_pert: AngleField
    epsilon: float = 0.0
    r_star: NDArray[np.float64] | None = None
    intersection: bool = True
    name: str = "twist"

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}.")
        if self.freq.domain_dim != self.freq.range_dim:
            raise ValueError("Twist maps need as many actions as angles.")
        r = self.r_star
        if r is None:
            r = self.freq.base if self.freq.base is not None else self.freq.center
        object.__setattr__(self, "r_star", np.atleast_1d(np.asarray(r, dtype=float)))

    @property
    def dim(self) -> int:
        return self.freq.range_dim

    @property
    def target(self) -> NDArray[np.float64]:
        """The frequency ``p = omega(r_star)``."""
        return self.freq(self.r_star)

    def __call__(self, theta: ArrayLike, r: ArrayLike) -> tuple[NDArray[Any], NDArray[Any]]:
        """One iterate; the angle is returned as a lift. Complex input is kept complex."""
        th = np.asarray(theta).reshape(-1, self.dim)
        ac = np.asarray(r).reshape(-1, self.dim)
        rows = len(th)
        omega = _as_columns(self.freq.func(ac), rows, self.dim)
        f = _as_columns(self.f_pert(th, ac), rows, self.dim)
        g = _as_columns(self.g_pert(th, ac), rows, self.dim)
        return th + omega + self.epsilon * f, ac + self.epsilon * g

    def state_map(self, state: NDArray[Any]) -> NDArray[Any]:
        """The map on stacked states ``(theta, r)`` of shape (B, 2n)."""
        theta, r = self(state[:, : self.dim], state[:, self.dim :])
        return np.concatenate([theta, r], axis=1)
