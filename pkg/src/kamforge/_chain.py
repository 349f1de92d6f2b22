import dataclasses
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._errors import InversionFailure
from ._fourier import FourierSeries, TorusGrid, invert_near_identity
from ._frequency import TranslationLedger


@dataclass(frozen=True)
class ConjugacyChain:
    """
    Accumulated conjugacy of a run.

    The angle part is ``theta -> theta + u(theta)``; twist runs also carry
    the action part ``theta -> base + v(theta)``. ``parts`` keeps every
    step's correction with its own cutoff.

    Parameters
    ----------
    dim : int
        Number of angles.
    frequency : NDArray[np.float64]
        The rotation vector of the rigid model.
    base : NDArray[np.float64]
        Current translated action or parameter.
    u : FourierSeries
        Composed angle displacement.
    v : FourierSeries | None, optional
        Composed action displacement, twist runs only.
    offset : NDArray[np.float64] | None, optional
        Normal-form action translation, zero for parameter runs.
    parts : tuple[tuple[FourierSeries, ...], ...], optional
        ``(U,)`` or ``(U, V)`` per step.
    translations : TranslationLedger, optional
        The run's ledger.

    """

    dim: int
    frequency: NDArray[np.float64]
    base: NDArray[np.float64]
    u: FourierSeries
    v: FourierSeries | None = None
    offset: NDArray[np.float64] | None = None
    parts: tuple[tuple[FourierSeries, ...], ...] = ()
    translations: TranslationLedger = field(default_factory=TranslationLedger)

    def __post_init__(self) -> None:
        if self.offset is None:
            object.__setattr__(self, "offset", np.zeros(self.dim))

    @classmethod
    def identity(
        cls,
        dim: int,
        frequency: ArrayLike,
        base: ArrayLike,
        *,
        twist: bool = False,
    ) -> "ConjugacyChain":
        zero = FourierSeries.zeros(dim, 0, dim)
        return cls(
            dim=dim,
            frequency=np.atleast_1d(np.asarray(frequency, dtype=float)),
            base=np.atleast_1d(np.asarray(base, dtype=float)),
            u=zero,
            v=zero if twist else None,
            translations=TranslationLedger(dim=len(np.atleast_1d(base))),
        )

    @property
    def is_twist(self) -> bool:
        return self.v is not None

    @property
    def depth(self) -> int:
        return len(self.parts)

    def extend(
        self,
        parts: tuple[FourierSeries, ...],
        u: FourierSeries,
        v: FourierSeries | None = None,
        *,
        base: ArrayLike | None = None,
        offset: ArrayLike | None = None,
    ) -> "ConjugacyChain":
        """New chain with one more step; the ledger is shared."""
        changes: dict[str, Any] = {"u": u, "parts": (*self.parts, parts)}
        if v is not None:
            changes["v"] = v
        if base is not None:
            changes["base"] = np.atleast_1d(np.asarray(base, dtype=float))
        if offset is not None:
            changes["offset"] = np.atleast_1d(np.asarray(offset, dtype=float))
        return dataclasses.replace(self, **changes)

    def embed(
        self, theta: ArrayLike
    ) -> NDArray[np.float64] | tuple[NDArray[np.float64], NDArray[np.float64]]:
        """
        The conjugacy at the given angles.

        Returns
        -------
        NDArray[np.float64] | tuple[NDArray[np.float64], NDArray[np.float64]]
            ``theta + u(theta)`` of shape (P, n), paired with
            ``base + v(theta)`` for twist chains.

        """
        th = np.asarray(theta, dtype=float).reshape(-1, self.dim)
        angle = th + self.u.evaluate(th)
        if self.v is None:
            return angle
        return angle, self.base + self.v.evaluate(th)

    def invert(self, points: ArrayLike) -> NDArray[np.float64]:
        """Angles ``phi`` with ``phi + u(phi) = points``."""
        return invert_near_identity(self.u, points, max_iter=25)

    def is_invertible(self, size: int = 64) -> bool:
        """Whether Newton inversion converges at every point of a uniform grid."""
        size = max(size, 2 * self.u.cutoff + 2)
        grid = TorusGrid(self.dim, size)
        try:
            phi = self.invert(grid.points + self.u.grid_values(size))
        except InversionFailure:
            return False
        return bool(np.allclose(phi, grid.points, atol=1e-10))

    def transform_norm(self) -> float:
        """Sup over the real torus of the displacement ``(u, v)``."""
        size = max(8, 4 * self.u.cutoff)
        norm = float(np.max(np.abs(self.u.grid_values(size)), initial=0.0))
        if self.v is not None:
            size = max(8, 4 * self.v.cutoff)
            norm = max(norm, float(np.max(np.abs(self.v.grid_values(size)), initial=0.0)))
        return norm

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "dim": self.dim,
            "frequency": self.frequency.tolist(),
            "base": self.base.tolist(),
            "offset": np.asarray(self.offset).tolist(),
            "depth": self.depth,
            "cutoffs": [[p.cutoff for p in part] for part in self.parts],
            "u": self.u.to_record(),
            "translations": self.translations.to_records(),
        }
        if self.v is not None:
            record["v"] = self.v.to_record()
        return record
