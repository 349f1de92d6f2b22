from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations, product
from typing import Any, NamedTuple

import numpy as np
import scipy.fft
from numpy.typing import ArrayLike, NDArray
from strenum import StrEnum

from ._errors import DegenerateSampleSet, GridTooCoarse, InversionFailure

_HERMITIAN_RTOL = 1e-10
_CHUNK = 1 << 22


class NormFlavor(StrEnum):
    """How the supremum over a complex strip is computed."""

    GRID_SUP = "grid_sup"
    COEFF_WEIGHTED = "coeff_weighted"


@lru_cache(maxsize=128)
def l1_modes(dim: int, cutoff: int) -> NDArray[np.int64]:
    """
    Multi-indices k with |k|_1 <= cutoff.

    Parameters
    ----------
    dim : int
        The torus dimension.
    cutoff : int
        The l1 radius.

    Returns
    -------
    NDArray[np.int64]
        Array of shape (M, dim) in C order of the centered coefficient box.

    """
    axes = [np.arange(-cutoff, cutoff + 1)] * dim
    box = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    modes = box[np.abs(box).sum(axis=1) <= cutoff]
    modes.setflags(write=False)
    return modes


@lru_cache(maxsize=128)
def _wavenumbers(dim: int, cutoff: int) -> NDArray[np.int64]:
    axes = [np.arange(-cutoff, cutoff + 1)] * dim
    k = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    k.setflags(write=False)
    return k


def _l1_norms(dim: int, cutoff: int) -> NDArray[np.int64]:
    return np.abs(_wavenumbers(dim, cutoff)).sum(axis=-1)


def _flip(coeffs: NDArray[np.complex128]) -> NDArray[np.complex128]:
    dim = coeffs.ndim - 1
    return coeffs[(slice(None, None, -1),) * dim + (slice(None),)]


def _as_points(points: ArrayLike, dim: int) -> NDArray[Any]:
    arr = np.asarray(points)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None] if dim == 1 else arr[None, :]
    if arr.shape[-1] != dim:
        raise ValueError(
            f"Points must have trailing dimension {dim}, got shape {arr.shape}."
        )
    return arr.reshape(-1, dim)


@dataclass(frozen=True, eq=False)
class FourierSeries:
    """
    Truncated Fourier series on the torus R^n / 2 pi Z^n.

    Coefficients live in a centered box of shape ``(2K+1,) * dim + (value_dim,)``;
    entries outside the l1 ball ``|k|_1 <= K`` are zero.

    Parameters
    ----------
    coeffs : NDArray[np.complex128]
        The centered coefficient box.
    real : bool, optional
        Whether the represented function is real on real angles,
        by default True. Hermitian symmetry is checked when set.

    Raises
    ------
    ValueError
        If the box is malformed, holds modes outside the l1 ball,
        or breaks Hermitian symmetry for a real series.

    """

    coeffs: NDArray[np.complex128]
    real: bool = True

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim < 2:
            raise ValueError("coeffs must have at least one angle axis.")
        box = coeffs.shape[:-1]
        if len(set(box)) != 1 or box[0] % 2 == 0:
            raise ValueError(f"coeffs must be a centered odd box, got {box}.")
        dim, cutoff = len(box), (box[0] - 1) // 2
        if np.any(coeffs[_l1_norms(dim, cutoff) > cutoff] != 0):
            raise ValueError("coeffs hold modes outside the l1 ball.")
        if self.real:
            scale = max(1.0, float(np.max(np.abs(coeffs), initial=0.0)))
            gap = np.max(np.abs(coeffs - np.conj(_flip(coeffs))), initial=0.0)
            if gap > _HERMITIAN_RTOL * scale:
                raise ValueError(
                    f"coeffs are not Hermitian (gap {gap:.2e}) for a real series."
                )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(
        cls, dim: int, cutoff: int = 0, value_dim: int = 1, *, real: bool = True
    ) -> "FourierSeries":
        """Zero series."""
        return cls(np.zeros((2 * cutoff + 1,) * dim + (value_dim,)), real=real)

    @classmethod
    def constant(cls, value: ArrayLike, dim: int) -> "FourierSeries":
        """Constant series with the given (vector) value."""
        value_ = np.atleast_1d(np.asarray(value, dtype=np.complex128))
        coeffs = np.zeros((1,) * dim + value_.shape, dtype=np.complex128)
        coeffs[(0,) * dim] = value_
        return cls(coeffs, real=not np.any(value_.imag))

    @classmethod
    def from_modes(
        cls,
        modes: Mapping[int | tuple[int, ...], complex | Sequence[complex]],
        dim: int = 1,
        cutoff: int | None = None,
    ) -> "FourierSeries":
        """
        Series from a sparse mapping of multi-index to coefficient.

        Parameters
        ----------
        modes : Mapping[int | tuple[int, ...], complex | Sequence[complex]]
            Coefficients keyed by multi-index (an int when dim is 1).
        dim : int, optional
            The torus dimension, by default 1.
        cutoff : int | None, optional
            The cutoff, by default the largest |k|_1 present.

        Returns
        -------
        FourierSeries
            The series; it is flagged real iff the coefficients
            are Hermitian.

        """
        keys = [(k,) if isinstance(k, int | np.integer) else tuple(k) for k in modes]
        values = [np.atleast_1d(np.asarray(v, dtype=np.complex128)) for v in modes.values()]
        value_dim = values[0].shape[0] if values else 1
        if cutoff is None:
            cutoff = max((sum(abs(i) for i in k) for k in keys), default=0)
        coeffs = np.zeros((2 * cutoff + 1,) * dim + (value_dim,), dtype=np.complex128)
        for k, v in zip(keys, values, strict=True):
            coeffs[tuple(i + cutoff for i in k)] = v
        scale = max(1.0, float(np.max(np.abs(coeffs), initial=0.0)))
        gap = np.max(np.abs(coeffs - np.conj(_flip(coeffs))), initial=0.0)
        return cls(coeffs, real=bool(gap <= _HERMITIAN_RTOL * scale))

    @classmethod
    def stack(cls, components: Sequence["FourierSeries"]) -> "FourierSeries":
        """Concatenate scalar or vector series along the value axis."""
        cutoff = max(c.cutoff for c in components)
        aligned = [c.with_cutoff(cutoff).coeffs for c in components]
        return cls(
            np.concatenate(aligned, axis=-1), real=all(c.real for c in components)
        )

    @property
    def dim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def cutoff(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def value_dim(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def modes(self) -> NDArray[np.int64]:
        return l1_modes(self.dim, self.cutoff)

    @property
    def flat(self) -> NDArray[np.complex128]:
        """Coefficients of the stored modes, shape (M, value_dim)."""
        return self.coeffs[tuple((self.modes + self.cutoff).T)]

    @property
    def mean(self) -> NDArray[np.complex128]:
        """The k = 0 coefficient of every component."""
        return self.coeffs[(self.cutoff,) * self.dim].copy()

    def coefficient(self, k: int | Sequence[int]) -> complex | NDArray[np.complex128]:
        """Coefficient of mode k (zero outside the stored ball)."""
        k_ = (k,) if isinstance(k, int | np.integer) else tuple(k)
        if sum(abs(i) for i in k_) > self.cutoff:
            c = np.zeros(self.value_dim, dtype=np.complex128)
        else:
            c = self.coeffs[tuple(i + self.cutoff for i in k_)]
        return complex(c[0]) if self.value_dim == 1 else c.copy()

    def component(self, j: int) -> "FourierSeries":
        return FourierSeries(self.coeffs[..., j : j + 1], real=self.real)

    def with_cutoff(self, cutoff: int) -> "FourierSeries":
        """Pad with zeros or drop modes so that the cutoff becomes ``cutoff``."""
        diff = cutoff - self.cutoff
        if diff == 0:
            return self
        if diff > 0:
            pad = [(diff, diff)] * self.dim + [(0, 0)]
            return FourierSeries(np.pad(self.coeffs, pad), real=self.real)
        cut = slice(-diff, diff)
        coeffs = self.coeffs[(cut,) * self.dim].copy()
        coeffs[_l1_norms(self.dim, cutoff) > cutoff] = 0
        return FourierSeries(coeffs, real=self.real)

    def _aligned(self, other: "FourierSeries") -> tuple["FourierSeries", "FourierSeries"]:
        if (self.dim, self.value_dim) != (other.dim, other.value_dim):
            raise ValueError(
                f"Shape mismatch: {(self.dim, self.value_dim)} "
                f"vs {(other.dim, other.value_dim)}."
            )
        cutoff = max(self.cutoff, other.cutoff)
        return self.with_cutoff(cutoff), other.with_cutoff(cutoff)

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        a, b = self._aligned(other)
        return FourierSeries(a.coeffs + b.coeffs, real=a.real and b.real)

    def __sub__(self, other: "FourierSeries") -> "FourierSeries":
        a, b = self._aligned(other)
        return FourierSeries(a.coeffs - b.coeffs, real=a.real and b.real)

    def __neg__(self) -> "FourierSeries":
        return FourierSeries(-self.coeffs, real=self.real)

    def __mul__(self, scalar: complex) -> "FourierSeries":
        real = self.real and not np.iscomplexobj(scalar)
        return FourierSeries(self.coeffs * scalar, real=real)

    __rmul__ = __mul__

    def shift(self, alpha: ArrayLike) -> "FourierSeries":
        """Series of ``theta -> f(theta + alpha)``."""
        alpha_ = np.broadcast_to(np.asarray(alpha, dtype=float), (self.dim,))
        phase = np.exp(1j * (_wavenumbers(self.dim, self.cutoff) @ alpha_))
        return FourierSeries(self.coeffs * phase[..., None], real=self.real)

    def derivative(self, axis: int = 0) -> "FourierSeries":
        """Partial derivative along an angle axis."""
        factor = 1j * _wavenumbers(self.dim, self.cutoff)[..., axis]
        return FourierSeries(self.coeffs * factor[..., None], real=self.real)

    def evaluate(self, points: ArrayLike) -> NDArray[Any]:
        """
        Sum the series at arbitrary, possibly complex, angles.

        Parameters
        ----------
        points : ArrayLike
            Angles of shape (P, dim); (P,) is accepted when dim is 1.

        Returns
        -------
        NDArray[Any]
            Values of shape (P, value_dim). Real when the series is real
            and the points are real.

        """
        pts = _as_points(points, self.dim)
        modes, flat = self.modes, self.flat
        rows = max(1, _CHUNK // max(1, len(modes)))
        out = np.empty((len(pts), self.value_dim), dtype=np.complex128)
        for start in range(0, len(pts), rows):
            block = pts[start : start + rows]
            out[start : start + rows] = np.exp(1j * (block @ modes.T)) @ flat
        if self.real and not np.iscomplexobj(pts):
            return out.real
        return out

    def __call__(self, points: ArrayLike) -> Any:
        values = self.evaluate(points)
        if self.value_dim == 1:
            values = values[:, 0]
        if np.ndim(points) == 0:
            return values[0]
        return values

    def on_grid(self, size: int) -> NDArray[Any]:
        """
        Values on the uniform grid with ``size`` points per axis.

        Returns
        -------
        NDArray[Any]
            Array of shape ``(size,) * dim + (value_dim,)``.

        Raises
        ------
        GridTooCoarse
            If ``size < 2K + 1``.

        """
        if size < 2 * self.cutoff + 1:
            raise GridTooCoarse(
                f"{size} points per axis cannot carry cutoff {self.cutoff}."
            )
        box = np.zeros((size,) * self.dim + (self.value_dim,), dtype=np.complex128)
        box[tuple((self.modes % size).T)] = self.flat
        values = scipy.fft.ifftn(box, axes=tuple(range(self.dim))) * size**self.dim
        return values.real if self.real else values

    def grid_values(self, size: int) -> NDArray[Any]:
        """Same as :meth:`on_grid`, flattened to (P, value_dim)."""
        return self.on_grid(size).reshape(-1, self.value_dim)

    def norm(
        self, h: float = 0.0, flavor: NormFlavor | str = NormFlavor.GRID_SUP
    ) -> float:
        return strip_norm(self, h, flavor)

    def to_record(self) -> dict[str, Any]:
        """Structured-text form; floats are shortest round-trip reprs."""
        entries: list[list[Any]] = []
        for k, c in zip(self.modes, self.flat, strict=True):
            if not np.any(c):
                continue
            if self.value_dim == 1:
                entries.append([k.tolist(), float(c[0].real), float(c[0].imag)])
            else:
                entries.append([k.tolist(), c.real.tolist(), c.imag.tolist()])
        return {
            "dim": self.dim,
            "value_dim": self.value_dim,
            "cutoff": self.cutoff,
            "real": self.real,
            "entries": entries,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "FourierSeries":
        dim, cutoff = int(record["dim"]), int(record["cutoff"])
        value_dim = int(record["value_dim"])
        coeffs = np.zeros((2 * cutoff + 1,) * dim + (value_dim,), dtype=np.complex128)
        for k, re, im in record["entries"]:
            coeffs[tuple(i + cutoff for i in k)] = np.asarray(re) + 1j * np.asarray(im)
        return cls(coeffs, real=bool(record.get("real", True)))


class Truncation(NamedTuple):
    """Split of a series into its oscillating head, mean and tail size."""

    series: FourierSeries
    mean: complex | NDArray[np.complex128]
    remainder_norm: float


def analyze(
    samples: ArrayLike,
    cutoff: int,
    *,
    dim: int | None = None,
    real: bool | None = None,
) -> FourierSeries:
    """
    Fourier coefficients of grid samples, restricted to |k|_1 <= cutoff.

    Parameters
    ----------
    samples : ArrayLike
        Values on the uniform grid ``2 pi j / N``. Shape ``(N,) * dim`` for
        scalars or ``(N,) * dim + (value_dim,)`` for vector values.
    cutoff : int
        The cutoff K.
    dim : int | None, optional
        The torus dimension, by default ``samples.ndim`` (scalar samples).
    real : bool | None, optional
        Whether to treat the samples as real, by default inferred from dtype.
        Real samples are symmetrized to exact Hermitian form.

    Returns
    -------
    FourierSeries
        The interpolant's coefficients on the l1 ball.

    Raises
    ------
    GridTooCoarse
        If ``N < 2K + 2``.

    """
    arr = np.asarray(samples)
    if dim is None:
        dim = arr.ndim
    if arr.ndim == dim:
        arr = arr[..., None]
    size = arr.shape[0]
    if arr.shape[:dim] != (size,) * dim:
        raise ValueError(f"samples must lie on a square grid, got {arr.shape}.")
    if size < 2 * cutoff + 2:
        raise GridTooCoarse(
            f"{size} points per axis cannot resolve cutoff {cutoff}; "
            f"need at least {2 * cutoff + 2}."
        )
    if real is None:
        real = not np.iscomplexobj(arr)
    spectrum = scipy.fft.fftn(arr, axes=tuple(range(dim))) / size**dim
    modes = l1_modes(dim, cutoff)
    coeffs = np.zeros((2 * cutoff + 1,) * dim + (arr.shape[-1],), dtype=np.complex128)
    coeffs[tuple((modes + cutoff).T)] = spectrum[tuple((modes % size).T)]
    if real:
        coeffs = (coeffs + np.conj(_flip(coeffs))) / 2
    return FourierSeries(coeffs, real=real)


def synthesize(f: FourierSeries, points: ArrayLike) -> Any:
    """Evaluate ``sum_k f_k exp(i <k, theta>)`` at the given points."""
    return f(points)


def truncate(f: FourierSeries, cutoff: int, h: float = 0.0) -> Truncation:
    """
    Truncation and remainder operators.

    Parameters
    ----------
    f : FourierSeries
        The series.
    cutoff : int
        Modes ``0 < |k|_1 <= cutoff`` are kept.
    h : float, optional
        Strip width at which the remainder is measured, by default 0.

    Returns
    -------
    Truncation
        The head without its mean, the mean, and the coefficient-weighted
        norm of the discarded modes.

    Raises
    ------
    ValueError
        If ``cutoff`` exceeds the cutoff of ``f``.

    """
    if cutoff > f.cutoff:
        raise ValueError(f"cutoff {cutoff} exceeds the stored cutoff {f.cutoff}.")
    norms = _l1_norms(f.dim, f.cutoff)
    weights = np.exp(norms * h)[..., None]
    tail = np.where((norms > cutoff)[..., None], np.abs(f.coeffs) * weights, 0.0)
    remainder = float(np.max(tail.reshape(-1, f.value_dim).sum(axis=0)))
    head = f.with_cutoff(cutoff)
    coeffs = np.array(head.coeffs)
    mean = coeffs[(cutoff,) * f.dim].copy()
    coeffs[(cutoff,) * f.dim] = 0
    return Truncation(
        FourierSeries(coeffs, real=f.real),
        complex(mean[0]) if f.value_dim == 1 else mean,
        remainder,
    )


def strip_norm(
    f: FourierSeries, h: float = 0.0, flavor: NormFlavor | str = NormFlavor.GRID_SUP
) -> float:
    """
    Supremum norm on the complex strip |Im theta| <= h.

    Parameters
    ----------
    f : FourierSeries
        The series.
    h : float, optional
        The strip half-width, by default 0.
    flavor : NormFlavor | str, optional
        ``grid_sup`` samples the extreme imaginary parts ``{-h, h}^n`` on a
        real grid of ``max(4K, 8)`` points per axis; ``coeff_weighted``
        returns ``sum |f_k| exp(|k|_1 h)``. By default ``grid_sup``.

    Returns
    -------
    float
        The norm, maximized over value components.

    """
    if h < 0:
        raise ValueError(f"h must be non-negative, got {h}.")
    flavor = NormFlavor(flavor)
    if flavor == NormFlavor.COEFF_WEIGHTED:
        weights = np.exp(_l1_norms(f.dim, f.cutoff) * h)[..., None]
        sums = (np.abs(f.coeffs) * weights).reshape(-1, f.value_dim).sum(axis=0)
        return float(np.max(sums))
    size = max(4 * f.cutoff, 8)
    k = _wavenumbers(f.dim, f.cutoff)
    signs = [(0,) * f.dim] if h == 0 else list(product((-1, 1), repeat=f.dim))
    best = 0.0
    for sign in signs:
        damp = np.exp(-h * (k @ np.asarray(sign, dtype=float)))
        tilted = FourierSeries(f.coeffs * damp[..., None], real=False)
        best = max(best, float(np.max(np.abs(tilted.on_grid(size)))))
    return best


def modulus_seminorm(
    f_at_params: Mapping[Any, FourierSeries],
    modulus: Any,
    h: float = 0.0,
    flavor: NormFlavor | str = NormFlavor.GRID_SUP,
) -> float:
    """
    Modulus-of-continuity seminorm over a finite parameter sample set.

    Parameters
    ----------
    f_at_params : Mapping[Any, FourierSeries]
        Series keyed by parameter sample (float or tuple of floats).
    modulus : ModulusOfContinuity
        The gauge dividing the increments.
    h : float, optional
        Strip width of the norm, by default 0.
    flavor : NormFlavor | str, optional
        Norm flavor, by default ``grid_sup``.

    Returns
    -------
    float
        Max over pairs with ``0 < |xi' - xi''|_1 <= 1`` of
        ``strip_norm(f(xi') - f(xi''), h) / modulus(|xi' - xi''|)``.

    Raises
    ------
    DegenerateSampleSet
        If no such pair exists.

    """
    items = [(np.atleast_1d(np.asarray(p, dtype=float)), s) for p, s in f_at_params.items()]
    best, seen = 0.0, False
    for (x, fx), (y, fy) in combinations(items, 2):
        dist = float(np.abs(x - y).sum())
        if not 0 < dist <= 1:
            continue
        seen = True
        best = max(best, strip_norm(fx - fy, h, flavor) / float(modulus(dist)))
    if not seen:
        raise DegenerateSampleSet(
            "need two parameter samples at l1 distance in (0, 1]."
        )
    return best


def invert_near_identity(
    u: FourierSeries,
    targets: ArrayLike,
    *,
    max_iter: int = 25,
) -> NDArray[np.float64]:
    """
    Solve ``phi + u(phi) = target`` pointwise by Newton's method.

    Parameters
    ----------
    u : FourierSeries
        Real vector field with ``value_dim == dim``.
    targets : ArrayLike
        Real points of shape (P, dim); they are lifts, not reduced mod 2 pi.
    max_iter : int, optional
        Iteration cap, by default 25.

    Returns
    -------
    NDArray[np.float64]
        The preimages, shape (P, dim).

    Raises
    ------
    InversionFailure
        If the residual does not reach the rounding floor within
        ``max_iter`` iterations.

    """
    if u.value_dim != u.dim:
        raise ValueError("u must be a vector field on the torus.")
    y = _as_points(targets, u.dim).astype(float)
    scale = 1.0 + float(np.max(np.abs(y), initial=0.0))
    floor = 8 * np.finfo(float).eps * scale
    modes, flat = u.modes, u.flat
    phi = y - u.evaluate(y)
    best, best_res = phi, np.inf
    for _ in range(max_iter):
        table = np.exp(1j * (phi @ modes.T))
        res = phi + (table @ flat).real - y
        worst = float(np.max(np.abs(res), initial=0.0))
        if worst < best_res:
            best, best_res = phi, worst
        if worst <= floor:
            return phi
        jac = np.stack(
            [(table * (1j * modes[:, b])) @ flat for b in range(u.dim)], axis=-1
        ).real
        jac += np.eye(u.dim)
        phi = phi - np.linalg.solve(jac, res[..., None])[..., 0]
        if not np.all(np.isfinite(phi)):
            break
    if best_res <= 1e-12 * scale:
        return best
    raise InversionFailure(
        f"Newton inversion stalled at residual {best_res:.3e} after {max_iter} iterations."
    )


@dataclass(frozen=True)
class TorusGrid:
    """
    Uniform grid on the torus.

    Parameters
    ----------
    dim : int
        The torus dimension.
    size : int
        Points per axis.

    """

    dim: int
    size: int

    @classmethod
    def for_cutoff(cls, dim: int, cutoff: int) -> "TorusGrid":
        """Grid wide enough for products of two series of the given cutoff."""
        return cls(dim, max(2 * cutoff + 2, 4 * cutoff))

    @property
    def cutoff(self) -> int:
        """Largest cutoff that :meth:`analyze` accepts."""
        return self.size // 2 - 1

    @cached_property
    def points(self) -> NDArray[np.float64]:
        axis = 2 * np.pi * np.arange(self.size) / self.size
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dim)

    def analyze(self, values: ArrayLike, cutoff: int | None = None) -> FourierSeries:
        """Analyze values given at :attr:`points`, shape (P,) or (P, value_dim)."""
        arr = np.asarray(values)
        shape = (self.size,) * self.dim + arr.shape[1:]
        return analyze(
            arr.reshape(shape),
            self.cutoff if cutoff is None else cutoff,
            dim=self.dim,
        )
