import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from functools import cache
from typing import Any, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from strenum import StrEnum

from .._diagnostics import rotation_number
from .._divisors import golden_like_frequency
from .._frequency import FrequencyMap, degree
from .._models import ParamMapModel, TwistMapModel
from .._modulus import lipschitz, power_gauge
from ._lacunary import LacunaryField, nowhere_hoelder_parameter_field

Model: TypeAlias = TwistMapModel | ParamMapModel | FrequencyMap
Box: TypeAlias = tuple[ArrayLike, ArrayLike]


class ModelKind(StrEnum):
    TWIST = "twist"
    PARAM = "param"
    FREQUENCY = "frequency"


def golden() -> float:
    """``2 pi (sqrt 5 - 1) / 2``."""
    return float(golden_like_frequency([1])[0])


def _box(center: NDArray[np.float64], box: Box | None) -> Box:
    if box is not None:
        return box
    return center - 1, center + 1


def standard_family(
    epsilon: float,
    p: float | None = None,
    drift: float = 0.0,
    action_box: Box | None = None,
) -> TwistMapModel:
    """
    The area-preserving family ``theta' = theta + r', r' = r + eps sin theta``.

    Parameters
    ----------
    epsilon : float
        Perturbation size.
    p : float | None, optional
        Target rotation, by default the golden rotation.
    drift : float, optional
        Constant added to the angle perturbation, by default 0. A nonzero
        drift moves the invariant circle by about ``-epsilon * drift``.
    action_box : Box | None, optional
        The action interval E, by default ``[p - 1, p + 1]``.

    Returns
    -------
    TwistMapModel
        The member with ``omega(r) = r`` and base action ``r_* = p``.

    """
    r_star = np.atleast_1d(golden() if p is None else float(p))
    lower, upper = _box(r_star, action_box)
    freq = FrequencyMap(
        lambda r: r,
        lower,
        upper,
        modulus_upper=lipschitz(),
        base=r_star,
        name="identity",
    )
    return TwistMapModel(
        freq,
        lambda theta, r: np.sin(theta) + drift,
        lambda theta, r: np.sin(theta),
        epsilon=epsilon,
        r_star=r_star,
        intersection=True,
        name="generating" if drift else "standard",
    )


def monotone_cubic_family(
    epsilon: float, p: float | None = None, action_box: Box | None = None
) -> TwistMapModel:
    """
    ``r' = r + eps sin theta, theta' = theta + omega(r')`` with ``omega(r) = r + r^3 / 10``.

    The frequency map is strictly monotone but not affine.
    """
    p_ = golden() if p is None else float(p)

    def omega(r: Any) -> Any:
        return r + 0.1 * r**3

    r_star = np.atleast_1d(brentq(lambda r: omega(r) - p_, -10, 10, xtol=1e-15))
    lower, upper = _box(r_star, action_box)
    freq = FrequencyMap(omega, lower, upper, base=r_star, name="monotone_cubic")

    def f(theta: Any, r: Any) -> Any:
        if epsilon == 0:
            return np.sin(theta) * (1 + 0.3 * r**2)
        return (omega(r + epsilon * np.sin(theta)) - omega(r)) / epsilon

    return TwistMapModel(
        freq,
        f,
        lambda theta, r: np.sin(theta),
        epsilon=epsilon,
        r_star=r_star,
        name="monotone_cubic",
    )


def weakly_convex_frequency(
    beta: int = 3,
    p: float | None = None,
    r_star: float | None = None,
    delta: float = 0.5,
) -> FrequencyMap:
    """
    ``omega(r) = p + (r - r_*)^beta`` with vanishing derivative at ``r_*``.

    Parameters
    ----------
    beta : int, optional
        Odd exponent of at least 3, by default 3.
    p : float | None, optional
        Value at the base point, by default the golden rotation.
    r_star : float | None, optional
        Base point, by default ``p``.
    delta : float, optional
        Radius of the weak-convexity ball, by default 0.5.

    Returns
    -------
    FrequencyMap
        The map on ``[r_* - 1, r_* + 1]`` with lower gauge ``x^beta / 4``.

    Raises
    ------
    ValueError
        If ``beta`` is not an odd integer of at least 3.

    """
    if beta < 3 or beta % 2 != 1:
        raise ValueError(f"beta must be an odd integer >= 3, got {beta}.")
    p_ = golden() if p is None else float(p)
    base = np.atleast_1d(p_ if r_star is None else float(r_star))
    return FrequencyMap(
        lambda r: p_ + (r - base) ** beta,
        base - 1,
        base + 1,
        modulus_lower=power_gauge(beta, 0.25),
        modulus_upper=lipschitz(),
        seminorm=float(beta),
        base=base,
        delta=delta,
        name=f"weakly_convex({beta})",
    )


def _weakly_convex_model(
    epsilon: float, p: float | None = None, action_box: Box | None = None
) -> TwistMapModel:
    freq = weakly_convex_frequency(3, p)
    if action_box is not None:
        freq = FrequencyMap(
            freq.func,
            *action_box,
            modulus_lower=freq.modulus_lower,
            modulus_upper=freq.modulus_upper,
            seminorm=freq.seminorm,
            base=freq.base,
            delta=freq.delta,
            name=freq.name,
        )
    return TwistMapModel(
        freq,
        lambda theta, r: 1 + np.cos(theta),
        lambda theta, r: np.zeros_like(theta),
        epsilon=epsilon,
        name="weakly_convex",
    )


def _rotation_model(
    f: Callable[[NDArray[Any], NDArray[Any]], Any],
    name: str,
    epsilon: float,
    q: float | None = None,
    parameter_box: Box | None = None,
) -> ParamMapModel:
    xi_star = np.atleast_1d(golden() if q is None else float(q))
    lower, upper = _box(xi_star, parameter_box)
    freq = FrequencyMap(
        lambda xi: xi,
        lower,
        upper,
        modulus_upper=lipschitz(),
        base=xi_star,
        name="identity",
    )
    return ParamMapModel(freq, f, epsilon=epsilon, xi_star=xi_star, name=name)


@cache
def lacunary_field(seed: int = 0, amplitude: float = 1e-3) -> LacunaryField:
    """The parameter field of the ``nowhere_hoelder`` entry."""
    return nowhere_hoelder_parameter_field(seed, amplitude)


def _nowhere_hoelder_model(
    epsilon: float, q: float | None = None, parameter_box: Box | None = None
) -> ParamMapModel:
    field_ = lacunary_field()

    def f(theta: NDArray[Any], xi: NDArray[Any]) -> Any:
        value = field_(xi[0])
        return value + (1 + 0.1 * value) * np.cos(theta)

    return _rotation_model(f, "nowhere_hoelder", epsilon, q, parameter_box)


def _bare_map(
    func: Callable[[NDArray[Any]], Any], name: str, dim: int = 1
) -> Callable[..., FrequencyMap]:
    def build(
        epsilon: float = 0.0, target: Any = None, box: Box | None = None
    ) -> FrequencyMap:
        lower, upper = box if box is not None else (-np.ones(dim), np.ones(dim))
        return FrequencyMap(func, lower, upper, name=name)

    return build


def _complex_square(x: NDArray[Any]) -> NDArray[Any]:
    z = x[:, 0] + 1j * x[:, 1]
    w = z**2
    return np.stack([w.real, w.imag], axis=1)


@dataclass(frozen=True)
class MapCatalogEntry:
    """
    A named model with machine-checkable facts.

    Parameters
    ----------
    name : str
        Catalog key.
    kind : ModelKind
        Twist model, parameter model or bare frequency map.
    build : Callable[..., Model]
        Factory taking ``epsilon``, ``target`` and ``box`` overrides.
    known_facts : Mapping[str, Any]
        Facts verified by :func:`check_known_facts`.
    default_epsilon : float, optional
        Perturbation size used by :meth:`model` when none is given.
    description : str, optional
        One-line summary.

    """

    name: str
    kind: ModelKind
    build: Callable[..., Model]
    known_facts: Mapping[str, Any] = field(default_factory=dict)
    default_epsilon: float = 0.0
    description: str = ""

    def model(
        self,
        epsilon: float | None = None,
        target: float | ArrayLike | None = None,
        box: Box | None = None,
    ) -> Model:
        """Build the model, with ``target`` the prescribed p or q."""
        eps = self.default_epsilon if epsilon is None else epsilon
        return self.build(eps, target, box)

    @property
    def target(self) -> NDArray[np.float64]:
        """The prescribed frequency of the default model."""
        model = self.model(0.0)
        if isinstance(model, FrequencyMap):
            return np.atleast_1d(np.asarray(self.known_facts.get("p", 0.0), dtype=float))
        return model.target


def frequency_map(model: Model) -> FrequencyMap:
    return model if isinstance(model, FrequencyMap) else model.freq


CATALOG: dict[str, MapCatalogEntry] = {
    entry.name: entry
    for entry in (
        MapCatalogEntry(
            "standard",
            ModelKind.TWIST,
            lambda eps, p, box: standard_family(eps, p, action_box=box),
            {
                "degree": 1,
                "area_preserving": True,
                "intersection": True,
                "rotation_number": golden(),
            },
            1e-4,
            "theta' = theta + r', r' = r + eps sin theta",
        ),
        MapCatalogEntry(
            "generating",
            ModelKind.TWIST,
            lambda eps, p, box: standard_family(
                eps, p, drift=1.0, action_box=box if box is not None else (2.0, 4.5)
            ),
            {
                "degree": 1,
                "area_preserving": True,
                "intersection": True,
                "rotation_number": golden(),
            },
            1e-4,
            "standard family with a unit angle drift on E = [2, 4.5]",
        ),
        MapCatalogEntry(
            "monotone_cubic",
            ModelKind.TWIST,
            monotone_cubic_family,
            {
                "degree": 1,
                "area_preserving": True,
                "intersection": True,
                "rotation_number": golden(),
            },
            1e-4,
            "omega(r) = r + r^3 / 10 in generating form",
        ),
        MapCatalogEntry(
            "weakly_convex",
            ModelKind.TWIST,
            _weakly_convex_model,
            {
                "degree": 1,
                "area_preserving": False,
                "intersection": True,
                "modulus_lower": "power(3, 0.25)",
                "rotation_number": golden(),
            },
            1e-5,
            "omega(r) = p + (r - r_*)^3, f = 1 + cos theta, g = 0",
        ),
        MapCatalogEntry(
            "rotation",
            ModelKind.PARAM,
            lambda eps, q, box: _rotation_model(
                lambda theta, xi: 1 + np.cos(theta), "rotation", eps, q, box
            ),
            {"degree": 1, "rotation_number": golden()},
            1e-4,
            "theta' = theta + xi + eps (1 + cos theta)",
        ),
        MapCatalogEntry(
            "zero_mean_rotation",
            ModelKind.PARAM,
            lambda eps, q, box: _rotation_model(
                lambda theta, xi: np.cos(theta), "zero_mean_rotation", eps, q, box
            ),
            {"degree": 1, "rotation_number": golden()},
            1e-3,
            "theta' = theta + xi + eps cos theta",
        ),
        MapCatalogEntry(
            "nowhere_hoelder",
            ModelKind.PARAM,
            _nowhere_hoelder_model,
            {
                "degree": 1,
                "rotation_number": golden(),
                "hoelder_exponent_below": 0.15,
            },
            1e-5,
            "lacunary parameter field F, f = F(xi) + (1 + F(xi) / 10) cos theta",
        ),
        MapCatalogEntry(
            "identity_1d",
            ModelKind.FREQUENCY,
            _bare_map(lambda x: x, "identity_1d"),
            {"degree": 1, "p": 0.0},
        ),
        MapCatalogEntry(
            "reversed_1d",
            ModelKind.FREQUENCY,
            _bare_map(lambda x: -x, "reversed_1d"),
            {"degree": -1, "p": 0.0},
        ),
        MapCatalogEntry(
            "square_1d",
            ModelKind.FREQUENCY,
            _bare_map(lambda x: x**2, "square_1d"),
            {"degree": 0, "p": 0.5},
        ),
        MapCatalogEntry(
            "cubic",
            ModelKind.FREQUENCY,
            _bare_map(lambda x: x**3, "cubic"),
            {"degree": 1, "p": 0.0},
        ),
        MapCatalogEntry(
            "identity_2d",
            ModelKind.FREQUENCY,
            _bare_map(lambda x: x, "identity_2d", 2),
            {"degree": 1, "p": (0.0, 0.0)},
        ),
        MapCatalogEntry(
            "complex_square",
            ModelKind.FREQUENCY,
            _bare_map(_complex_square, "complex_square", 2),
            {"degree": 2, "p": (0.1, 0.0)},
        ),
    )
}


def list_catalog() -> list[MapCatalogEntry]:
    return list(CATALOG.values())


def get_entry(name: str) -> MapCatalogEntry:
    """
    Look up a catalog entry.

    Raises
    ------
    KeyError
        If no entry has this name.

    """
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(CATALOG)}.") from None


def jacobian_determinant(
    model: TwistMapModel, theta: ArrayLike, r: ArrayLike, h: float = 1e-20
) -> NDArray[np.float64]:
    """
    Jacobian determinant of a twist map by complex-step differentiation.

    Parameters
    ----------
    model : TwistMapModel
        A model whose callables accept complex arguments.
    theta, r : ArrayLike
        Points of shape (P, n).
    h : float, optional
        Imaginary step, by default 1e-20.

    Returns
    -------
    NDArray[np.float64]
        Determinants of shape (P,).

    """
    n = model.dim
    state = np.concatenate(
        [np.asarray(theta, dtype=float).reshape(-1, n), np.asarray(r, dtype=float).reshape(-1, n)],
        axis=1,
    ).astype(complex)
    columns = []
    for j in range(2 * n):
        probe = state.copy()
        probe[:, j] += 1j * h
        columns.append(np.imag(model.state_map(probe)) / h)
    return np.linalg.det(np.stack(columns, axis=-1))


def _rigid_rotation(model: TwistMapModel | ParamMapModel) -> float:
    if isinstance(model, TwistMapModel):
        x0 = np.concatenate([np.full(model.dim, 0.1), model.r_star])
        return float(np.max(rotation_number(model.state_map, x0).value))
    xi = model.xi_star
    return float(np.max(rotation_number(lambda th: model.step(th, xi), np.full(model.dim, 0.1)).value))


def _crosses(model: TwistMapModel, size: int = 64) -> bool:
    theta = np.linspace(0, 2 * np.pi, size, endpoint=False)[:, None]
    for r in frequency_map(model).mesh(9):
        g = np.real(model.g_pert(theta, np.broadcast_to(r, theta.shape)))
        if not np.min(g) <= 0 <= np.max(g):
            return False
    return True


def check_known_facts(
    entry: MapCatalogEntry, rng: np.random.Generator | None = None
) -> dict[str, bool]:
    """
    Verify every known fact of a catalog entry.

    Parameters
    ----------
    entry : MapCatalogEntry
        The entry.
    rng : np.random.Generator | None, optional
        Source of sample points, by default seeded with 0.

    Returns
    -------
    dict[str, bool]
        Whether each fact holds.

    """
    rng = np.random.default_rng(0) if rng is None else rng
    facts = entry.known_facts
    model = entry.model(0.0)
    freq = frequency_map(model)
    p = entry.target
    out: dict[str, bool] = {}
    if "degree" in facts:
        out["degree"] = degree(freq, p) == facts["degree"]
    if "rotation_number" in facts and not isinstance(model, FrequencyMap):
        out["rotation_number"] = math.isclose(
            _rigid_rotation(model), facts["rotation_number"], abs_tol=1e-9
        )
    if isinstance(model, TwistMapModel):
        if "area_preserving" in facts:
            perturbed = entry.model(0.5)
            assert isinstance(perturbed, TwistMapModel)
            theta = rng.uniform(0, 2 * np.pi, (64, model.dim))
            r = rng.uniform(freq.lower, freq.upper, (64, model.dim))
            det = jacobian_determinant(perturbed, theta, r)
            out["area_preserving"] = bool(np.all(np.abs(det - 1) <= 1e-12)) == facts["area_preserving"]
        if "intersection" in facts:
            out["intersection"] = _crosses(model) == facts["intersection"]
    if "modulus_lower" in facts:
        assert freq.modulus_lower is not None
        out["modulus_lower"] = (
            freq.modulus_lower.name == facts["modulus_lower"]
            and freq.check_weak_convexity(rng=rng) >= 1 - 1e-9
        )
    if "hoelder_exponent_below" in facts:
        out["hoelder_exponent_below"] = (
            lacunary_field().hoelder_exponent(rng=rng) < facts["hoelder_exponent_below"]
        )
    return out
