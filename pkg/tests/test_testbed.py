import numpy as np
import pytest

from kamforge._models import TwistMapModel
from kamforge.testbed import (
    CATALOG,
    ModelKind,
    check_known_facts,
    frequency_map,
    get_entry,
    golden,
    jacobian_determinant,
    lacunary_field,
    monotone_cubic_family,
    nowhere_hoelder_parameter_field,
    standard_family,
    weakly_convex_frequency,
)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_known_facts_hold(name: str) -> None:
    facts = check_known_facts(get_entry(name))
    assert facts
    assert all(facts.values()), facts


def test_catalog_kinds() -> None:
    kinds = {entry.kind for entry in CATALOG.values()}
    assert kinds == set(ModelKind)
    for entry in CATALOG.values():
        if entry.kind != ModelKind.FREQUENCY:
            assert entry.default_epsilon > 0


def test_get_entry_unknown() -> None:
    with pytest.raises(KeyError, match="unknown model"):
        get_entry("henon")


def test_entry_overrides() -> None:
    model = get_entry("generating").model(1e-3, target=3.0)
    assert isinstance(model, TwistMapModel)
    assert model.epsilon == 1e-3
    assert model.r_star == pytest.approx([3.0])
    assert frequency_map(model).lower == pytest.approx([2.0])
    assert frequency_map(model).upper == pytest.approx([4.5])


@pytest.mark.parametrize("epsilon", [0.1, 0.9])
def test_standard_family_is_area_preserving(epsilon: float, rng: np.random.Generator) -> None:
    model = standard_family(epsilon)
    theta = rng.uniform(0, 2 * np.pi, (16, 1))
    r = rng.uniform(-1, 1, (16, 1))
    assert jacobian_determinant(model, theta, r) == pytest.approx(np.ones(16), abs=1e-12)


def test_monotone_cubic_base_action() -> None:
    model = monotone_cubic_family(1e-4)
    assert model.target == pytest.approx([golden()], abs=1e-14)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_weakly_convex_rejects_exponent(beta: int) -> None:
    with pytest.raises(ValueError):
        weakly_convex_frequency(beta)


def test_weakly_convex_frequency_is_flat_at_base() -> None:
    freq = weakly_convex_frequency(5)
    assert freq.base is not None
    assert freq(freq.base + 0.1)[0] - freq(freq.base)[0] == pytest.approx(1e-5)
    assert freq.modulus_lower is not None
    assert freq.modulus_lower.name == "power(5, 0.25)"


def test_lacunary_field_has_no_hoelder_exponent() -> None:
    field = lacunary_field()
    assert field.terms == 3
    assert field.frequencies == pytest.approx(np.exp([1.0, 4.0, 18.0]))
    assert field.sup_bound <= 1e-3 * (np.e - 1)
    assert field.hoelder_exponent() < 0.15
    assert field.check_modulus() <= 1


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_lacunary_modulus_outgrows_hoelder_gauge(alpha: float) -> None:
    modulus = lacunary_field().modulus
    fine, coarse = 2.0**-20, 2.0**-4
    ratio = (float(modulus(fine)) / fine**alpha) / (float(modulus(coarse)) / coarse**alpha)
    assert ratio > 2


def test_smooth_field_has_hoelder_exponent() -> None:
    field = nowhere_hoelder_parameter_field(0, 1.0, n_terms=1)
    assert field.hoelder_exponent() == pytest.approx(1.0, abs=0.05)


def test_lacunary_field_drops_unresolved_terms() -> None:
    with pytest.warns(UserWarning, match="dropping"):
        field = nowhere_hoelder_parameter_field(0, 1e-3, n_terms=4)
    assert field.terms == 3


def test_lacunary_field_rejects_negative_amplitude() -> None:
    with pytest.raises(ValueError):
        nowhere_hoelder_parameter_field(0, -1.0)
