from ._catalog import (
    CATALOG,
    MapCatalogEntry,
    ModelKind,
    check_known_facts,
    frequency_map,
    get_entry,
    golden,
    jacobian_determinant,
    lacunary_field,
    list_catalog,
    monotone_cubic_family,
    standard_family,
    weakly_convex_frequency,
)
from ._lacunary import LacunaryField, nowhere_hoelder_parameter_field

__all__ = [
    "CATALOG",
    "LacunaryField",
    "MapCatalogEntry",
    "ModelKind",
    "check_known_facts",
    "frequency_map",
    "get_entry",
    "golden",
    "jacobian_determinant",
    "lacunary_field",
    "list_catalog",
    "monotone_cubic_family",
    "nowhere_hoelder_parameter_field",
    "standard_family",
    "weakly_convex_frequency",
]
