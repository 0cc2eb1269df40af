"""Exact enumeration and classification of perfect quadratic forms."""

from .canonical import CanonicalPQF, aut_order, canonical_pqf
from .classify import EutaxyStatus, bm_invariant_sq, dual_extreme_check, eutaxy_classify, is_extreme
from .polycone import ADMOptions, SavingBank, adm_facet_orbits, dual_description
from .quadform import hermite_invariant, is_perfect, minimal_vectors
from .voronoi import EnumerateOptions, FormDB, FormRecord, enumerate_forms, neighbours, root_form

__version__ = "0.1.0"

__all__ = [
    "ADMOptions", "CanonicalPQF", "EnumerateOptions", "EutaxyStatus", "FormDB", "FormRecord",
    "SavingBank", "adm_facet_orbits", "aut_order", "bm_invariant_sq", "canonical_pqf",
    "dual_description", "dual_extreme_check", "enumerate_forms", "eutaxy_classify",
    "hermite_invariant", "is_extreme", "is_perfect", "minimal_vectors", "neighbours", "root_form",
]
