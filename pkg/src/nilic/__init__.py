"""Exact rational checks of intersection-complex constructions for commuting nilpotent tuples."""
from .complexes import ComplexMap, FilteredComplex, cohomology, cone, is_quasi_iso
from .filtration import Filtration, monodromy_filtration, relative_monodromy
from .instance import NilInstance
from .linalg import LinMap, Quotient, Subspace
from .pmts import generate, random_commuting_tuple

__all__ = [
    "ComplexMap", "FilteredComplex", "Filtration", "LinMap", "NilInstance", "Quotient", "Subspace",
    "cohomology", "cone", "generate", "is_quasi_iso", "monodromy_filtration", "random_commuting_tuple",
    "relative_monodromy",
]
