"""Label algebras of binary semi-isolating formulas on finite structures."""

from .algebra import (
    Label,
    LabelAlgebra,
    algebra_isomorphic,
    check_proposition,
    classify_label,
    complement_label,
    compose_labels,
    extract_algebra,
    monoid_closure,
)
from .orbits import find_automorphisms, is_invariant, pair_atoms, point_orbits
from .structure import (
    FiniteStructure,
    Relation,
    parse_structure,
    relation_compose,
    relation_converse,
    validate_structure,
)
from .synth import SynthSpec, roundtrip, synthesize, validate_spec, verify_model

__all__ = [
    "FiniteStructure", "Relation", "parse_structure", "relation_compose", "relation_converse",
    "validate_structure", "find_automorphisms", "point_orbits", "pair_atoms", "is_invariant",
    "Label", "LabelAlgebra", "extract_algebra", "complement_label", "compose_labels",
    "classify_label", "check_proposition", "monoid_closure", "algebra_isomorphic",
    "SynthSpec", "synthesize", "verify_model", "validate_spec", "roundtrip",
]
