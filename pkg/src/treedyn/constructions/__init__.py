"""Named groups, elements and measure families used as a test corpus."""
from .groups import grigorchuk, grigorchuk_relations, grigorchuk_rigid_candidates, lift_word, parity_group
from .rules import (NamedConstruction, CountSet, factorial_element, sm_elements, bifurcation_probe,
                    orthogonal_pair_element, separating_element, typical_count_set)
from .blocks import (dissipative_group, conservative_nonergodic_group, weakly_branch_nonergodic_group,
                     wandering_check, saturation_disjoint, invariance_check, rn_flip_bound, ProductSet)
from .family import MeasureFamily, build_measure_family, verify_compatibility, premise_report

__all__ = [
    "grigorchuk", "grigorchuk_relations", "grigorchuk_rigid_candidates", "lift_word", "parity_group",
    "NamedConstruction", "CountSet", "factorial_element", "sm_elements", "bifurcation_probe",
    "orthogonal_pair_element", "separating_element", "typical_count_set",
    "dissipative_group", "conservative_nonergodic_group", "weakly_branch_nonergodic_group",
    "wandering_check", "saturation_disjoint", "invariance_check", "rn_flip_bound", "ProductSet",
    "MeasureFamily", "build_measure_family", "verify_compatibility", "premise_report",
]
