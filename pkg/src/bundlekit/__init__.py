"""Bundled modal operators on finite models: semantics, bisimulation, neighborhood frames."""
from .errors import (ArityError, BundleError, CapExceeded, GenerationError, ModelFormatError, ParseError,
                     PreconditionError, UnknownAgent, UnknownProposition)
from .terms import (AgentId, And, Circle, Conj, ConvexClass, Delta, Formula, MinusLeaf, Nabla, Neg, Or, PlusLeaf,
                    Prop, Term, Top, classify_convex_syntactic, parse_formula, parse_term, render)
from .kripke import (Caps, KripkeModel, ModelClass, NbhPair, Verdict, check_model_class, completion, disjoint_union,
                     dom, evaluate, is_convex, nbh, term_sat)
from .bisim import (bisimilar, convex_bisimilar, equiv_partition, is_bisimulation, is_convex_bisimulation,
                    largest_bisimulation, largest_convex_bisimulation)
from .neighborhood import ConvexNbhModel, is_core, nsat, property_check
from .schemas import get_schema, schema_valid_on_frame
from .representation import (is_representation, represent_belief_without_knowledge, represent_group_knowledge,
                             unravel)

__version__ = "0.1.0"

__all__ = [
    "ArityError", "BundleError", "CapExceeded", "GenerationError", "ModelFormatError", "ParseError",
    "PreconditionError", "UnknownAgent", "UnknownProposition",
    "AgentId", "And", "Circle", "Conj", "ConvexClass", "Delta", "Formula", "MinusLeaf", "Nabla", "Neg", "Or",
    "PlusLeaf", "Prop", "Term", "Top", "classify_convex_syntactic", "parse_formula", "parse_term", "render",
    "Caps", "KripkeModel", "ModelClass", "NbhPair", "Verdict", "check_model_class", "completion", "disjoint_union",
    "dom", "evaluate", "is_convex", "nbh", "term_sat",
    "bisimilar", "convex_bisimilar", "equiv_partition", "is_bisimulation", "is_convex_bisimulation",
    "largest_bisimulation", "largest_convex_bisimulation",
    "ConvexNbhModel", "is_core", "nsat", "property_check",
    "get_schema", "schema_valid_on_frame",
    "is_representation", "represent_belief_without_knowledge", "represent_group_knowledge", "unravel",
]
