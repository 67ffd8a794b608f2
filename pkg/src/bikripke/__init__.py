"""Bimodal Kripke logic with converse modalities.

Finite frames whose down relation is definitionally the converse of the up
relation, Kripke model checking over bit-vector world sets, substitution-
closed modal fragment computation, PL/S4/S4.2/S5 validity decision with
countermodels, and button/switch control analysis.
"""

from .errors import (
    BadWorldIndex,
    BikripkeError,
    BudgetExceeded,
    FormulaSyntaxError,
    FrameParseError,
    InsufficientControls,
    MixedDirections,
    OverlappingIndexSets,
    VerificationFailed,
)
from .formula import (
    DOWN,
    UP,
    And,
    Atom,
    Bot,
    Box,
    Dia,
    Direction,
    Formula,
    Iff,
    Imp,
    Not,
    Or,
    Top,
    enumerate_formulas,
    letters,
    modal_depth,
    parse,
    print_formula,
    size,
    subformulas,
    substitute,
)
from .frame import (
    Frame,
    PointedModel,
    WorldSet,
    bs_frame,
    bs_model,
    chain,
    cluster,
    combo_frame,
    load,
    make_frame,
    powerset_frame,
    properties,
    save,
    single_point,
)
from .semantics import (
    DefinableAlgebra,
    FragmentReport,
    definable_algebra,
    eval_formula,
    holds_at,
    ml_fragment,
    ml_member,
    multiverse_truth,
    valid_on,
)
from .theories import PL, S4, S4_2, S5, Theory, Verdict, axioms, classify, decide
from .controls import (
    ControlFamily,
    IndependenceCertificate,
    check_independent,
    find_family,
    is_button,
    is_pushed,
    is_switch,
    simulate_countermodel,
)

__all__ = [
    "BadWorldIndex", "BikripkeError", "BudgetExceeded", "FormulaSyntaxError",
    "FrameParseError", "InsufficientControls", "MixedDirections",
    "OverlappingIndexSets", "VerificationFailed",
    "DOWN", "UP", "And", "Atom", "Bot", "Box", "Dia", "Direction", "Formula",
    "Iff", "Imp", "Not", "Or", "Top",
    "enumerate_formulas", "letters", "modal_depth", "parse", "print_formula",
    "size", "subformulas", "substitute",
    "Frame", "PointedModel", "WorldSet", "bs_frame", "bs_model", "chain",
    "cluster", "combo_frame", "load", "make_frame", "powerset_frame",
    "properties", "save", "single_point",
    "DefinableAlgebra", "FragmentReport", "definable_algebra", "eval_formula",
    "holds_at", "ml_fragment", "ml_member", "multiverse_truth", "valid_on",
    "PL", "S4", "S4_2", "S5", "Theory", "Verdict", "axioms", "classify",
    "decide",
    "ControlFamily", "IndependenceCertificate", "check_independent",
    "find_family", "is_button", "is_pushed", "is_switch",
    "simulate_countermodel",
]
