"""Einstein nilradicals: pre-Einstein derivations, nice bases, nilsoliton metrics and two-step algebras."""

from .algebra import (
    AlgebraError,
    Derivation,
    LieAlgebra,
    NotNilpotentError,
    ParseError,
    abelian,
    change_basis,
    derivation_algebra,
    direct_sum,
    free_two_step,
    heisenberg,
    load_algebra,
    parse_algebra,
)
from .classify import ClassificationReport, certificate_holds, classify
from .flow import FlowOptions, FlowOutcome, Tag, run_flow, verify_flow_metric
from .nice import Verdict, closed_form_nilsoliton, convex_hull_test, is_nice, nice_test
from .preeinstein import UnsupportedBasis, ad_phi_spectrum, pre_einstein_diagonal, verify_pre_einstein
from .ricci import NilsolitonReport, nilsoliton_verify, ricci_operator
from .twostep import JTuple, dual, from_j_tuple, sample_random, survey, to_j_tuple

__version__ = "0.1.0"

__all__ = [
    "AlgebraError", "Derivation", "LieAlgebra", "NotNilpotentError", "ParseError",
    "abelian", "change_basis", "derivation_algebra", "direct_sum", "free_two_step", "heisenberg",
    "load_algebra", "parse_algebra",
    "ClassificationReport", "certificate_holds", "classify",
    "FlowOptions", "FlowOutcome", "Tag", "run_flow", "verify_flow_metric",
    "Verdict", "closed_form_nilsoliton", "convex_hull_test", "is_nice", "nice_test",
    "UnsupportedBasis", "ad_phi_spectrum", "pre_einstein_diagonal", "verify_pre_einstein",
    "NilsolitonReport", "nilsoliton_verify", "ricci_operator",
    "JTuple", "dual", "from_j_tuple", "sample_random", "survey", "to_j_tuple",
]
