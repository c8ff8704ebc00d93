"""Matching correlated heterogeneous random graphs, with and without centering."""

from .assignment import Permutation, brute_force_lap, solve_lap_max
from .corr_er import (CorrSpec, FeasibilityError, GraphPair, InvalidSpecError, block_spec,
                      block_swap, expected_trace, homogeneous_spec, sample_pair, sbm_spec,
                      validate_spec)
from .faq import MatchOptions, MatchResult, faq_match, gm_objective
from .matchability import accuracy, brute_force_gmp, is_matchable, matchability_verdict, tau_id
from .usvt import UsvtEstimate, UsvtOptions, center, usvt_estimate

__version__ = "0.1.0"

__all__ = [
    "CorrSpec",
    "FeasibilityError",
    "GraphPair",
    "InvalidSpecError",
    "MatchOptions",
    "MatchResult",
    "Permutation",
    "UsvtEstimate",
    "UsvtOptions",
    "accuracy",
    "block_spec",
    "block_swap",
    "brute_force_gmp",
    "brute_force_lap",
    "center",
    "expected_trace",
    "faq_match",
    "gm_objective",
    "homogeneous_spec",
    "is_matchable",
    "matchability_verdict",
    "sample_pair",
    "sbm_spec",
    "solve_lap_max",
    "tau_id",
    "usvt_estimate",
    "validate_spec",
]
