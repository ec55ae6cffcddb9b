"""Flaky-class localisation toolkit.

Thin wrapper around the C++ core: coverage parsing, adapted SBFL formulae,
GP-evolved scoring expressions, fractional-vote ensembles, and the
evaluation metrics (acc@n, wef, R_wef, DDU).
"""

from floc._core import (
    CoverageMatrix,
    FlocParseError,
    FlocValidationError,
    __version__,
    covered_by_flaky,
    ddu,
    evaluate_expression,
    generate_synth,
    localise,
    parse_coverage,
    r_wef,
    rank_classes,
    score,
    spectrum_counts,
    vote_rankings,
    wef,
)

__all__ = [
    "CoverageMatrix",
    "FlocParseError",
    "FlocValidationError",
    "__version__",
    "covered_by_flaky",
    "ddu",
    "evaluate_expression",
    "generate_synth",
    "localise",
    "parse_coverage",
    "r_wef",
    "rank_classes",
    "score",
    "spectrum_counts",
    "vote_rankings",
    "wef",
]
