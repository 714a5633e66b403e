"""Exact computations on nilpotent groups, polynomial sequences and Gowers norms."""

from .bracket import BracketExpr, eval_bracket, parse_bracket
from .equid import empirical_distribution_test, leibman_test, weyl_sum
from .freqreg import find_relation, regularize
from .gowers import SampledFunction, gcs_statistic, u_norm
from .nilgroup import GroupElement, NilSchema, catalog, reduce_mod_lattice, schema_from_ref
from .nilseq import NilcharSpec, eval_nilchar
from .polyseq import PolySeq, taylor_extract
from .scalar import PhaseVector, TorusPoint, signed_frac

__version__ = "0.1.0"

__all__ = [
    "BracketExpr",
    "GroupElement",
    "NilSchema",
    "NilcharSpec",
    "PhaseVector",
    "PolySeq",
    "SampledFunction",
    "TorusPoint",
    "catalog",
    "empirical_distribution_test",
    "eval_bracket",
    "eval_nilchar",
    "find_relation",
    "gcs_statistic",
    "leibman_test",
    "parse_bracket",
    "reduce_mod_lattice",
    "regularize",
    "schema_from_ref",
    "signed_frac",
    "taylor_extract",
    "u_norm",
    "weyl_sum",
]
