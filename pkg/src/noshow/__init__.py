"""SAT analysis of the no-show paradox for four alternatives.

Enumerate weighted tournaments, encode Condorcet-consistency plus
participation as CNF, run external solvers and MUS tools, decode models
into lookup tables, and check human-readable impossibility certificates.
"""

from .encoding import EncodingConfig, write_encoding
from .proofs import ProofDocument, check_document, load_fixture, parse_document
from .rules import RuleTable, read_table, write_table
from .solvers import check_model, extract_mus, solve
from .tournaments import TournamentIndex, enumerate_tournaments, oracle_enumerate
from .voting import MarginVector, Profile, Ranking

__version__ = "0.1.0"

__all__ = [
    "EncodingConfig",
    "MarginVector",
    "Profile",
    "ProofDocument",
    "Ranking",
    "RuleTable",
    "TournamentIndex",
    "check_document",
    "check_model",
    "enumerate_tournaments",
    "extract_mus",
    "load_fixture",
    "oracle_enumerate",
    "parse_document",
    "read_table",
    "solve",
    "write_encoding",
    "write_table",
]
