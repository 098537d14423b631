"""Standardisation-free batch linkage of free-text addresses."""

from .index import InvertedIndex, build_index, prune, query_candidates
from .ingest import AddressRecord, load_dataset, read_matches, write_matches
from .linkage import (
    CandidatePair,
    Decision,
    MatchResult,
    link_arbitrary,
    link_reference,
    query,
    threshold_sweep,
)
from .similarity import LinkageConfig, bag_similarity, numeric_consistent, two_round_score
from .tokenizer import TokenBag, TokenKind, normalize, tokenize

__version__ = "0.1.0"
