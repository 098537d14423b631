"""Synthetic corpora, the brute-force oracle and evaluation metrics."""

from .generator import (
    CorruptionProfile,
    TruthSet,
    arbitrary_scenario,
    corrupt,
    generate_reference,
    synonym_groups,
)
from .metrics import ArbitraryReport, EvaluationReport, evaluate, evaluate_arbitrary
from .oracle import brute_force_candidates, brute_force_link
