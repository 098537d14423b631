"""Similarity between token bags and the two-round address score."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional

from .tokenizer import TokenBag, TokenKind, distinct_tokens, tokenize

if TYPE_CHECKING:
    from .ingest import AddressRecord

Similarity = Callable[[TokenBag, TokenBag], float]


def _check_kinds(a: TokenBag, b: TokenBag) -> None:
    if a.kind != b.kind:
        raise ValueError(f"cannot compare {a.kind.value} bag with {b.kind.value} bag")


def merge_counts(a: TokenBag, b: TokenBag) -> tuple[int, int]:
    """Walk both sorted bags once and return ``(common, total)``.

    Equal tokens add 2 to both counters, an unmatched token adds 1 to
    ``total``, and whatever is left when one side runs out is added to
    ``total``. Runs of a repeated token are consumed in one step, which is
    the same as reading them one at a time.
    """
    _check_kinds(a, b)
    ta, tb = a.tokens, b.tokens
    i = j = 0
    common = total = 0
    while i < len(ta) and j < len(tb):
        tok_a, cnt_a = ta[i]
        tok_b, cnt_b = tb[j]
        if tok_a == tok_b:
            both = min(cnt_a, cnt_b)
            common += 2 * both
            total += cnt_a + cnt_b
            i += 1
            j += 1
        elif tok_a < tok_b:
            total += cnt_a
            i += 1
        else:
            total += cnt_b
            j += 1
    total += sum(cnt for _, cnt in ta[i:]) + sum(cnt for _, cnt in tb[j:])
    return common, total


def bag_similarity(a: TokenBag, b: TokenBag) -> float:
    """Common-over-total similarity, ``2m / (|a| + |b|)``.

    >>> from addrlink.tokenizer import TokenBag, TokenKind
    >>> t1 = TokenBag.from_tokens(TokenKind.WORD, "this is an example".split())
    >>> t2 = TokenBag.from_tokens(TokenKind.WORD, "this is another example".split())
    >>> bag_similarity(t1, t2)
    0.75
    """
    common, total = merge_counts(a, b)
    if total == 0:
        return 0.0
    return common / total


def jaccard_similarity(a: TokenBag, b: TokenBag) -> float:
    """Textbook multiset Jaccard, ``m / (|a| + |b| - m)``."""
    common, total = merge_counts(a, b)
    m = common // 2
    if total == 0:
        return 0.0
    return m / (total - m)


def numeric_consistent(a: TokenBag, b: TokenBag) -> bool:
    """True when one numeric multiset is contained in the other."""
    ca, cb = a.counts(), b.counts()
    a_in_b = all(cb.get(tok, 0) >= cnt for tok, cnt in ca.items())
    b_in_a = all(ca.get(tok, 0) >= cnt for tok, cnt in cb.items())
    return a_in_b or b_in_a


@dataclass(frozen=True)
class LinkageConfig:
    tau: float = 0.7
    max_token_freq: int = 100
    round1_kind: TokenKind = TokenKind.PHRASE
    round2_kind: TokenKind = TokenKind.CHAR
    top_n: int = 3
    # Round-2 measure; None means bag_similarity.
    similarity: Optional[Similarity] = None
    workers: int = 1
    debug: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.max_token_freq < 1:
            raise ValueError("max_token_freq must be >= 1")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "round1_kind", TokenKind(self.round1_kind))
        object.__setattr__(self, "round2_kind", TokenKind(self.round2_kind))

    @property
    def score_fn(self) -> Similarity:
        return self.similarity or bag_similarity


def accepts(score, tau: float):
    """Acceptance test: score above ``tau``, or a perfect score.

    A perfect score is always accepted so that ``tau=1.0`` keeps exactly the
    pairs with equal bags instead of nothing. Works on floats and arrays.
    """
    return (score > tau) | (score >= 1.0)


def two_round_score(x: "AddressRecord", y: "AddressRecord", cfg: LinkageConfig) -> float:
    """Round-2 similarity if the round-1 bags overlap at all, else 0."""
    if distinct_tokens(x.normalized, cfg.round1_kind).isdisjoint(
        distinct_tokens(y.normalized, cfg.round1_kind)
    ):
        return 0.0
    return cfg.score_fn(
        tokenize(x.normalized, cfg.round2_kind), tokenize(y.normalized, cfg.round2_kind)
    )
