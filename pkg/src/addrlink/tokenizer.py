"""Turn free-text addresses into bags of tokens.

All four token views start from the same normalised text: every run of
characters outside ``[A-Za-z0-9]`` collapses to a single space and letters are
uppercased. Nothing else is done to the address, there is no parsing into
fields and no abbreviation expansion.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

_SEPARATORS = re.compile(r"[^A-Za-z0-9]+")


class TokenKind(str, Enum):
    WORD = "word"
    CHAR = "char"
    PHRASE = "phrase"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class TokenBag:
    """Sorted multiset of tokens.

    ``tokens`` holds ``(token, count)`` pairs strictly ascending by token.
    """

    kind: TokenKind
    tokens: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        prev = None
        for tok, cnt in self.tokens:
            if cnt < 1:
                raise ValueError(f"token {tok!r} has non-positive count {cnt}")
            if prev is not None and tok <= prev:
                raise ValueError("tokens must be strictly ascending")
            if self.kind is TokenKind.PHRASE and cnt != 1:
                raise ValueError("phrase tokens have set semantics")
            prev = tok

    @classmethod
    def from_tokens(cls, kind: TokenKind, tokens: Iterable[str]) -> "TokenBag":
        return cls(kind, tuple(sorted(Counter(tokens).items())))

    @property
    def size(self) -> int:
        return sum(cnt for _, cnt in self.tokens)

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[str]:
        return (tok for tok, _ in self.tokens)

    def __contains__(self, token: object) -> bool:
        return any(tok == token for tok, _ in self.tokens)

    def counts(self) -> dict[str, int]:
        return dict(self.tokens)

    def elements(self) -> list[str]:
        """Tokens expanded with multiplicity, in sorted order."""
        return [tok for tok, cnt in self.tokens for _ in range(cnt)]


def normalize(raw: str) -> str:
    # Non-ASCII letters never survive the character class, so upper() only
    # ever sees ASCII.
    return _SEPARATORS.sub(" ", raw).strip().upper()


def words(text: str) -> list[str]:
    return text.split()


def phrase_set(text: str) -> set[str]:
    """Adjacent ordered word pairs of normalised ``text``.

    A single word is its own phrase so that one-word addresses stay blockable.
    """
    ws = text.split()
    if len(ws) == 1:
        return {ws[0]}
    return {f"{a} {b}" for a, b in zip(ws, ws[1:])}


def word_tokens(text: str) -> TokenBag:
    return TokenBag.from_tokens(TokenKind.WORD, text.split())


def char_tokens(text: str) -> TokenBag:
    return TokenBag.from_tokens(TokenKind.CHAR, text.replace(" ", ""))


def phrase_tokens(text: str) -> TokenBag:
    return TokenBag(TokenKind.PHRASE, tuple((p, 1) for p in sorted(phrase_set(text))))


def numeric_tokens(text: str) -> TokenBag:
    # Whole words only: "U123" contributes nothing.
    return TokenBag.from_tokens(TokenKind.NUMERIC, (w for w in text.split() if w.isdigit()))


_TOKENIZERS = {
    TokenKind.WORD: word_tokens,
    TokenKind.CHAR: char_tokens,
    TokenKind.PHRASE: phrase_tokens,
    TokenKind.NUMERIC: numeric_tokens,
}


def tokenize(text: str, kind: TokenKind) -> TokenBag:
    """Bag of ``kind`` tokens for already-normalised ``text``."""
    return _TOKENIZERS[TokenKind(kind)](text)


def distinct_tokens(text: str, kind: TokenKind) -> set[str]:
    """Support of ``tokenize(text, kind)`` without building the bag."""
    kind = TokenKind(kind)
    if kind is TokenKind.PHRASE:
        return phrase_set(text)
    if kind is TokenKind.WORD:
        return set(text.split())
    if kind is TokenKind.CHAR:
        return set(text.replace(" ", ""))
    return {w for w in text.split() if w.isdigit()}
