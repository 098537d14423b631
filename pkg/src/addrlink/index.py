"""Inverted indexes over token bags."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

from .ingest import AddressRecord, DatasetError, PathLike, _atomic_open
from .tokenizer import TokenBag, TokenKind, distinct_tokens


@dataclass(frozen=True)
class InvertedIndex:
    """token -> sorted tuple of ids of the records containing it.

    A token's frequency is the length of its posting list; each record is
    listed once per token no matter how often the token occurs in it.
    """

    kind: TokenKind
    postings: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.postings)

    def __contains__(self, token: object) -> bool:
        return token in self.postings

    def __iter__(self) -> Iterator[str]:
        return iter(self.postings)

    def __getitem__(self, token: str) -> tuple[int, ...]:
        return self.postings[token]

    def frequency(self, token: str) -> int:
        return len(self.postings.get(token, ()))

    def items(self):
        return self.postings.items()


def build_index(
    records: Iterable[AddressRecord], kind: TokenKind = TokenKind.PHRASE, max_freq: Optional[int] = None
) -> InvertedIndex:
    """Index every record under each distinct token of its ``kind`` bag.

    ``max_freq`` prunes while building; the result equals
    ``prune(build_index(records, kind), max_freq)`` without the intermediate copy.
    """
    kind = TokenKind(kind)
    if max_freq is not None and max_freq < 1:
        raise ValueError("k must be >= 1")
    limit = max_freq if max_freq is not None else float("inf")
    lists: dict[str, list[int]] = defaultdict(list)
    seen: set[int] = set()
    ordered = True
    last = -1
    for rec in records:
        rid = rec.id
        if rid in seen:
            raise DatasetError(f"duplicate record id {rid}")
        seen.add(rid)
        if rid < last:
            ordered = False
        last = rid
        for tok in distinct_tokens(rec.normalized, kind):
            lists[tok].append(rid)
    postings = {}
    for tok in list(lists):
        ids = lists.pop(tok)
        if len(ids) <= limit:
            postings[tok] = tuple(ids) if ordered else tuple(sorted(ids))
    return InvertedIndex(TokenKind(kind), postings)


def prune(idx: InvertedIndex, k: int) -> InvertedIndex:
    """Drop tokens whose frequency exceeds ``k`` (frequency == k survives)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return InvertedIndex(idx.kind, {t: ids for t, ids in idx.postings.items() if len(ids) <= k})


def query_candidates(idx: InvertedIndex, q: TokenBag) -> dict[int, int]:
    """Overlap count per indexed record for the tokens of ``q``.

    Each query token found in the index adds its multiplicity in ``q`` to
    every record on its posting list. Unknown tokens are ignored.
    """
    if q.kind != idx.kind:
        raise ValueError(f"query is a {q.kind.value} bag, index holds {idx.kind.value} tokens")
    hits: dict[int, int] = defaultdict(int)
    for tok, cnt in q.tokens:
        for rid in idx.postings.get(tok, ()):
            hits[rid] += cnt
    return dict(hits)


def save_index(idx: InvertedIndex, path: PathLike) -> None:
    """One ``token<TAB>frequency<TAB>id,id,...`` line per token, sorted by token."""
    with _atomic_open(path) as fh:
        for tok in sorted(idx.postings):
            ids = idx.postings[tok]
            fh.write(f"{tok}\t{len(ids)}\t{','.join(map(str, ids))}\n")


def load_index(path: PathLike, kind: TokenKind = TokenKind.PHRASE) -> InvertedIndex:
    """Read a file written by :func:`save_index`; the token kind is not stored."""
    postings: dict[str, tuple[int, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DatasetError(f"{path}: line {line_no}: expected 3 fields")
            tok, freq, ids = parts
            id_tuple = tuple(int(x) for x in ids.split(","))
            if int(freq) != len(id_tuple):
                raise DatasetError(f"{path}: line {line_no}: frequency {freq} != {len(id_tuple)} ids")
            postings[tok] = id_tuple
    return InvertedIndex(TokenKind(kind), postings)
