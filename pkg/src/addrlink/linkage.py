"""Batch linkage of two address datasets.

Pipeline: build a phrase index per dataset, prune tokens that recur more than
``k`` times, join the two indexes on shared tokens, expand every joined token
into candidate pairs (deduplicated), then score each pair on character bags.
"""

from __future__ import annotations

import logging
from array import array
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import chain, repeat
from collections.abc import Sequence as SequenceABC
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .index import InvertedIndex, build_index, prune, query_candidates
from .ingest import AddressRecord
from .similarity import LinkageConfig, accepts, bag_similarity, numeric_consistent
from .tokenizer import TokenKind, normalize, numeric_tokens, tokenize

log = logging.getLogger(__name__)

_SCORE_BATCH = 1 << 20


class LinkageError(RuntimeError):
    pass


class Decision(str, Enum):
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    NOT_FOUND = "NotFound"


class CandidatePair(NamedTuple):
    left_id: int
    right_id: int


@dataclass(frozen=True)
class MatchResult:
    left_id: int
    right_id: Optional[int]
    score: float
    decision: Decision
    best: bool = False

    @property
    def pair(self) -> CandidatePair:
        return CandidatePair(self.left_id, self.right_id)


def result_key(r: MatchResult) -> tuple:
    return (r.left_id, -r.score, -1 if r.right_id is None else r.right_id)


# -- round 1: blocking ------------------------------------------------------


def join_indexes(
    idx1: InvertedIndex, idx2: InvertedIndex
) -> Iterator[tuple[str, tuple[int, ...], tuple[int, ...]]]:
    """Yield ``(token, postings1, postings2)`` for tokens present in both indexes."""
    if idx1.kind != idx2.kind:
        raise ValueError("indexes hold different token kinds")
    p1, p2 = idx1.postings, idx2.postings
    if len(p1) <= len(p2):
        for tok, ids1 in p1.items():
            ids2 = p2.get(tok)
            if ids2 is not None:
                yield tok, ids1, ids2
    else:
        for tok, ids2 in p2.items():
            ids1 = p1.get(tok)
            if ids1 is not None:
                yield tok, ids1, ids2


_LOW32 = np.uint64(0xFFFFFFFF)


def _expand_packed(joined) -> array:
    """Cross products as ``left << 32 | right`` keys; ids must fit in 32 bits."""
    keys = array("Q")
    for _, ids1, ids2 in joined:
        if len(ids2) == 1:
            r = ids2[0]
            keys.extend([(l << 32) | r for l in ids1])
        else:
            keys.extend([(l << 32) | r for l in ids1 for r in ids2])
    return keys


def _expand(joined) -> tuple[array, array]:
    left = array("Q")
    right = array("Q")
    for _, ids1, ids2 in joined:
        n2 = len(ids2)
        left.extend(chain.from_iterable(repeat(i, n2) for i in ids1))
        right.extend(tuple(ids2) * len(ids1))
    return left, right


def _unpack(keys: np.ndarray) -> np.ndarray:
    keys = np.unique(keys)
    return np.stack([keys >> np.uint64(32), keys & _LOW32], axis=1)


def _dedup(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    if len(left) == 0:
        return np.empty((0, 2), dtype=np.uint64)
    order = np.lexsort((right, left))
    left, right = left[order], right[order]
    keep = np.ones(len(left), dtype=bool)
    keep[1:] = (left[1:] != left[:-1]) | (right[1:] != right[:-1])
    return np.stack([left[keep], right[keep]], axis=1)


def candidate_pairs(
    joined: Iterable[tuple[str, Sequence[int], Sequence[int]]], packed: bool = False
) -> np.ndarray:
    """Union of ``postings1 x postings2`` over all joined tokens.

    Returns a ``(n, 2)`` uint64 array of distinct ``(left_id, right_id)``
    rows in lexicographic order. ``packed`` halves peak memory and is only
    valid when every id is below 2**32.
    """
    if packed:
        return _unpack(np.frombuffer(_expand_packed(joined), dtype=np.uint64))
    left, right = _expand(joined)
    return _dedup(np.frombuffer(left, dtype=np.uint64), np.frombuffer(right, dtype=np.uint64))


def _max_id(records: Sequence[AddressRecord]) -> int:
    return max((r.id for r in records), default=0)


def block(
    records1: Sequence[AddressRecord], records2: Sequence[AddressRecord], cfg: LinkageConfig
) -> np.ndarray:
    """Build, prune and join both round-1 indexes; return candidate pairs."""
    idx1 = build_index(records1, cfg.round1_kind, cfg.max_token_freq)
    idx2 = build_index(records2, cfg.round1_kind, cfg.max_token_freq)
    log.info("round-1 index sizes after pruning: %d / %d tokens", len(idx1), len(idx2))
    if max(_max_id(records1), _max_id(records2)) < 1 << 32:
        keys = _expand_packed(join_indexes(idx1, idx2))
        del idx1, idx2  # release token strings before the sort
        pairs = _unpack(np.frombuffer(keys, dtype=np.uint64))
    else:
        pairs = candidate_pairs(join_indexes(idx1, idx2))
    log.info("candidate pairs: %d", len(pairs))
    return pairs


# -- round 2: scoring -------------------------------------------------------


class _Rows:
    """Maps record ids to positions in a record sequence."""

    def __init__(self, records: Sequence[AddressRecord]):
        ids = np.fromiter((r.id for r in records), dtype=np.uint64, count=len(records))
        n = len(ids)
        if n and ids[0] == 1 and np.array_equal(ids, np.arange(1, n + 1, dtype=np.uint64)):
            self.order = None
        else:
            self.order = np.argsort(ids, kind="stable")
            self.sorted_ids = ids[self.order]
        self.n = n

    def lookup(self, ids: np.ndarray, side: str) -> np.ndarray:
        if self.order is None:
            bad = (ids < 1) | (ids > self.n)
            pos = ids.astype(np.int64) - 1
        elif self.n == 0:
            bad = np.ones(len(ids), dtype=bool)
            pos = np.zeros(len(ids), dtype=np.int64)
        else:
            found = np.minimum(np.searchsorted(self.sorted_ids, ids), self.n - 1)
            bad = self.sorted_ids[found] != ids
            pos = self.order[found]
        if bad.any():
            raise LinkageError(f"{side} id {int(ids[bad][0])} has no record")
        return pos


_CHAR_COLUMN = np.full(256, -1, dtype=np.int64)
for _i, _c in enumerate(b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"):
    _CHAR_COLUMN[_c] = _i
_N_CHARS = 36


def char_count_matrix(records: Sequence[AddressRecord], chunk: int = 1 << 16) -> tuple[np.ndarray, np.ndarray]:
    """Per-record character counts as an ``(n, 36)`` array plus bag sizes."""
    n = len(records)
    sizes = np.zeros(n, dtype=np.int64)
    counts = np.zeros((n, _N_CHARS), dtype=np.int32)
    for start in range(0, n, chunk):
        texts = [r.normalized.replace(" ", "") for r in records[start : start + chunk]]
        lens = np.fromiter(map(len, texts), dtype=np.int64, count=len(texts))
        sizes[start : start + len(texts)] = lens
        buf = np.frombuffer("".join(texts).encode("ascii"), dtype=np.uint8)
        cols = _CHAR_COLUMN[buf]
        rows = np.repeat(np.arange(len(texts), dtype=np.int64), lens)
        block_counts = np.bincount(rows * _N_CHARS + cols, minlength=len(texts) * _N_CHARS)
        counts[start : start + len(texts)] = block_counts.reshape(len(texts), _N_CHARS)
    if n and sizes.max() < 1 << 16:
        counts = counts.astype(np.uint16)
    return counts, sizes


def _score_chars(pos1, pos2, records1, records2) -> np.ndarray:
    # Closed form of the merge on a fixed 36-symbol alphabet; checked against
    # bag_similarity in the tests.
    c1, s1 = char_count_matrix(records1)
    c2, s2 = char_count_matrix(records2)
    out = np.empty(len(pos1), dtype=np.float64)
    for start in range(0, len(pos1), _SCORE_BATCH):
        a = pos1[start : start + _SCORE_BATCH]
        b = pos2[start : start + _SCORE_BATCH]
        common = 2 * np.minimum(c1[a], c2[b]).sum(axis=1, dtype=np.int64)
        total = s1[a] + s2[b]
        with np.errstate(invalid="ignore", divide="ignore"):
            out[start : start + len(a)] = np.where(total > 0, common / np.maximum(total, 1), 0.0)
    return out


def _score_chunk(args) -> list[float]:
    texts1, texts2, kind, score_fn = args
    cache1: dict[str, object] = {}
    cache2: dict[str, object] = {}
    out = []
    for t1, t2 in zip(texts1, texts2):
        b1 = cache1.get(t1)
        if b1 is None:
            b1 = cache1[t1] = tokenize(t1, kind)
        b2 = cache2.get(t2)
        if b2 is None:
            b2 = cache2[t2] = tokenize(t2, kind)
        out.append(score_fn(b1, b2))
    return out


def _score_generic(pos1, pos2, records1, records2, cfg: LinkageConfig) -> np.ndarray:
    texts1 = [records1[i].normalized for i in pos1]
    texts2 = [records2[i].normalized for i in pos2]
    kind, fn = cfg.round2_kind, cfg.score_fn
    if cfg.workers == 1 or len(texts1) < 2 * cfg.workers:
        return np.array(_score_chunk((texts1, texts2, kind, fn)), dtype=np.float64)
    # pairs arrive sorted by left id, so contiguous slices partition by left id
    step = -(-len(texts1) // cfg.workers)
    chunks = [
        (texts1[i : i + step], texts2[i : i + step], kind, fn) for i in range(0, len(texts1), step)
    ]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_score_chunk, chunks))
    return np.array(list(chain.from_iterable(parts)), dtype=np.float64)


def score_array(
    pairs: np.ndarray,
    records1: Sequence[AddressRecord],
    records2: Sequence[AddressRecord],
    cfg: LinkageConfig,
) -> np.ndarray:
    """Round-2 score for every row of ``pairs``, aligned with it."""
    pairs = np.asarray(pairs, dtype=np.uint64).reshape(-1, 2)
    pos1 = _Rows(records1).lookup(pairs[:, 0], "left")
    pos2 = _Rows(records2).lookup(pairs[:, 1], "right")
    if len(pairs) == 0:
        return np.empty(0, dtype=np.float64)
    if cfg.round2_kind is TokenKind.CHAR and cfg.score_fn is bag_similarity:
        return _score_chars(pos1, pos2, records1, records2)
    return _score_generic(pos1, pos2, records1, records2, cfg)


def score_pairs(
    pairs,
    records1: Sequence[AddressRecord],
    records2: Sequence[AddressRecord],
    cfg: LinkageConfig = LinkageConfig(),
) -> MatchTable:
    """Score pairs in the given order; Accepted when :func:`accepts` says so."""
    if isinstance(pairs, np.ndarray):
        arr = pairs.astype(np.uint64, copy=False).reshape(-1, 2)
    else:
        arr = np.array([tuple(p) for p in pairs], dtype=np.uint64).reshape(-1, 2)
    scores = score_array(arr, records1, records2, cfg)
    decision = np.where(accepts(scores, cfg.tau), _CODE[Decision.ACCEPTED], _CODE[Decision.REJECTED])
    return MatchTable(arr[:, 0], arr[:, 1], scores, decision, np.zeros(len(arr), dtype=bool))


# -- decisions --------------------------------------------------------------

_DECISIONS = (Decision.ACCEPTED, Decision.REJECTED, Decision.NOT_FOUND)
_CODE = {d: i for i, d in enumerate(_DECISIONS)}
_NOT_FOUND = _CODE[Decision.NOT_FOUND]


class MatchTable(SequenceABC):
    """Columnar, read-only sequence of :class:`MatchResult`.

    Holds one numpy array per field so that tens of millions of links stay
    cheap; indexing and iteration produce ordinary ``MatchResult`` objects.
    NotFound rows have no right id.
    """

    __slots__ = ("left", "right", "score", "decision", "best")

    def __init__(self, left, right, score, decision, best):
        self.left = np.asarray(left, dtype=np.uint64)
        self.right = np.asarray(right, dtype=np.uint64)
        self.score = np.asarray(score, dtype=np.float64)
        self.decision = np.asarray(decision, dtype=np.int8)
        self.best = np.asarray(best, dtype=bool)

    @classmethod
    def empty(cls) -> "MatchTable":
        return cls([], [], [], [], [])

    @classmethod
    def from_results(cls, results: Iterable[MatchResult]) -> "MatchTable":
        rows = list(results)
        return cls(
            [r.left_id for r in rows],
            [0 if r.right_id is None else r.right_id for r in rows],
            [r.score for r in rows],
            [_CODE[Decision(r.decision)] for r in rows],
            [r.best for r in rows],
        )

    def __len__(self) -> int:
        return len(self.left)

    def _row(self, i: int) -> MatchResult:
        code = int(self.decision[i])
        right = None if code == _NOT_FOUND else int(self.right[i])
        return MatchResult(int(self.left[i]), right, float(self.score[i]), _DECISIONS[code], bool(self.best[i]))

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            if key < 0:
                key += len(self)
            if not 0 <= key < len(self):
                raise IndexError("match index out of range")
            return self._row(key)
        return self.take(key)

    def take(self, key) -> "MatchTable":
        """Rows selected by a slice, index array or boolean mask."""
        return MatchTable(self.left[key], self.right[key], self.score[key], self.decision[key], self.best[key])

    def __iter__(self) -> Iterator[MatchResult]:
        step = 1 << 16
        for start in range(0, len(self), step):
            sl = slice(start, start + step)
            for l, r, s, d, b in zip(
                self.left[sl].tolist(), self.right[sl].tolist(), self.score[sl].tolist(),
                self.decision[sl].tolist(), self.best[sl].tolist(),
            ):
                yield MatchResult(l, None if d == _NOT_FOUND else r, s, _DECISIONS[d], b)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SequenceABC) or isinstance(other, (str, bytes)):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self, other))

    __hash__ = None

    def __repr__(self) -> str:
        return f"MatchTable({len(self)} rows)"

    def pairs(self) -> set[CandidatePair]:
        mask = self.decision != _NOT_FOUND
        return {CandidatePair(l, r) for l, r in zip(self.left[mask].tolist(), self.right[mask].tolist())}

    def accepted(self) -> "MatchTable":
        return self.take(self.decision == _CODE[Decision.ACCEPTED])


def _ranked(pairs: np.ndarray, scores: np.ndarray):
    """Order by left id, score descending, right id."""
    order = np.lexsort((pairs[:, 1], -scores, pairs[:, 0]))
    return pairs[order], scores[order]


def _group_bounds(lefts: np.ndarray) -> np.ndarray:
    if len(lefts) == 0:
        return np.array([0])
    starts = np.flatnonzero(np.r_[True, lefts[1:] != lefts[:-1]])
    return np.r_[starts, len(lefts)]


def link_reference(
    raw_db: Sequence[AddressRecord], ref_db: Sequence[AddressRecord], cfg: LinkageConfig = LinkageConfig()
) -> MatchTable:
    """Link raw addresses against a reference set; accept pairs scoring above
    tau (or scoring 1.0).

    Every accepted pair is returned. The top accepted pair of each raw
    record carries ``best=True``. With ``cfg.debug`` rejected pairs are
    included too.
    """
    pairs = block(raw_db, ref_db, cfg)
    scores = score_array(pairs, raw_db, ref_db, cfg)
    return _reference_decisions(pairs, scores, cfg.tau, cfg.debug)


def _reference_decisions(pairs: np.ndarray, scores: np.ndarray, tau: float, debug: bool) -> MatchTable:
    accepted = accepts(scores, tau)
    if not debug:
        pairs, scores, accepted = pairs[accepted], scores[accepted], accepted[accepted]
    order = np.lexsort((pairs[:, 1], -scores, pairs[:, 0]))
    pairs, scores, accepted = pairs[order], scores[order], accepted[order]
    # within a left group accepted rows precede rejected ones, so the first
    # accepted row of each group is its best
    best = np.zeros(len(pairs), dtype=bool)
    acc = np.flatnonzero(accepted)
    if len(acc):
        lefts = pairs[acc, 0]
        best[acc[np.r_[True, lefts[1:] != lefts[:-1]]]] = True
    decision = np.where(accepted, _CODE[Decision.ACCEPTED], _CODE[Decision.REJECTED])
    return MatchTable(pairs[:, 0], pairs[:, 1], scores, decision, best)


def link_arbitrary(
    db1: Sequence[AddressRecord], db2: Sequence[AddressRecord], cfg: LinkageConfig = LinkageConfig()
) -> MatchTable:
    """Link two uncurated datasets using the ranked numeric-consistency scan.

    For each record of ``db1`` the candidates are ranked by score (ties by
    right id) and the first of the top ``cfg.top_n`` whose numeric tokens are
    consistent with the query is accepted. If none is, the record gets a
    single NotFound row with no right id. Every record of ``db1`` gets
    exactly one Accepted or NotFound row.
    """
    pairs = block(db1, db2, cfg)
    scores = score_array(pairs, db1, db2, cfg)
    return _arbitrary_decisions(db1, db2, pairs, scores, cfg)


def _arbitrary_decisions(db1, db2, pairs, scores, cfg: LinkageConfig) -> MatchTable:
    pairs, scores = _ranked(pairs, scores)
    lefts = pairs[:, 0].tolist()
    rights = pairs[:, 1].tolist()
    score_list = scores.tolist()
    bounds = _group_bounds(pairs[:, 0]).tolist()
    text1 = {r.id: r.normalized for r in db1}
    text2 = {r.id: r.normalized for r in db2}
    nums2: dict[int, object] = {}

    accepted = _CODE[Decision.ACCEPTED]
    rejected = _CODE[Decision.REJECTED]
    cols: tuple[list, list, list, list, list] = ([], [], [], [], [])

    def emit(l, r, s, d, b):
        cols[0].append(l)
        cols[1].append(r)
        cols[2].append(s)
        cols[3].append(d)
        cols[4].append(b)

    decided: set[int] = set()
    for g in range(len(bounds) - 1):
        lo, hi = bounds[g], bounds[g + 1]
        left = lefts[lo]
        q = numeric_tokens(text1[left])
        chosen = None
        for i in range(lo, min(hi, lo + cfg.top_n)):
            right = rights[i]
            bag = nums2.get(right)
            if bag is None:
                bag = nums2[right] = numeric_tokens(text2[right])
            if numeric_consistent(q, bag):
                chosen = i
                break
        if chosen is None:
            emit(left, 0, 0.0, _NOT_FOUND, False)
        else:
            emit(left, rights[chosen], score_list[chosen], accepted, True)
        if cfg.debug:
            for i in range(lo, hi):
                if i != chosen:
                    emit(left, rights[i], score_list[i], rejected, False)
        decided.add(left)
    for r in db1:
        if r.id not in decided:
            emit(r.id, 0, 0.0, _NOT_FOUND, False)
    table = MatchTable(*cols)
    # NotFound rows sort ahead of a left's other rows (right id treated as -1)
    nf = table.decision == _NOT_FOUND
    order = np.lexsort((table.right, ~nf, -table.score, table.left))
    return table.take(order)


def link(db1, db2, cfg: LinkageConfig = LinkageConfig(), mode: str = "reference") -> MatchTable:
    if mode == "reference":
        return link_reference(db1, db2, cfg)
    if mode == "arbitrary":
        return link_arbitrary(db1, db2, cfg)
    raise ValueError(f"unknown mode {mode!r}")


# -- threshold sweep ----------------------------------------------------------


@dataclass
class SweepReport:
    """Accepted links per threshold, all derived from one run at the lowest."""

    taus: list[float]
    base: MatchTable
    accepted: dict[float, MatchTable] = field(default_factory=dict)

    def accepted_pairs(self, tau: float) -> set[CandidatePair]:
        return self.accepted[tau].pairs()

    def lost_links(self, tau: float) -> MatchTable:
        """Links accepted at the lowest tau but not at ``tau``."""
        return self.base.take(~accepts(self.base.score, tau))

    def lost_records(self, tau: float) -> np.ndarray:
        """Left ids linked at the lowest tau that have no link at ``tau``."""
        return np.setdiff1d(self.base.left, self.accepted[tau].left)

    def summary_lines(self) -> list[str]:
        lines = [f"{'tau':>6} {'accepted':>10} {'linked_records':>15} {'lost_links':>11} {'lost_records':>13}"]
        for tau in self.taus:
            acc = self.accepted[tau]
            lines.append(
                f"{tau:>6.3f} {len(acc):>10} {len(np.unique(acc.left)):>15} "
                f"{len(self.lost_links(tau)):>11} {len(self.lost_records(tau)):>13}"
            )
        lines.append(f"lost counts are relative to tau={self.taus[0]:g}")
        return lines


def threshold_sweep(
    raw_db: Sequence[AddressRecord],
    ref_db: Sequence[AddressRecord],
    taus: Sequence[float],
    cfg: LinkageConfig = LinkageConfig(),
) -> SweepReport:
    """Link once at the lowest tau and derive every higher tau by filtering.

    Filtering only trims the low-score tail of each left record's rows, so
    the best flags from the base run stay correct.
    """
    taus = [float(t) for t in taus]
    if not taus:
        raise ValueError("need at least one tau")
    if any(not 0 < t <= 1 for t in taus):
        raise ValueError("taus must lie in (0, 1]")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be strictly ascending")
    base = link_reference(raw_db, ref_db, replace(cfg, tau=taus[0], debug=False))
    report = SweepReport(taus, base)
    for tau in taus:
        report.accepted[tau] = base.take(accepts(base.score, tau))
    return report


# -- single query -------------------------------------------------------------


def query(
    address: str,
    db: Sequence[AddressRecord],
    cfg: LinkageConfig = LinkageConfig(),
    index: Optional[InvertedIndex] = None,
    limit: Optional[int] = None,
) -> list[MatchResult]:
    """Rank ``db`` records against one free-text address.

    This is the batch pipeline with a one-record left side: the query's
    round-1 tokens select records from the pruned index, the shortlist is
    scored on round-2 tokens. Decisions use ``cfg.tau``.
    """
    if index is None:
        index = prune(build_index(db, cfg.round1_kind), cfg.max_token_freq)
    text = normalize(address)
    hits = query_candidates(index, tokenize(text, cfg.round1_kind))
    by_id = {r.id: r for r in db}
    qbag = tokenize(text, cfg.round2_kind)
    fn = cfg.score_fn
    out = []
    for rid in hits:
        s = fn(qbag, tokenize(by_id[rid].normalized, cfg.round2_kind))
        out.append(MatchResult(0, rid, s, Decision.ACCEPTED if accepts(s, cfg.tau) else Decision.REJECTED))
    out.sort(key=lambda r: (-r.score, r.right_id))
    if out and out[0].decision is Decision.ACCEPTED:
        out[0] = replace(out[0], best=True)
    return out[:limit] if limit else out


def token_frequency_histogram(idx: InvertedIndex) -> Counter:
    """frequency -> number of tokens with that frequency."""
    return Counter(len(ids) for ids in idx.postings.values())
