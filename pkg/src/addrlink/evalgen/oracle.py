"""All-pairs reference implementation of the linkage decisions.

Shares no code with the pipeline beyond text normalisation: frequencies are
counted directly, every pair is tested, and character similarity uses the
closed form ``2 * sum(min counts) / (|a| + |b|)``.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence

from ..ingest import AddressRecord
from ..linkage import Decision, MatchResult
from ..similarity import LinkageConfig, bag_similarity
from ..tokenizer import TokenKind, tokenize

DEFAULT_PAIR_CAP = 10**6


def _round1_tokens(text: str, kind: TokenKind) -> frozenset:
    ws = text.split()
    if kind is TokenKind.PHRASE:
        if len(ws) == 1:
            return frozenset(ws)
        return frozenset(ws[i] + " " + ws[i + 1] for i in range(len(ws) - 1))
    if kind is TokenKind.WORD:
        return frozenset(ws)
    if kind is TokenKind.CHAR:
        return frozenset(text.replace(" ", ""))
    return frozenset(w for w in ws if all("0" <= c <= "9" for c in w))


def _closed_form(a: Counter, b: Counter) -> float:
    total = sum(a.values()) + sum(b.values())
    if total == 0:
        return 0.0
    return 2 * sum(min(c, b[t]) for t, c in a.items() if t in b) / total


def _round2_bag(text: str, kind: TokenKind) -> Counter:
    ws = text.split()
    if kind is TokenKind.CHAR:
        return Counter(text.replace(" ", ""))
    if kind is TokenKind.WORD:
        return Counter(ws)
    if kind is TokenKind.NUMERIC:
        return Counter(w for w in ws if w.isdigit())
    return Counter(_round1_tokens(text, kind))


def _sub_multiset(a: Counter, b: Counter) -> bool:
    return all(b[t] >= c for t, c in a.items())


def brute_force_link(
    db1: Sequence[AddressRecord],
    db2: Sequence[AddressRecord],
    cfg: LinkageConfig = LinkageConfig(),
    mode: str = "reference",
    cap: int = DEFAULT_PAIR_CAP,
) -> list[MatchResult]:
    """Same decisions as :func:`addrlink.linkage.link`, by exhaustive comparison."""
    if len(db1) * len(db2) > cap:
        raise ValueError(f"{len(db1)} x {len(db2)} pairs exceeds the oracle cap of {cap}")
    if mode not in ("reference", "arbitrary"):
        raise ValueError(f"unknown mode {mode!r}")
    k = cfg.max_token_freq
    tok1 = [_round1_tokens(r.normalized, cfg.round1_kind) for r in db1]
    tok2 = [_round1_tokens(r.normalized, cfg.round1_kind) for r in db2]
    freq1 = Counter(t for s in tok1 for t in s)
    freq2 = Counter(t for s in tok2 for t in s)
    usable = {t for t in freq1 if freq1[t] <= k and 0 < freq2[t] <= k}

    default_score = cfg.similarity is None or cfg.similarity is bag_similarity
    if default_score:
        bags1 = [_round2_bag(r.normalized, cfg.round2_kind) for r in db1]
        bags2 = [_round2_bag(r.normalized, cfg.round2_kind) for r in db2]
    else:
        bags1 = [tokenize(r.normalized, cfg.round2_kind) for r in db1]
        bags2 = [tokenize(r.normalized, cfg.round2_kind) for r in db2]

    candidates: dict[int, list[tuple[float, int]]] = {}
    for i, r1 in enumerate(db1):
        keys = tok1[i] & usable
        scored = []
        for j, r2 in enumerate(db2):
            if keys.isdisjoint(tok2[j]):
                continue
            if default_score:
                s = _closed_form(bags1[i], bags2[j])
            else:
                s = cfg.similarity(bags1[i], bags2[j])
            scored.append((s, r2.id))
        # score descending, then right id ascending
        scored.sort(key=lambda x: (-x[0], x[1]))
        candidates[r1.id] = scored

    out: list[MatchResult] = []
    if mode == "reference":
        for left, scored in candidates.items():
            best_taken = False
            for s, right in scored:
                ok = s > cfg.tau or s == 1.0
                if not ok and not cfg.debug:
                    continue
                is_best = ok and not best_taken
                best_taken = best_taken or is_best
                out.append(
                    MatchResult(left, right, s, Decision.ACCEPTED if ok else Decision.REJECTED, is_best)
                )
    else:
        nums1 = {r.id: Counter(w for w in r.normalized.split() if w.isdigit()) for r in db1}
        nums2 = {r.id: Counter(w for w in r.normalized.split() if w.isdigit()) for r in db2}
        for left, scored in candidates.items():
            q = nums1[left]
            chosen = None
            for rank, (s, right) in enumerate(scored[: cfg.top_n]):
                c = nums2[right]
                if _sub_multiset(q, c) or _sub_multiset(c, q):
                    chosen = rank
                    break
            if chosen is None:
                out.append(MatchResult(left, None, 0.0, Decision.NOT_FOUND))
            else:
                s, right = scored[chosen]
                out.append(MatchResult(left, right, s, Decision.ACCEPTED, True))
            if cfg.debug:
                out.extend(
                    MatchResult(left, right, s, Decision.REJECTED)
                    for rank, (s, right) in enumerate(scored)
                    if rank != chosen
                )
    out.sort(key=lambda r: (r.left_id, -r.score, -1 if r.right_id is None else r.right_id))
    return out


def brute_force_candidates(
    db1: Sequence[AddressRecord], db2: Sequence[AddressRecord], cfg: LinkageConfig = LinkageConfig()
) -> set[tuple[int, int]]:
    """Pairs sharing at least one round-1 token with frequency <= k on both sides."""
    k = cfg.max_token_freq
    tok1 = [(r.id, _round1_tokens(r.normalized, cfg.round1_kind)) for r in db1]
    tok2 = [(r.id, _round1_tokens(r.normalized, cfg.round1_kind)) for r in db2]
    freq1 = Counter(t for _, s in tok1 for t in s)
    freq2 = Counter(t for _, s in tok2 for t in s)
    out = set()
    for i, s1 in tok1:
        for j, s2 in tok2:
            if any(freq1[t] <= k and freq2[t] <= k for t in s1 & s2):
                out.add((i, j))
    return out
