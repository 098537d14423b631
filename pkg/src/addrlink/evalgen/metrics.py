"""Precision / recall against ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..linkage import Decision, MatchResult
from .generator import TruthSet


@dataclass(frozen=True)
class ThresholdMetrics:
    tau: float
    accepted: int
    true_positives: int
    false_positives: int
    missed: int
    precision: float
    recall: float
    missed_rate: float
    best_precision: float
    linked_records: int
    degenerate: bool


@dataclass
class EvaluationReport:
    truth_links: int
    rows: list[ThresholdMetrics] = field(default_factory=list)

    def __getitem__(self, tau: float) -> ThresholdMetrics:
        for row in self.rows:
            if row.tau == tau:
                return row
        raise KeyError(tau)

    def table(self) -> str:
        head = (f"{'tau':>6} {'accepted':>9} {'tp':>7} {'fp':>7} {'missed':>7} "
                f"{'precision':>9} {'recall':>7} {'missed%':>8} {'best_prec':>9}")
        lines = [head]
        for m in self.rows:
            flag = " (degenerate)" if m.degenerate else ""
            lines.append(
                f"{m.tau:>6.3f} {m.accepted:>9} {m.true_positives:>7} {m.false_positives:>7} "
                f"{m.missed:>7} {m.precision:>9.4f} {m.recall:>7.4f} {100 * m.missed_rate:>7.2f}% "
                f"{m.best_precision:>9.4f}{flag}"
            )
        return "\n".join(lines)

    def key_values(self) -> list[str]:
        out = [f"truth_links={self.truth_links}"]
        for m in self.rows:
            p = f"tau_{m.tau:g}"
            out += [
                f"{p}.accepted={m.accepted}",
                f"{p}.true_positives={m.true_positives}",
                f"{p}.false_positives={m.false_positives}",
                f"{p}.missed={m.missed}",
                f"{p}.precision={m.precision:.6f}",
                f"{p}.recall={m.recall:.6f}",
                f"{p}.missed_rate={m.missed_rate:.6f}",
                f"{p}.best_precision={m.best_precision:.6f}",
                f"{p}.linked_records={m.linked_records}",
                f"{p}.degenerate={int(m.degenerate)}",
            ]
        return out


def evaluate(
    results: Iterable[MatchResult], truth: TruthSet, taus: Sequence[float] = (0.6, 0.7, 0.8)
) -> EvaluationReport:
    """Reference-mode metrics per threshold.

    ``results`` must carry every pair scoring above the smallest tau (run the
    linkage at that tau, or with ``debug``); each tau keeps pairs whose
    score exceeds it. Pairs are assumed distinct, as the linkage produces
    them. Recall counts truth links that appear among the kept pairs.
    ``best_precision`` is the fraction of linked records whose top kept
    pair is the true one. With nothing kept, precision is 1.0 and the
    row is flagged degenerate.
    """
    taus = sorted(taus)
    gold = truth.links
    accepted = [0] * len(taus)
    tp = [0] * len(taus)
    best: list[dict[int, tuple[float, int]]] = [{} for _ in taus]
    for r in results:
        if r.right_id is None:
            continue
        l, rid, s = r.left_id, r.right_id, r.score
        hit = gold.get(l) == rid
        for i, tau in enumerate(taus):
            if not (s > tau or s == 1.0):
                break
            accepted[i] += 1
            tp[i] += hit
            cur = best[i].get(l)
            if cur is None or (-s, rid) < (-cur[0], cur[1]):
                best[i][l] = (s, rid)
    report = EvaluationReport(len(gold))
    n_gold = len(gold)
    for i, tau in enumerate(taus):
        best_ok = sum(1 for l, (_, rid) in best[i].items() if gold.get(l) == rid)
        report.rows.append(
            ThresholdMetrics(
                tau=tau,
                accepted=accepted[i],
                true_positives=tp[i],
                false_positives=accepted[i] - tp[i],
                missed=n_gold - tp[i],
                precision=tp[i] / accepted[i] if accepted[i] else 1.0,
                recall=tp[i] / n_gold if n_gold else 1.0,
                missed_rate=(n_gold - tp[i]) / n_gold if n_gold else 0.0,
                best_precision=best_ok / len(best[i]) if best[i] else 1.0,
                linked_records=len(best[i]),
                degenerate=not accepted[i],
            )
        )
    return report


@dataclass(frozen=True)
class ArbitraryReport:
    records: int
    accepted_correct: int
    accepted_incorrect: int
    not_found: int

    def fraction(self, n: int) -> float:
        return n / self.records if self.records else 0.0

    @property
    def linked_precision(self) -> float:
        linked = self.accepted_correct + self.accepted_incorrect
        return self.accepted_correct / linked if linked else 1.0

    def table(self) -> str:
        return "\n".join([
            f"{'outcome':<20} {'count':>8} {'share':>8}",
            f"{'accepted correct':<20} {self.accepted_correct:>8} {self.fraction(self.accepted_correct):>8.2%}",
            f"{'accepted incorrect':<20} {self.accepted_incorrect:>8} {self.fraction(self.accepted_incorrect):>8.2%}",
            f"{'not found':<20} {self.not_found:>8} {self.fraction(self.not_found):>8.2%}",
            f"correct among linked: {self.linked_precision:.2%}",
        ])

    def key_values(self) -> list[str]:
        return [
            f"records={self.records}",
            f"accepted_correct={self.accepted_correct}",
            f"accepted_incorrect={self.accepted_incorrect}",
            f"not_found={self.not_found}",
            f"accepted_correct_fraction={self.fraction(self.accepted_correct):.6f}",
            f"accepted_incorrect_fraction={self.fraction(self.accepted_incorrect):.6f}",
            f"not_found_fraction={self.fraction(self.not_found):.6f}",
            f"linked_precision={self.linked_precision:.6f}",
        ]


def evaluate_arbitrary(results: Iterable[MatchResult], truth: TruthSet) -> ArbitraryReport:
    """Split left records into accepted-correct, accepted-incorrect and not-found."""
    ok = bad = missing = 0
    for r in results:
        if r.decision is Decision.ACCEPTED:
            if truth.links.get(r.left_id) == r.right_id:
                ok += 1
            else:
                bad += 1
        elif r.decision is Decision.NOT_FOUND:
            missing += 1
    return ArbitraryReport(ok + bad + missing, ok, bad, missing)
