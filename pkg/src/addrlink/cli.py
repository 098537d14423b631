"""Command line entry point: ``addrlink {link,query,sweep,gen,eval,stats}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .evalgen import (
    CorruptionProfile,
    TruthSet,
    arbitrary_scenario,
    corrupt,
    evaluate,
    evaluate_arbitrary,
    generate_reference,
)
from .index import build_index, prune
from .ingest import DatasetError, format_score, load_dataset, read_matches, write_dataset, write_matches
from .linkage import Decision, LinkageError, MatchResult, link, query, threshold_sweep, token_frequency_histogram
from .similarity import LinkageConfig
from .tokenizer import TokenKind, distinct_tokens

log = logging.getLogger("addrlink")


def _taus(text: str) -> list[float]:
    try:
        taus = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tau list {text!r}") from None
    if not taus or any(not 0 < t <= 1 for t in taus):
        raise argparse.ArgumentTypeError("taus must lie in (0, 1]")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise argparse.ArgumentTypeError("taus must be strictly ascending")
    return taus


def _dataset_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input format")
    g.add_argument("--format", choices=("lines", "csv"), default="lines")
    g.add_argument("--column", default=None, help="CSV address column (name or index, default 0)")
    g.add_argument("--id-column", default=None, help="CSV id column; ids are line order otherwise")
    g.add_argument("--delimiter", default=",")


def _linkage_args(p: argparse.ArgumentParser, tau: bool = True) -> None:
    g = p.add_argument_group("linkage")
    if tau:
        g.add_argument("--tau", type=float, default=0.7)
    g.add_argument("--max-token-freq", "-k", type=int, default=100)
    g.add_argument("--top-n", type=int, default=3)
    g.add_argument("--round1", choices=[k.value for k in TokenKind], default="phrase")
    g.add_argument("--round2", choices=[k.value for k in TokenKind], default="char")
    g.add_argument("--workers", type=int, default=1, help="worker count hint")


def _config(args, tau: Optional[float] = None) -> LinkageConfig:
    return LinkageConfig(
        tau=tau if tau is not None else args.tau,
        max_token_freq=args.max_token_freq,
        round1_kind=TokenKind(args.round1),
        round2_kind=TokenKind(args.round2),
        top_n=args.top_n,
        workers=args.workers,
        debug=getattr(args, "debug", False),
    )


def _load(path, args):
    t0 = time.perf_counter()
    recs = load_dataset(path, args.format, args.column, args.id_column, args.delimiter)
    empty = sum(r.is_empty for r in recs)
    log.info("loaded %s: %d records (%d empty) in %.1fs", path, len(recs), empty, time.perf_counter() - t0)
    return recs


def cmd_link(args) -> int:
    left = _load(args.left, args)
    right = _load(args.right, args)
    t0 = time.perf_counter()
    results = link(left, right, _config(args), args.mode)
    elapsed = time.perf_counter() - t0
    n = write_matches(results, args.out)
    accepted = sum(r.decision is Decision.ACCEPTED for r in results)
    linked = len({r.left_id for r in results if r.decision is Decision.ACCEPTED})
    print(f"mode={args.mode} left={len(left)} right={len(right)} rows={n} accepted={accepted} "
          f"linked_left={linked} seconds={elapsed:.2f} out={args.out}")
    return 0


def cmd_query(args) -> int:
    db = _load(args.db, args)
    cfg = _config(args)
    results = query(args.address, db, cfg, limit=args.limit)
    by_id = {r.id: r for r in db}
    if not results:
        print("no candidates share a round-1 token with the query")
        return 0
    for rank, r in enumerate(results, 1):
        mark = "*" if r.best else " "
        print(f"{rank:>3}{mark} {format_score(r.score)} {r.decision.value:<8} {r.right_id}\t{by_id[r.right_id].raw}")
    return 0


def cmd_sweep(args) -> int:
    left = _load(args.left, args)
    right = _load(args.right, args)
    report = threshold_sweep(left, right, args.taus, _config(args, tau=args.taus[0]))
    for line in report.summary_lines():
        print(line)
    for a, b in zip(args.taus, args.taus[1:]):
        nested = report.accepted_pairs(b) <= report.accepted_pairs(a)
        print(f"accepted({b:g}) subset of accepted({a:g}): {nested}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for tau in args.taus:
            write_matches(report.accepted[tau], out / f"matches_tau{tau:g}.tsv")
    return 0


def _profile(args) -> CorruptionProfile:
    base = CorruptionProfile.mild(args.seed) if args.profile == "mild" else CorruptionProfile.identity(args.seed)
    overrides = {
        name: getattr(args, name)
        for name in ("typo", "drop_postcode", "drop_locality", "abbreviation", "reorder", "duplicate")
        if getattr(args, name) is not None
    }
    return CorruptionProfile(**{**base.as_dict(), **overrides})


def cmd_gen(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = _profile(args)
    if args.scenario == "reference":
        ref = generate_reference(args.seed, args.n)
        raw, truth = corrupt(ref, profile)
        write_dataset(ref, out / "reference.txt")
        write_dataset(raw, out / "raw.txt")
        names = ("raw.txt", "reference.txt")
    else:
        db1, db2, truth = arbitrary_scenario(args.seed, args.n, args.overlap, profile)
        write_dataset(db1, out / "db1.txt")
        write_dataset(db2, out / "db2.txt")
        names = ("db1.txt", "db2.txt")
    truth.save(out / "truth.tsv")
    print(f"wrote {out / names[0]}, {out / names[1]}, {out / 'truth.tsv'} ({len(truth)} truth links)")
    return 0


def cmd_eval(args) -> int:
    rows = read_matches(args.matches)
    results = [
        MatchResult(l, r, float(s), Decision(d), best) for l, r, s, d, best in rows
    ]
    truth = TruthSet.load(args.truth)
    if args.mode == "reference":
        report = evaluate(results, truth, args.taus)
    else:
        report = evaluate_arbitrary(results, truth)
    print(report.table())
    print()
    print("\n".join(report.key_values()))
    return 0


def cmd_stats(args) -> int:
    recs = _load(args.data, args)
    idx = build_index(recs, TokenKind(args.kind))
    hist = token_frequency_histogram(idx)
    kept = prune(idx, args.k)
    postings = sum(f * c for f, c in hist.items())
    kept_postings = sum(len(v) for v in kept.postings.values())
    print(f"records={len(recs)} tokens={len(idx)} postings={postings}")
    print(f"k={args.k}: tokens_kept={len(kept)} tokens_pruned={len(idx) - len(kept)} "
          f"postings_kept={kept_postings}")
    uncovered = sum(
        1 for r in recs if not any(t in kept for t in distinct_tokens(r.normalized, args.kind))
    )
    print(f"records_without_surviving_token={uncovered}")
    print(f"{'frequency':>15} {'tokens':>10}")
    edges = [1, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000, 10**4, 10**5]
    lo = 1
    for hi in edges + [None]:
        if hi is None:
            n = sum(c for f, c in hist.items() if f >= lo)
            label = f">={lo}"
        else:
            n = sum(c for f, c in hist.items() if lo <= f <= hi)
            label = f"{lo}" if lo == hi else f"{lo}-{hi}"
        if n:
            print(f"{label:>15} {n:>10}")
        if hi is None:
            break
        lo = hi + 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="addrlink", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log one line per stage")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("link", help="link two datasets")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--mode", choices=("reference", "arbitrary"), default="reference")
    p.add_argument("--out", required=True)
    p.add_argument("--debug", action="store_true", help="also write rejected candidate pairs")
    _dataset_args(p)
    _linkage_args(p)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("query", help="rank one address against a dataset")
    p.add_argument("--db", required=True)
    p.add_argument("--address", required=True)
    p.add_argument("--limit", type=int, default=10)
    _dataset_args(p)
    _linkage_args(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sweep", help="reference linkage at several thresholds")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--taus", type=_taus, default=[0.6, 0.7, 0.8])
    p.add_argument("--out-dir", default=None, help="write one match file per tau here")
    _dataset_args(p)
    _linkage_args(p, tau=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="generate a synthetic corpus with ground truth")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scenario", choices=("reference", "arbitrary"), default="reference")
    p.add_argument("--overlap", type=float, default=0.7, help="arbitrary scenario: share of db1 present in db2")
    p.add_argument("--profile", choices=("identity", "mild"), default="mild")
    for name in ("typo", "drop-postcode", "drop-locality", "abbreviation", "reorder", "duplicate"):
        p.add_argument(f"--{name}", type=float, default=None, metavar="P")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="score a match file against truth.tsv")
    p.add_argument("--matches", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--mode", choices=("reference", "arbitrary"), default="reference")
    p.add_argument("--taus", type=_taus, default=[0.6, 0.7, 0.8])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="token frequency histogram (for choosing k)")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", choices=[k.value for k in TokenKind], default="phrase")
    p.add_argument("-k", type=int, default=100)
    _dataset_args(p)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (DatasetError, LinkageError, OSError, ValueError) as exc:
        print(f"addrlink: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
