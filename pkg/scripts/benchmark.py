"""Time reference linkage of two synthetic datasets and report peak memory.

    python scripts/benchmark.py --n 1000000

The left side is a mildly corrupted copy of the right side. Stage timings
and the peak resident set size are printed as key=value lines.
"""

import argparse
import os
import resource
import sys
import time

from addrlink.evalgen import CorruptionProfile, corrupt, evaluate, generate_reference
from addrlink.linkage import _reference_decisions, block, score_array
from addrlink.similarity import LinkageConfig


def peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tau", type=float, default=0.7)
    p.add_argument("-k", type=int, default=100)
    p.add_argument("--budget-seconds", type=float, default=600.0)
    args = p.parse_args(argv)

    t0 = time.perf_counter()
    ref = generate_reference(args.seed, args.n)
    raw, truth = corrupt(ref, CorruptionProfile.mild(args.seed))
    t_gen = time.perf_counter() - t0

    cfg = LinkageConfig(tau=args.tau, max_token_freq=args.k)
    t1 = time.perf_counter()
    pairs = block(raw, ref, cfg)
    t_block = time.perf_counter() - t1
    scores = score_array(pairs, raw, ref, cfg)
    t_score = time.perf_counter() - t1 - t_block
    results = _reference_decisions(pairs, scores, cfg.tau, False)
    t_link = time.perf_counter() - t1
    m = evaluate(results, truth, [args.tau])[args.tau]

    print(f"n={args.n}")
    print(f"cpus={os.cpu_count()}")
    print(f"generate_seconds={t_gen:.1f}")
    print(f"block_seconds={t_block:.1f}")
    print(f"score_seconds={t_score:.1f}")
    print(f"link_seconds={t_link:.1f}")
    print(f"candidate_pairs={len(pairs)}")
    print(f"accepted={len(results)}")
    print(f"recall={m.recall:.4f}")
    print(f"best_precision={m.best_precision:.4f}")
    print(f"peak_rss_mb={peak_rss_mb():.0f}")
    within = t_link <= args.budget_seconds
    print(f"within_budget={int(within)}")
    return 0 if within else 1


if __name__ == "__main__":
    sys.exit(main())
