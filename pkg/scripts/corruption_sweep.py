"""Recall and precision of reference linkage as corruption gets heavier.

    python scripts/corruption_sweep.py --n 10000

For each corruption probability the left side is a corrupted copy of a
synthetic reference set; metrics are reported at each threshold, followed
by the two-dataset scenario under the mild profile.
"""

import argparse
import sys

from addrlink.evalgen import (
    CorruptionProfile,
    arbitrary_scenario,
    corrupt,
    evaluate,
    evaluate_arbitrary,
    generate_reference,
)
from addrlink.linkage import link_arbitrary, link_reference
from addrlink.similarity import LinkageConfig


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=12)
    p.add_argument("--probs", default="0,0.1,0.2,0.3,0.5")
    p.add_argument("--taus", default="0.6,0.7,0.8")
    args = p.parse_args(argv)
    probs = [float(x) for x in args.probs.split(",")]
    taus = [float(x) for x in args.taus.split(",")]

    ref = generate_reference(args.seed, args.n)
    print(f"{'p':>5} {'tau':>5} {'recall':>7} {'precision':>9} {'best_prec':>9} {'linked':>7}")
    for prob in probs:
        raw, truth = corrupt(ref, CorruptionProfile.uniform(prob, args.seed))
        results = link_reference(raw, ref, LinkageConfig(tau=taus[0]))
        for m in evaluate(results, truth, taus).rows:
            print(f"{prob:>5.2f} {m.tau:>5.2f} {m.recall:>7.4f} {m.precision:>9.4f} "
                  f"{m.best_precision:>9.4f} {m.linked_records:>7}")

    print()
    db1, db2, truth = arbitrary_scenario(args.seed, args.n)
    print(f"two uncurated datasets: {len(db1)} x {len(db2)}, {len(truth)} true links")
    print(evaluate_arbitrary(link_arbitrary(db1, db2), truth).table())
    return 0


if __name__ == "__main__":
    sys.exit(main())
