"""Run a reduced benchmark over all eight variants and print the tables.

Shrinks the default configuration (fewer tracks, fewer epochs) so the whole
comparison finishes in well under a minute, then renders the three result
tables: retrieval + AUC + time ratio, per-notion sub-space triplet accuracy,
and track-level triplet accuracy.
"""

import argparse
import json

from disembed.benchmark import run_benchmark
from disembed.config import default_config
from disembed.reports import render_table1, render_table2, render_table3


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tracks", type=int, default=200)
    parser.add_argument("--epochs", type=int, default=8)
    parser.add_argument("--save", metavar="FILE",
                        help="also write the raw report JSON here")
    args = parser.parse_args()

    config = default_config(seed=args.seed, max_epochs=args.epochs)
    config.synthetic.tracks = args.tracks
    config.triplets_per_notion = 500

    print(f"benchmarking {len(config.variants)} variants on "
          f"{args.tracks} tracks (seed {args.seed}) ...\n")
    out = run_benchmark(config)
    reports = out["reports"]

    notions = [n.name for n in config.space.notions]
    print(render_table1(reports, config.eval_ks))
    print()
    print(render_table2(reports, notions))
    print()
    print(render_table3(reports))

    if args.save:
        with open(args.save, "w") as fh:
            json.dump(out, fh, indent=2)
        print(f"\nraw report written to {args.save}")


if __name__ == "__main__":
    main()
