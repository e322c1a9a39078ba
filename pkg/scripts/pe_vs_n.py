"""Exact and Monte Carlo message error probability of the Case 3 scheme on the
binary example channel as the block length grows."""

import argparse
import json

from wiretap_csi.channel import example_channel
from wiretap_csi.oracle import exact_error_probability
from wiretap_csi.simulate import KeyBinning, SchemeConfig, binomial_sigma, default_strategy, generate_codebook, run_session


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, nargs="+", default=[2, 4, 6])
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=2)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    ch = example_channel()
    strat = default_strategy(ch)
    rows = []
    for n in args.n:
        cfg = SchemeConfig(case=3, n=n, b=2, log2_total=1, log2_key=1, seed=args.seed)
        cb = generate_codebook(ch, cfg, strat)
        exact = exact_error_probability(ch, cfg, cb, KeyBinning.from_config(cfg))
        rep = run_session(ch, cfg, strat, trials=args.trials, workers=args.workers)
        rows.append(
            {
                "n": n,
                "exact_pe": exact,
                "empirical_pe": rep.empirical_pe,
                "sigma": binomial_sigma(exact, rep.message_blocks),
            }
        )
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
