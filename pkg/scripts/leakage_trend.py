"""Exact normalized leakage I(M; Z | C) / ((b-1) n) of the Case 3 scheme on the
binary example channel, for several block lengths and codebook seeds."""

import argparse
import json

import numpy as np

from wiretap_csi.channel import example_channel
from wiretap_csi.oracle import exact_leakage
from wiretap_csi.simulate import KeyBinning, SchemeConfig, default_strategy, generate_codebook


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, nargs="+", default=[2, 4])
    parser.add_argument("--seeds", type=int, default=20)
    args = parser.parse_args()

    ch = example_channel()
    strat = default_strategy(ch)
    table = {}
    for seed in range(args.seeds):
        row = {}
        for n in args.n:
            cfg = SchemeConfig(case=3, n=n, b=2, log2_total=1, log2_key=1, seed=seed)
            cb = generate_codebook(ch, cfg, strat)
            row[n] = {
                "leakage_per_symbol": exact_leakage(ch, cfg, cb, KeyBinning.from_config(cfg)),
                "distinct_codewords": len({tuple(c) for c in cb.sequences}) == len(cb.sequences),
            }
        table[seed] = row
    first, last = args.n[0], args.n[-1]
    decreasing = [s for s, r in table.items() if r[last]["leakage_per_symbol"] < r[first]["leakage_per_symbol"]]
    summary = {
        "seeds": args.seeds,
        "decreasing": len(decreasing),
        "fraction": len(decreasing) / args.seeds,
        "mean": {n: float(np.mean([r[n]["leakage_per_symbol"] for r in table.values()])) for n in args.n},
    }
    print(json.dumps({"summary": summary, "per_seed": table}, indent=2))


if __name__ == "__main__":
    main()
