from __future__ import annotations

import argparse
import os

import numpy as np
import pandas as pd


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--rows", type=int, default=10_000_000)
    ap.add_argument("--accounts", type=int, default=100_000)
    ap.add_argument("--zipf", type=float, default=1.3, help="Exponent of target popularity.")
    ap.add_argument("--max-count", type=int, default=5)
    ap.add_argument("--chunk", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)

    # Heavy-tailed popularity: a few accounts receive most engagements.
    ranks = np.arange(1, args.accounts + 1, dtype=np.float64)
    popularity = ranks ** -args.zipf
    popularity /= popularity.sum()
    targets_by_rank = rng.permutation(args.accounts)
    handles = np.asarray([f"u{k:07d}" for k in range(args.accounts)], dtype=object)

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    written = 0
    header = True
    while written < args.rows:
        size = min(args.chunk, args.rows - written)
        engager = rng.integers(0, args.accounts, size=size)
        target = targets_by_rank[rng.choice(args.accounts, size=size, p=popularity)]
        count = rng.integers(1, args.max_count + 1, size=size)
        df = pd.DataFrame({"engager": handles[engager], "target": handles[target], "count": count})
        df.to_csv(args.out, index=False, header=header, mode="w" if header else "a", lineterminator="\n")
        header = False
        written += size
    print(f"wrote {args.out} rows={written}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
