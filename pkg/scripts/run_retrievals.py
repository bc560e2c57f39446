"""Batch of seeded retrievals over a parameter grid; reports failures and rates."""

import argparse
import itertools
import time

import numpy as np

from mdsqpir import protocol

GRID = [(4, 1, 2), (4, 2, 1), (5, 2, 2), (6, 2, 2), (6, 3, 2), (6, 2, 3)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--files", type=int, nargs="+", default=[1, 2, 5])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    total_fail = 0
    for (n, k, t), m in itertools.product(GRID, args.files):
        p = protocol.derive_params(n, k, t, m)
        rng = np.random.default_rng([args.seed, n, k, t, m])
        start = time.perf_counter()
        fails = 0
        for i in range(args.trials):
            iota = 1 + i % m
            x = protocol.random_files(p, rng)
            res = protocol.run_retrieval(p, protocol.encode_storage(x, p), iota, rng)
            fails += not np.array_equal(res.decoded, x[(iota - 1) * p.beta : iota * p.beta])
        total_fail += fails
        print(f"n={n} k={k} t={t} m={m} q={p.field.q} rate={protocol.scheme_rate(p)} failures={fails}/{args.trials} {time.perf_counter() - start:.2f}s")
    raise SystemExit(1 if total_fail else 0)


if __name__ == "__main__":
    main()
