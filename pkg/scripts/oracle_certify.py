"""Density-matrix certification of the fast coset decoder on small instances."""

import argparse
import time

import numpy as np

from mdsqpir import protocol

POINTS = [(2, 1, 1), (3, 1, 2), (4, 1, 2), (4, 2, 1), (5, 2, 2)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=50)
    ap.add_argument("--files", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ok = True
    for n, k, t in POINTS:
        p = protocol.derive_params(n, k, t, args.files)
        rng = np.random.default_rng([args.seed, n, k, t])
        start = time.perf_counter()
        agree, worst = 0, 0.0
        for i in range(args.rounds):
            storage = protocol.encode_storage(protocol.random_files(p, rng), p)
            geo = p.geometry(1 + i % p.rho)
            res = protocol.run_round(p, geo, storage, 1 + i % p.m, rng, backend="oracle")
            agree += np.array_equal(res.outcome, protocol.decode_fast(geo, res.responses))
            worst = max(worst, abs(res.probability - 1))
        ok &= agree == args.rounds and worst <= 1e-9
        print(f"n={n} q={p.field.q} dim={p.field.q ** n} agree={agree}/{args.rounds} max|P-1|={worst:.1e} {time.perf_counter() - start:.1f}s")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
