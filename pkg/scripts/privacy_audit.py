"""Algebraic and sampled privacy audits plus secrecy resampling on every grid point."""

import argparse

from mdsqpir import audit, protocol

GRID = [(4, 1, 2), (4, 2, 1), (5, 2, 2), (6, 2, 2), (6, 3, 2), (6, 2, 3)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10000)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--files", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ok = True
    for n, k, t in GRID:
        p = protocol.derive_params(n, k, t, args.files)
        reports = [
            audit.audit_user_privacy(p, mode="both", n_samples=args.samples, seed=args.seed),
            audit.audit_server_secrecy(p, trials=args.trials, seed=args.seed),
        ]
        for rep in reports:
            ok &= rep.passed
            print(rep.render())
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
