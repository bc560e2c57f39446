"""Capacity formulas next to measured scheme rates; optionally writes CSV."""

import argparse
import csv
from dataclasses import asdict

from mdsqpir import audit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--csv", help="write the table here")
    args = ap.parse_args()
    rows = audit.capacity_table(audit.default_grid(args.points, args.n_max))
    print(audit.format_capacity_table(rows))
    rep = audit.audit_capacity_table(rows)
    print(rep.render())
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(asdict(rows[0])))
            w.writeheader()
            for r in rows:
                w.writerow({key: str(v) for key, v in asdict(r).items()})
    raise SystemExit(0 if rep.passed else 1)


if __name__ == "__main__":
    main()
