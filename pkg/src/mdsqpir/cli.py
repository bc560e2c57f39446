"""Command-line interface.  Exit status is 0 iff every reported verdict is PASS."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import audit, linalg, protocol, qoracle
from .codes import mds_erasure_decode
from .harness import (
    ConfigError,
    SimulationConfig,
    expected_file,
    make_storage,
    run_simulation,
    save_matrix,
    streams,
    two_server_example,
    verify_transcript,
)


def _config(args) -> SimulationConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    for key in ("n", "k", "t", "m", "seed", "backend", "files"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if args.field_r is not None:
        data["field"] = {"r": args.field_r}
    if getattr(args, "iota", None) is not None:
        data["iota"] = args.iota
    if getattr(args, "threaded", False):
        data["threaded"] = True
    data.setdefault("n", 4)
    data.setdefault("k", 1)
    data.setdefault("t", 2)
    return SimulationConfig.from_json(data)


def _verdicts(checks, as_json: bool, extra: dict | None = None) -> int:
    ok = all(passed for _, passed in checks)
    if as_json:
        print(json.dumps({"verdict": "PASS" if ok else "FAIL", "checks": [{"name": n, "pass": p} for n, p in checks], **(extra or {})}, indent=2, default=str))
    else:
        for name, passed in checks:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}")
    return 0 if ok else 1


def _report(rep: audit.AuditReport, as_json: bool) -> int:
    print(json.dumps(rep.to_json(), indent=2, default=str) if as_json else rep.render())
    return 0 if rep.passed else 1


def cmd_encode(args) -> int:
    cfg = _config(args)
    params = cfg.params()
    files_rng, _ = streams(cfg.seed)
    storage = make_storage(cfg, params, files_rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(out / "files.json", storage.x)
    save_matrix(out / "storage.json", storage.y)
    for s in range(1, params.n + 1):
        save_matrix(out / f"server{s}.json", np.stack(storage.server_columns(s), axis=1))
    (out / "params.json").write_text(json.dumps(params.to_json(), indent=2))
    n, k = params.n, params.k
    recovered = [
        np.array([mds_erasure_decode(params.storage_code, range(k), row[:k]) for row in storage.y[:, h * n : (h + 1) * n]]).reshape(-1, k)
        for h in (0, 1)
    ]
    decodes = np.array_equal(np.concatenate(recovered, axis=1), storage.x)
    return _verdicts([(f"wrote {n} server files to {out}", True), ("first k columns of each half decode the files", decodes)], args.json)


def cmd_retrieve(args) -> int:
    cfg = _config(args)
    tr = run_simulation(cfg, args.transcript)
    decoded = linalg.matrix_from_hex(tr.decoded)
    checks = [(f"decoded file {cfg.iota} equals the stored file", np.array_equal(decoded, expected_file(cfg)))]
    checks += verify_transcript(tr)
    extra = {"rate": str(tr.measured_rate()), "decoded": tr.decoded}
    if not args.json:
        print(f"rate {tr.measured_rate()} over {len(tr.rounds)} round(s); decoded {tr.decoded}")
    return _verdicts(checks, args.json, extra)


def cmd_verify_codes(args) -> int:
    params = _config(args).params()
    inject = audit.non_weakly_self_dual_star(params) if args.negative_control else None
    return _report(audit.verify_codes(params, inject), args.json)


def cmd_audit_privacy(args) -> int:
    params = _config(args).params()
    subset = [int(s) for s in args.subset.split(",")] if args.subset else None
    status = 0
    try:
        rep = audit.audit_user_privacy(params, subset, "algebraic")
    except audit.AuditError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    status |= _report(rep, args.json)
    if args.empirical:
        rep = audit.audit_user_privacy(params, subset, "empirical", args.empirical, _config(args).seed, args.leak_selector)
        status |= _report(rep, args.json)
    return status


def cmd_audit_secrecy(args) -> int:
    cfg = _config(args)
    rep = audit.audit_server_secrecy(cfg.params(), args.trials, cfg.seed, cfg.iota, args.corrupt_basis)
    return _report(rep, args.json)


def parse_grid(text: str | None):
    if not text:
        return audit.default_grid()
    return [tuple(int(v) for v in pt.split(",")) for pt in text.replace(" ", "").split(";") if pt]


def cmd_rate_table(args) -> int:
    rows = audit.capacity_table(parse_grid(args.grid))
    print(audit.format_capacity_table(rows))
    return _report(audit.audit_capacity_table(rows), args.json)


def cmd_oracle_check(args) -> int:
    cfg = _config(args)
    params = cfg.params()
    if params.field.q**params.n > qoracle.DEFAULT_LIMIT:
        print(f"refused: q^n = {params.field.q ** params.n} exceeds the oracle limit {qoracle.DEFAULT_LIMIT}", file=sys.stderr)
        return 2
    files_rng, query_rng = streams(cfg.seed)
    start = time.perf_counter()
    worst = 0.0
    matches = agree = 0
    for i in range(args.rounds):
        storage = protocol.encode_storage(protocol.random_files(params, files_rng), params)
        r = 1 + i % params.rho
        iota = 1 + i % params.m
        geo = params.geometry(r)
        res = protocol.run_round(params, geo, storage, iota, query_rng, backend="oracle")
        agree += np.array_equal(res.outcome, protocol.decode_fast(geo, res.responses))
        worst = max(worst, abs(res.probability - 1))
        matches += np.array_equal(res.outcome, protocol.targeted_symbols(params, geo, storage, iota))
    checks = [
        (f"{agree}/{args.rounds} oracle outcomes equal the fast coset label", agree == args.rounds),
        (f"max |P(outcome) - 1| = {worst:.2e} within 1e-9", worst <= 1e-9),
        (f"{matches}/{args.rounds} outcomes equal the targeted storage symbols", matches == args.rounds),
    ]
    if not args.json:
        print(f"oracle check n={params.n} q={params.field.q} in {time.perf_counter() - start:.1f}s")
    return _verdicts(checks, args.json)


def cmd_example_two_server(args) -> int:
    files = np.array([[int(b) for b in f] for f in args.bits.split(",")], dtype=np.uint8)
    status_checks = []
    for iota in range(1, files.shape[0] + 1):
        d = two_server_example(files, iota, args.seed)
        mx, mz = (int(v) for v in files[iota - 1])
        rep = [int(v) for v in d["representative"]]
        if not args.json:
            print(f"file {iota}: m=({mx},{mz}) coset ({','.join(map(str, rep))}) decoded {d['decoded'].ravel().tolist()}")
        status_checks += [
            (f"file {iota}: queries are (Z + e_iota, Z)", d["queries_match"]),
            (f"file {iota}: outcome coset is (m_X, 0, m_Z, 0)", rep == [mx, 0, mz, 0]),
            (f"file {iota}: decoded bits equal the file", d["decoded"].ravel().tolist() == [mx, mz]),
            (f"file {iota}: rate {d['rate']} = 1", d["rate"] == 1),
        ]
    return _verdicts(status_checks, args.json)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config {n,k,t,m,field:{r},seed,backend,files}")
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--t", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--field-r", type=int, help="field GF(2^r); default smallest with 2^r >= n")
    common.add_argument("--seed", type=int)
    common.add_argument("--backend", choices=protocol.BACKENDS)
    common.add_argument("--files", help="hex matrix file of the stored files, or 'random'")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(prog="mdsqpir", description="QPIR over MDS-coded storage with colluding servers")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("encode", parents=[common], help="encode files and write per-server storage")
    s.add_argument("--out", default="storage")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("retrieve", parents=[common], help="run one private retrieval")
    s.add_argument("--iota", type=int, required=True)
    s.add_argument("--transcript", help="write the transcript here")
    s.add_argument("--threaded", action="store_true", help="one thread per server actor")
    s.set_defaults(func=cmd_retrieve)

    s = sub.add_parser("verify-codes", parents=[common], help="check the code constructions")
    s.add_argument("--negative-control", action="store_true", help="inject a non weakly self-dual S' (must FAIL)")
    s.set_defaults(func=cmd_verify_codes)

    s = sub.add_parser("audit-privacy", parents=[common], help="query privacy against colluding servers")
    s.add_argument("--subset", help="comma-separated server ids, at most t of them")
    s.add_argument("--empirical", type=int, metavar="N", help="also run N sampled queries per file index")
    s.add_argument("--leak-selector", action="store_true", help="drop the query mask (must FAIL)")
    s.set_defaults(func=cmd_audit_privacy)

    s = sub.add_parser("audit-secrecy", parents=[common], help="labels must not depend on other files")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--iota", type=int)
    s.add_argument("--corrupt-basis", action="store_true", help="decode in the wrong basis (must FAIL)")
    s.set_defaults(func=cmd_audit_secrecy)

    s = sub.add_parser("rate-table", parents=[common], help="capacity formulas and measured rates")
    s.add_argument("--grid", help="points 'n,k,t;n,k,t;...' (default: 20 points)")
    s.set_defaults(func=cmd_rate_table)

    s = sub.add_parser("oracle-check", parents=[common], help="density-matrix certification of the fast backend")
    s.add_argument("--rounds", type=int, default=50)
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("example-two-server", help="two servers, one qubit each")
    s.add_argument("--bits", default="10,01,11", help="comma-separated 2-bit files (m_X m_Z)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_example_two_server)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, protocol.ParameterError, protocol.CertificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
