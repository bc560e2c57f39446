"""Auditors: query privacy, secrecy of non-target files, code checks, capacity table.

Every auditor returns an :class:`AuditReport` whose verdict is the conjunction
of its named sub-checks.  Fault-injection switches (``leak_selector``,
``corrupt_basis``, ``inject_star``) exist so the auditors themselves can be
shown to fail when they should.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from . import codes, linalg, protocol
from .codes import GrsCode
from .gf import field_for_length
from .protocol import SchemeParams
from .stabilizer import complete_basis, symplectic_matrix


class AuditError(ValueError):
    pass


@dataclass
class AuditReport:
    kind: str
    params: dict
    checks: list[tuple[str, bool]] = dc_field(default_factory=list)
    evidence: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok in self.checks)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def add(self, name: str, ok) -> bool:
        self.checks.append((name, bool(ok)))
        return bool(ok)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params, "verdict": self.verdict, "checks": [{"name": n, "pass": ok} for n, ok in self.checks], "evidence": self.evidence}

    def render(self) -> str:
        head = f"{self.kind} {self.params}: {self.verdict}"
        return "\n".join([head] + [f"  [{'PASS' if ok else 'FAIL'}] {name}" for name, ok in self.checks])


def _tag(params: SchemeParams) -> dict:
    return {"n": params.n, "k": params.k, "t": params.t, "m": params.m, "q": params.field.q}


# --- privacy -------------------------------------------------------------


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


def projected_query_sample(params: SchemeParams, subset, iota: int, rng, z_zero: bool = False) -> int:
    """Histogram bin of one query: row 1, first-half columns of ``subset``, round 1."""
    geo = params.geometry(1)
    z = np.zeros((params.rows, 2 * params.t), np.uint8) if z_zero else None
    bundle = protocol.build_queries(params, geo, iota, rng, z)
    vals = bundle.q[0, [s - 1 for s in subset]]
    return int(np.ravel_multi_index(tuple(int(v) for v in vals), (params.field.q,) * len(subset)))


def audit_user_privacy(params: SchemeParams, subset=None, mode: str = "algebraic", n_samples: int = 10000, seed: int = 0, leak_selector: bool = False) -> AuditReport:
    """Colluding servers ``subset`` learn nothing about the file index.

    ``algebraic``: every |T|-column restriction of ``G_D'`` has full rank, so
    ``Z G_D`` restricted to T is uniform and masks the selector exactly.
    ``empirical``: histograms of a fixed projection of ``Q_T`` for files 1
    and 2 must be within total-variation ``4 sqrt(bins / N)``.
    """
    if mode not in ("algebraic", "empirical", "both"):
        raise AuditError(f"unknown privacy audit mode {mode!r}")
    n, t = params.n, params.t
    if subset is not None:
        subset = sorted({int(s) for s in subset})
        if len(subset) > t:
            raise AuditError(f"|T|={len(subset)} exceeds t={t}: no privacy is promised against more than t servers")
        if not subset or subset[0] < 1 or subset[-1] > n:
            raise AuditError(f"subset {subset} is not a nonempty subset of [1, {n}]")
    rep = AuditReport("user-privacy", _tag(params))
    if mode in ("algebraic", "both"):
        g = params.query_code.generator_matrix()
        subsets = [subset] if subset is not None else [list(c) for c in itertools.combinations(range(1, n + 1), t)]
        ranks = {",".join(map(str, T)): linalg.rank(params.field, g[:, [s - 1 for s in T]]) for T in subsets}
        rep.evidence["ranks"] = ranks
        rep.add(f"every one of {len(subsets)} column subsets of G_D' has full rank", all(r == len(T.split(",")) for T, r in ranks.items()))
    if mode in ("empirical", "both"):
        p = params if params.m >= 2 else params.with_files(2)
        T = subset if subset is not None else list(range(1, t + 1))
        bins = p.field.q ** len(T)
        rng = np.random.default_rng(seed)
        hists = []
        for iota in (1, 2):
            h = np.zeros(bins)
            for _ in range(n_samples):
                h[projected_query_sample(p, T, iota, rng, z_zero=leak_selector)] += 1
            hists.append(h / n_samples)
        tv = total_variation(*hists)
        threshold = 4 * math.sqrt(bins / n_samples)
        rep.evidence.update({"subset": T, "bins": bins, "samples": n_samples, "tv": tv, "threshold": threshold})
        rep.add(f"TV distance {tv:.4f} below {threshold:.4f} for files 1 and 2", tv < threshold)
    return rep


def uniformity_exhaustive(params: SchemeParams, subset, iota: int = 1, block: int = 0) -> dict:
    """Exact distribution of one query row over all Z, restricted to ``subset``.

    Enumerates every Z row (q^{2t} choices) for query row ``block``; returns
    bin -> count.  Uniform iff every one of q^{2|T|} bins has the same count.
    """
    f = params.field
    geo = params.geometry(1)
    e_m = f.matmul(protocol.selector(params, geo, iota), geo.M)[block]
    cols = [s - 1 for s in subset] + [params.n + s - 1 for s in subset]
    z_rows = np.indices((f.q,) * (2 * params.t)).reshape(2 * params.t, -1).T.astype(np.uint8)
    q = f.matmul(z_rows, params.g_query) ^ e_m
    counts: dict[tuple, int] = {}
    for row in q[:, cols]:
        key = tuple(int(v) for v in row)
        counts[key] = counts.get(key, 0) + 1
    return counts


# --- secrecy --------------------------------------------------------------


def _corrupt_labels(params: SchemeParams, geo, b) -> np.ndarray:
    # reads the targeted responses directly, as if the complement were the standard basis
    n = params.n
    cols = [a - 1 for a in geo.J_r]
    return np.concatenate([b[cols], b[[n + c for c in cols]]])


def audit_server_secrecy(params: SchemeParams, trials: int = 100, seed: int = 0, iota: int = 1, corrupt_basis: bool = False) -> AuditReport:
    """Resample every file but ``iota``; the user's labels and output must not move."""
    rep = AuditReport("server-secrecy", _tag(params))
    rep.evidence["trials"] = trials
    if params.m == 1:
        rep.evidence["note"] = "single file: nothing to resample"
        rep.add("vacuous with one file", True)
        return rep
    f = params.field
    base_rng = np.random.default_rng(seed)
    x = protocol.random_files(params, base_rng)
    target_rows = slice((iota - 1) * params.beta, iota * params.beta)
    seen_labels, seen_out = set(), set()
    for trial in range(trials):
        xt = protocol.random_files(params, np.random.default_rng([seed, trial + 1]))
        xt[target_rows] = x[target_rows]
        storage = protocol.encode_storage(xt, params)
        qrng = np.random.default_rng([seed, 0])
        labels = []
        for r in range(1, params.rho + 1):
            geo = params.geometry(r)
            bundle = protocol.build_queries(params, geo, iota, qrng)
            b = protocol.all_responses(params, storage, bundle)
            labels.append(_corrupt_labels(params, geo, b) if corrupt_basis else protocol.decode_fast(geo, b))
        seen_labels.add(b"".join(lab.tobytes() for lab in labels))
        try:
            seen_out.add(protocol.assemble(params, labels).tobytes())
        except AssertionError:
            seen_out.add(b"undecodable%d" % trial)
    rep.evidence.update({"distinct_labels": len(seen_labels), "distinct_outputs": len(seen_out), "field": f.to_json()})
    rep.add(f"coset labels identical across {trials} resamples", len(seen_labels) == 1)
    rep.add(f"decoded output identical across {trials} resamples", len(seen_out) == 1)
    return rep


# --- codes ----------------------------------------------------------------


def verify_codes(params: SchemeParams, inject_star: GrsCode | None = None) -> AuditReport:
    """Construction checks on C', D', S' and the stabilizer generator G_S.

    ``inject_star`` replaces S' (and the G_S built from it) by another code,
    used as a negative control.
    """
    f = params.field
    rep = AuditReport("verify-codes", _tag(params))
    star = params.star_code if inject_star is None else inject_star
    g_star = star.generator_matrix()
    h = codes.parity_check(star)
    fc = complete_basis(f, h, g_star)
    g_s = np.concatenate([linalg.block_diag(h, h), linalg.block_diag(fc, fc)])
    h_s = g_s[: 2 * h.shape[0]]
    n, kt = params.n, params.k + params.t - 1

    rep.add("H_S' H_S'^T = 0", not f.matmul(h, h.T).any())
    rep.add("rowspace(H_S') inside rowspace(G_S')", linalg.in_rowspace(f, g_star, h))
    rep.add("S' weakly self-dual", codes.is_weakly_self_dual(f, g_star))
    span = codes.star_span(f, params.storage_code.generator_matrix(), params.query_code.generator_matrix())
    rep.add(f"dim S' = k+t-1 = {kt}", star.dim == kt and linalg.rank(f, g_star) == kt)
    rep.add("S' equals the span of C' * D' products", linalg.same_rowspace(f, span, g_star))
    indep = all(
        linalg.rank(f, g_s[:, list(P) + [n + p for p in P]]) == 2 * kt for P in itertools.combinations(range(n), kt)
    )
    rep.add("columns P and P+n of G_S independent for every (k+t-1)-subset P", indep)
    rep.add("V symplectically orthogonal to the star space: H_S J^T G_S^T = 0", not f.matmul(f.matmul(h_s, symplectic_matrix(n)), g_s.T).any())
    for name, code in (("C'", params.storage_code), ("D'", params.query_code), ("S'", star)):
        rep.add(f"{name} is MDS", codes.is_mds(code))
    rep.evidence.update({"H": linalg.matrix_to_hex(h), "star": star.to_json()})
    return rep


def non_weakly_self_dual_star(params: SchemeParams) -> GrsCode:
    """A GRS code on the same locators and dimension whose dual is not inside it."""
    f = params.field
    star = params.star_code
    for delta in range(2, f.q):
        mult = (int(f.mul_table[star.multipliers[0], delta]),) + star.multipliers[1:]
        cand = GrsCode(f, star.locators, mult, star.dim)
        if not codes.is_weakly_self_dual(f, cand.generator_matrix()):
            return cand
    raise AuditError("could not perturb S' away from weak self-duality")


# --- capacities -------------------------------------------------------------


def _clip(x: Fraction) -> Fraction:
    return min(Fraction(1), x)


@dataclass(frozen=True)
class CapacityRow:
    n: int
    k: int
    t: int
    pir_replicated: Fraction
    pir_replicated_t: Fraction
    pir_mds: Fraction
    pir_mds_t: Fraction
    qpir_replicated: Fraction
    qpir_replicated_t: Fraction
    qpir_mds: Fraction
    qpir_mds_t: Fraction
    colluding_closed_form: Fraction
    non_colluding_closed_form: Fraction
    achieved: Fraction | None
    effective: tuple[int, int] | None

    @property
    def achieves(self) -> bool:
        return self.achieved is not None and self.achieved == self.qpir_mds_t


def capacity_row(n: int, k: int, t: int, measure: bool = True) -> CapacityRow:
    if not (1 <= k <= n and 1 <= t < n and k + t <= n):
        raise AuditError(f"(n,k,t)=({n},{k},{t}) outside 1 <= k, 1 <= t, k+t <= n")
    F = Fraction
    kt = k + t - 1
    cor1 = F(1) if 2 * kt <= n else 2 * (1 - F(kt, n))
    cor2 = F(1) if 2 * k <= n else 2 * (1 - F(k, n))
    achieved = effective = None
    if measure:
        n_eff, t_eff = protocol.pad_collusion(n, k, t)
        p = protocol.derive_params(n_eff, k, t_eff, 1, field_for_length(n))
        achieved = protocol.scheme_rate(p)
        effective = (n_eff, t_eff)
    return CapacityRow(
        n, k, t,
        pir_replicated=1 - F(1, n),
        pir_replicated_t=1 - F(t, n),
        pir_mds=1 - F(k, n),
        pir_mds_t=1 - F(kt, n),
        qpir_replicated=F(1),
        qpir_replicated_t=_clip(F(2 * (n - t), n)),
        qpir_mds=_clip(F(2 * (n - k), n)),
        qpir_mds_t=_clip(F(2 * (n - k - t + 1), n)),
        colluding_closed_form=cor1,
        non_colluding_closed_form=cor2,
        achieved=achieved,
        effective=effective,
    )


def capacity_table(grid, measure: bool = True) -> list[CapacityRow]:
    grid = list(grid)
    if not grid:
        raise AuditError("empty (n,k,t) grid")
    return [capacity_row(n, k, t, measure) for n, k, t in grid]


def default_grid(size: int = 20, n_max: int = 8) -> list[tuple[int, int, int]]:
    pts = [(n, k, t) for n in range(2, n_max + 1) for k in range(1, n) for t in range(1, n - k + 1)]
    step = max(1, len(pts) // size)
    return pts[::step][:size]


def format_capacity_table(rows: list[CapacityRow]) -> str:
    cols = [
        ("n,k,t", lambda r: f"{r.n},{r.k},{r.t}"),
        ("PIR rep", lambda r: str(r.pir_replicated)),
        ("PIR rep,t", lambda r: str(r.pir_replicated_t)),
        ("PIR mds", lambda r: str(r.pir_mds)),
        ("PIR mds,t", lambda r: str(r.pir_mds_t)),
        ("QPIR rep", lambda r: str(r.qpir_replicated)),
        ("QPIR rep,t", lambda r: str(r.qpir_replicated_t)),
        ("QPIR mds", lambda r: str(r.qpir_mds)),
        ("QPIR mds,t", lambda r: str(r.qpir_mds_t)),
        ("colluding", lambda r: str(r.colluding_closed_form)),
        ("t=1", lambda r: str(r.non_colluding_closed_form)),
        ("measured", lambda r: "-" if r.achieved is None else str(r.achieved)),
        ("n',t'", lambda r: "-" if r.effective is None else f"{r.effective[0]},{r.effective[1]}"),
        ("achieved", lambda r: "yes" if r.achieves else "no"),
    ]
    cells = [[h for h, _ in cols]] + [[fn(r) for _, fn in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells)


def audit_capacity_table(rows: list[CapacityRow]) -> AuditReport:
    """Cross-checks between the table's formulas and the measured rates."""
    rep = AuditReport("rate-table", {"points": len(rows)})
    F = Fraction
    for r in rows:
        tag = f"({r.n},{r.k},{r.t})"
        rep.add(f"{tag} quantum MDS,t equals the colluding closed form", r.qpir_mds_t == r.colluding_closed_form)
        rep.add(f"{tag} quantum is twice classical, clipped at 1", r.qpir_mds_t == _clip(2 * r.pir_mds_t))
        if r.t == 1:
            rep.add(f"{tag} t=1 reduces to the MDS no-collusion entry", r.qpir_mds_t == r.qpir_mds == r.non_colluding_closed_form)
        if r.k == 1:
            rep.add(f"{tag} k=1 reduces to the replicated t-collusion entry", r.qpir_mds_t == r.qpir_replicated_t)
        if r.k == 1 and r.t == 1:
            rep.add(f"{tag} k=t=1 reduces to the replicated entry", r.qpir_mds_t == r.qpir_replicated == F(1))
        if r.achieved is not None:
            rep.add(f"{tag} measured rate {r.achieved} equals min(1, 2(n-k-t+1)/n)", r.achieves)
            rep.add(f"{tag} measured rate within the converse bound", r.achieved <= r.qpir_mds_t)
    return rep
