"""Star-product QPIR over MDS-coded storage with t-colluding servers.

Storage: ``m`` files of ``beta x 2k`` symbols stacked into ``X`` and encoded as
``Y = X diag(G_C', G_C')``; server ``s`` keeps columns ``s`` and ``n + s``.

A round sends ``Q = Z G_D + E M``.  Each server answers with two dot
products, which select the Weyl operator ``X(B_1) Z(B_2)`` on its share of
the entangled state.  The summed response lies in ``S x S + o M``, so the
syndrome measurement reveals ``o``: two symbols of ``Y^iota`` per targeted
server.  After ``rho`` rounds each stripe has ``k`` known positions per half
and is erasure-decoded.

Indices in round geometry (``J``, ``J_r^b``) are 1-based; arrays are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import codes, linalg, qoracle
from .codes import GrsCode
from .gf import FieldSpec, field_for_length
from .stabilizer import CosetLabel, StabilizerSpace, build_stabilizer_space, complete_basis

BACKENDS = ("fast", "oracle", "both")


class ParameterError(ValueError):
    pass


class CertificationError(RuntimeError):
    """The fast and oracle backends disagree, or a protocol invariant failed."""


@dataclass(frozen=True, eq=False)
class SchemeParams:
    n: int
    k: int
    t: int
    m: int
    field: FieldSpec
    storage_code: GrsCode
    query_code: GrsCode
    star_code: GrsCode
    h_star: np.ndarray
    f_star: np.ndarray

    @property
    def c(self) -> int:
        return self.n - self.k - self.t + 1

    @property
    def beta(self) -> int:
        return math.lcm(self.c, self.k) // self.k

    @property
    def rho(self) -> int:
        return math.lcm(self.c, self.k) // self.c

    @property
    def rows(self) -> int:
        """Rows of the storage matrix, ``m * beta``."""
        return self.m * self.beta

    @cached_property
    def g_storage(self) -> np.ndarray:
        g = self.storage_code.generator_matrix()
        return linalg.block_diag(g, g)

    @cached_property
    def g_query(self) -> np.ndarray:
        g = self.query_code.generator_matrix()
        return linalg.block_diag(g, g)

    @cached_property
    def g_star(self) -> np.ndarray:
        """``G_S = (diag(H, H); diag(F, F))``."""
        return np.concatenate([linalg.block_diag(self.h_star, self.h_star), linalg.block_diag(self.f_star, self.f_star)])

    @cached_property
    def star_checks(self) -> np.ndarray:
        """Rows whose kernel is exactly ``rowspace(G_S)``."""
        return linalg.nullspace(self.field, self.g_star)

    def geometry(self, r: int) -> "RoundGeometry":
        return self._geometries[r - 1] if 1 <= r <= self.rho else round_geometry(self, r)

    @cached_property
    def _geometries(self) -> list["RoundGeometry"]:
        return [round_geometry(self, r) for r in range(1, self.rho + 1)]

    def with_files(self, m: int) -> "SchemeParams":
        return SchemeParams(self.n, self.k, self.t, m, self.field, self.storage_code, self.query_code, self.star_code, self.h_star, self.f_star)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "t": self.t,
            "m": self.m,
            "field": self.field.to_json(),
            "c": self.c,
            "beta": self.beta,
            "rho": self.rho,
            "storage_code": self.storage_code.to_json(),
            "query_code": self.query_code.to_json(),
            "star_code": self.star_code.to_json(),
        }


def check_collusion(n: int, k: int, t: int) -> None:
    if min(n, k, t) < 1:
        raise ParameterError("n, k, t must be positive")
    if not k + t - 1 < n:
        raise ParameterError(f"k+t-1 < n violated: {k}+{t}-1 = {k + t - 1} >= {n}")
    if not 2 * (k + t - 1) >= n:
        raise ParameterError(f"n/2 <= k+t-1 violated: {k}+{t}-1 = {k + t - 1} < {n}/2 (see pad_collusion)")


def derive_params(n: int, k: int, t: int, m: int = 1, field: FieldSpec | None = None, storage_multipliers=None) -> SchemeParams:
    """All codes and derived quantities for ``(n, k, t, m)`` over ``field``.

    The storage code uses the first ``n`` canonical locators and, unless
    given, all-ones multipliers.
    """
    check_collusion(n, k, t)
    if m < 1:
        raise ParameterError("need at least one file")
    field = field_for_length(n) if field is None else field
    if field.q < n:
        raise ParameterError(f"field too small: q={field.q} < n={n}")
    locators = codes.default_locators(field, n)
    mult = (1,) * n if storage_multipliers is None else tuple(storage_multipliers)
    storage = GrsCode(field, locators, mult, k)
    query = codes.query_code_for(storage, t)
    star = codes.star_product(storage, query)
    g_star = star.generator_matrix()
    if not codes.is_weakly_self_dual(field, g_star):
        raise CertificationError("star-product code is not weakly self-dual")
    h = codes.parity_check(star)
    f = complete_basis(field, h, g_star)
    params = SchemeParams(n, k, t, m, field, storage, query, star, h, f)
    c = params.c
    if c != (n - star.dim + 1) - 1:
        raise CertificationError("c != d_S' - 1")
    if h.shape[0] != c or f.shape[0] != 2 * (k + t - 1) - n:
        raise CertificationError("unexpected H/F split of the star-product generator")
    if 2 * params.rho * c != 2 * params.beta * k:
        raise CertificationError("2 rho c != 2 beta k")
    return params


def pad_collusion(n: int, k: int, t: int) -> tuple[int, int]:
    """Raise ``t`` (and drop a server when ``n`` is odd) until ``k+t-1 = n/2``."""
    if 2 * (k + t - 1) >= n:
        return n, t
    if n % 2 == 0:
        n_eff, t_eff = n, n // 2 - k + 1
    else:
        n_eff, t_eff = n - 1, (n + 1) // 2 - k
    if t_eff < 1:
        raise ParameterError(f"padding gives t'={t_eff} < 1")
    assert t_eff >= t and 2 * (k + t_eff - 1) == n_eff
    return n_eff, t_eff


def padded_params(n: int, k: int, t: int, m: int = 1, field: FieldSpec | None = None) -> SchemeParams:
    n_eff, t_eff = pad_collusion(n, k, t)
    return derive_params(n_eff, k, t_eff, m, field if field is not None else field_for_length(n))


@dataclass(frozen=True)
class StorageMatrix:
    x: np.ndarray
    y: np.ndarray

    def server_columns(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        """``(Y_{1,s}, Y_{2,s})`` for 1-based server ``s``."""
        n = self.y.shape[1] // 2
        return self.y[:, s - 1], self.y[:, n + s - 1]

    def file(self, params: SchemeParams, i: int) -> np.ndarray:
        b = params.beta
        return self.x[(i - 1) * b : i * b]


def random_files(params: SchemeParams, rng: np.random.Generator) -> np.ndarray:
    return params.field.random((params.rows, 2 * params.k), rng)


def encode_storage(x, params: SchemeParams) -> StorageMatrix:
    x = np.asarray(x, dtype=np.uint8)
    if x.shape != (params.rows, 2 * params.k):
        raise ValueError(f"file matrix must be {params.rows} x {2 * params.k}, got {x.shape}")
    return StorageMatrix(x, params.field.matmul(x, params.g_storage))


@dataclass(frozen=True, eq=False)
class RoundGeometry:
    r: int
    J: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]  # blocks[b-1] = J_r^b, ascending
    targets: tuple[tuple[int, int], ...]  # (b, a) in outcome order
    N: np.ndarray
    M: np.ndarray
    space: StabilizerSpace

    @property
    def J_r(self) -> tuple[int, ...]:
        return tuple(a for _, a in self.targets)


def targeted_blocks(c: int, k: int, beta: int, r: int) -> list[list[int]]:
    """``J_r^b`` for ``b = 1..beta`` (1-based positions)."""
    width = c // beta
    size = max(c, k)
    blocks = [[i + (b - 1) * width for i in range(1, width + 1)] for b in range(1, beta + 1)]
    for _ in range(r - 1):
        blocks = [[(j + width - 1) % size + 1 for j in blk] for blk in blocks]
    return [sorted(blk) for blk in blocks]


def round_geometry(params: SchemeParams, r: int) -> RoundGeometry:
    if not 1 <= r <= params.rho:
        raise ValueError(f"round {r} outside [1, {params.rho}]")
    n, c = params.n, params.c
    blocks = targeted_blocks(c, params.k, params.beta, r)
    targets = tuple((b, a) for b, blk in enumerate(blocks, start=1) for a in blk)
    if len({a for _, a in targets}) != c:
        raise CertificationError(f"round {r} targets {targets} are not {c} distinct positions")
    N = np.zeros((c, n), dtype=np.uint8)
    for row, (_, a) in enumerate(targets):
        N[row, a - 1] = 1
    M = linalg.block_diag(N, N)
    space = build_stabilizer_space(params.field, params.h_star, M, params.f_star)
    return RoundGeometry(r, tuple(range(1, max(c, params.k) + 1)), tuple(tuple(b) for b in blocks), targets, N, M, space)


@dataclass(frozen=True, eq=False)
class QueryBundle:
    z: np.ndarray
    e: np.ndarray
    q: np.ndarray

    def server_slice(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        n = self.q.shape[1] // 2
        return self.q[:, s - 1], self.q[:, n + s - 1]


def selector(params: SchemeParams, geometry: RoundGeometry, iota: int) -> np.ndarray:
    """``E_(iota)``: column (p, a) picks row (iota, b) for the stripe b that targets a."""
    if not 1 <= iota <= params.m:
        raise ValueError(f"file index {iota} outside [1, {params.m}]")
    c = params.c
    e = np.zeros((params.rows, 2 * c), dtype=np.uint8)
    for col, (b, _) in enumerate(geometry.targets):
        row = (iota - 1) * params.beta + (b - 1)
        e[row, col] = 1
        e[row, c + col] = 1
    return e


def build_queries(params: SchemeParams, geometry: RoundGeometry, iota: int, rng: np.random.Generator, z=None) -> QueryBundle:
    """``Q = Z G_D + E M`` with uniform ``Z`` (or the one supplied)."""
    f = params.field
    e = selector(params, geometry, iota)
    if z is None:
        z = f.random((params.rows, 2 * params.t), rng)
    z = np.asarray(z, dtype=np.uint8)
    q = f.matmul(z, params.g_query) ^ f.matmul(e, geometry.M)
    return QueryBundle(z, e, q)


def server_respond(field: FieldSpec, y_pair, q_pair) -> tuple[int, int]:
    y1, y2 = (np.asarray(v, dtype=np.uint8) for v in y_pair)
    q1, q2 = (np.asarray(v, dtype=np.uint8) for v in q_pair)
    if y1.shape != q1.shape or y2.shape != q2.shape:
        raise ValueError("stored column and query column lengths differ")
    return field.dot(y1, q1), field.dot(y2, q2)


def all_responses(params: SchemeParams, storage: StorageMatrix, queries: QueryBundle) -> np.ndarray:
    """Response vector ``(B_1 | B_2)`` of length 2n, one pair per server."""
    # column-wise dot products == server_respond for every server at once
    prods = params.field.mul(storage.y, queries.q)
    return np.bitwise_xor.reduce(prods, axis=0).astype(np.uint8)


def targeted_symbols(params: SchemeParams, geometry: RoundGeometry, storage: StorageMatrix, iota: int) -> np.ndarray:
    """``(Y^{iota,b}_{1,a} | Y^{iota,b}_{2,a})`` in outcome order."""
    n = params.n
    rows = [(iota - 1) * params.beta + b - 1 for b, _ in geometry.targets]
    cols = [a - 1 for _, a in geometry.targets]
    y = storage.y
    return np.concatenate([y[rows, cols], y[rows, [n + c for c in cols]]]).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class RoundResult:
    r: int
    queries: QueryBundle
    responses: np.ndarray
    outcome: np.ndarray
    probability: float = 1.0


def decode_fast(geometry: RoundGeometry, responses) -> np.ndarray:
    """Coset label of ``W(B)|0>``."""
    return geometry.space.reduce(responses)


def decode_oracle(params: SchemeParams, geometry: RoundGeometry, responses, limit: int = qoracle.DEFAULT_LIMIT) -> tuple[np.ndarray, float]:
    rho0 = qoracle.initial_state(geometry.space, limit)
    w = qoracle.weyl_matrix(params.field, responses, limit)
    label, prob = qoracle.measure_pvm(qoracle.conjugate(rho0, w), geometry.space)
    return label.array(), prob


def run_round(params: SchemeParams, geometry: RoundGeometry, storage: StorageMatrix, iota: int, rng: np.random.Generator, backend: str = "fast", z=None, verify: bool = True) -> RoundResult:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    queries = build_queries(params, geometry, iota, rng, z)
    b = all_responses(params, storage, queries)
    if verify:
        # B - (targeted symbols) M must be a codeword of S x S
        residual = b ^ params.field.matmul(targeted_symbols(params, geometry, storage, iota), geometry.M)
        if params.field.matmul(params.star_checks, residual).any():
            raise CertificationError(f"round {geometry.r}: response is not in S + o M")
    prob = 1.0
    if backend in ("fast", "both"):
        outcome = decode_fast(geometry, b)
    if backend in ("oracle", "both"):
        o_oracle, prob = decode_oracle(params, geometry, b)
        if abs(prob - 1) > qoracle.ALGEBRA_TOL:
            raise CertificationError(f"round {geometry.r}: PVM outcome has probability {prob}, not 1")
        if backend == "both" and not np.array_equal(outcome, o_oracle):
            raise CertificationError(f"round {geometry.r}: fast {outcome} != oracle {o_oracle}")
        outcome = o_oracle
    return RoundResult(geometry.r, queries, b, np.asarray(outcome, dtype=np.uint8), prob)


@dataclass(frozen=True, eq=False)
class RetrievalResult:
    iota: int
    decoded: np.ndarray
    rounds: list[RoundResult] = dc_field(default_factory=list)


def assemble(params: SchemeParams, outcomes: list[np.ndarray]) -> np.ndarray:
    """Erasure-decode ``beta x 2k`` file blocks from per-round outcomes."""
    c, k = params.c, params.k
    known: list[dict[int, tuple[int, int]]] = [dict() for _ in range(params.beta)]
    for r, o in enumerate(outcomes, start=1):
        geo = params.geometry(r)
        for col, (b, a) in enumerate(geo.targets):
            known[b - 1][a] = (int(o[col]), int(o[c + col]))
    out = np.zeros((params.beta, 2 * k), dtype=np.uint8)
    for b, symbols in enumerate(known):
        if len(symbols) != k:
            raise CertificationError(f"stripe {b + 1} has {len(symbols)} known positions, need {k}")
        pos = sorted(symbols)
        cols = [a - 1 for a in pos]
        for p in range(2):
            vals = [symbols[a][p] for a in pos]
            out[b, p * k : (p + 1) * k] = codes.mds_erasure_decode(params.storage_code, cols, vals)
    return out


def run_retrieval(params: SchemeParams, storage: StorageMatrix, iota: int, rng: np.random.Generator, backend: str = "fast", verify: bool = True) -> RetrievalResult:
    rounds = [run_round(params, params.geometry(r), storage, iota, rng, backend, verify=verify) for r in range(1, params.rho + 1)]
    return RetrievalResult(iota, assemble(params, [rr.outcome for rr in rounds]), rounds)


def classical_star_pir_round(params: SchemeParams, geometry: RoundGeometry, storage: StorageMatrix, iota: int, rng: np.random.Generator, z=None) -> RoundResult:
    """Same queries and answers; the user solves ``B = x G_S + o M`` directly."""
    queries = build_queries(params, geometry, iota, rng, z)
    b = all_responses(params, storage, queries)
    return RoundResult(geometry.r, queries, b, classical_decode(params, geometry, b))


def classical_decode(params: SchemeParams, geometry: RoundGeometry, responses) -> np.ndarray:
    stacked = np.concatenate([params.g_star, geometry.M])
    coords = linalg.solve_left(params.field, stacked, responses)
    return coords[params.g_star.shape[0] :]


def recovery_functionals(params: SchemeParams, geometry: RoundGeometry) -> np.ndarray:
    """``2n x 2c`` matrix R with ``o = B R``; column j recovers outcome symbol j."""
    stacked = np.concatenate([params.g_star, geometry.M])
    return linalg.inverse(params.field, stacked)[:, params.g_star.shape[0] :]


def scheme_rate(params: SchemeParams) -> Fraction:
    """Retrieved symbols per downloaded q-dimensional system, ``2 beta k / (rho n)``."""
    return Fraction(2 * params.beta * params.k, params.rho * params.n)


def classical_rate(params: SchemeParams) -> Fraction:
    """Same scheme without the quantum layer: 2n symbols downloaded per round."""
    return Fraction(2 * params.beta * params.k, params.rho * 2 * params.n)


def capacity_bound(n: int, k: int, t: int) -> Fraction:
    """``min{1, 2(n-k-t+1)/n}``."""
    return min(Fraction(1), Fraction(2 * (n - k - t + 1), n))


def label_of(values) -> CosetLabel:
    return CosetLabel.of(values)
