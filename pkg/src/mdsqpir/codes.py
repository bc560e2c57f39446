"""Generalized Reed-Solomon codes over GF(2^r) and the constructions built on them.

A GRS code is fixed by its locators (distinct evaluation points), its column
multipliers (nonzero scalings) and its dimension ``k``; codewords are
``(v_1 f(a_1), ..., v_n f(a_n))`` for polynomials ``f`` of degree < k.

Generator matrices are kept in evaluation (Vandermonde) form.  Parity-check
matrices are returned row-reduced.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .gf import FieldSpec


class CodeError(ValueError):
    """Invalid code parameters or a construction precondition that fails."""


class DegenerateCodeError(CodeError):
    pass


@dataclass(frozen=True)
class GrsCode:
    field: FieldSpec
    locators: tuple[int, ...]
    multipliers: tuple[int, ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "locators", tuple(int(x) for x in self.locators))
        object.__setattr__(self, "multipliers", tuple(int(x) for x in self.multipliers))
        n = len(self.locators)
        if len(self.multipliers) != n:
            raise CodeError("need one multiplier per locator")
        if len(set(self.locators)) != n:
            raise CodeError("locators must be pairwise distinct")
        if any(m == 0 for m in self.multipliers):
            raise CodeError("column multipliers must be nonzero")
        if any(not 0 <= x < self.field.q for x in self.locators + self.multipliers):
            raise CodeError(f"entries outside {self.field!r}")
        if not 1 <= self.dim <= n <= self.field.q:
            raise CodeError(f"need 1 <= k <= n <= q, got k={self.dim}, n={n}, q={self.field.q}")

    @property
    def n(self) -> int:
        return len(self.locators)

    def generator_matrix(self) -> np.ndarray:
        return grs_generator(self)

    def encode(self, messages) -> np.ndarray:
        return self.field.matmul(messages, grs_generator(self))

    def to_json(self) -> dict:
        return {
            "field": self.field.to_json(),
            "locators": linalg.vector_to_hex(self.locators),
            "multipliers": linalg.vector_to_hex(self.multipliers),
            "dim": self.dim,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GrsCode":
        field = FieldSpec.from_json(data["field"])
        return cls(
            field,
            tuple(int(v, 16) for v in data["locators"]),
            tuple(int(v, 16) for v in data["multipliers"]),
            int(data["dim"]),
        )


@dataclass(frozen=True)
class CartesianSquareCode:
    """``base x base``: length 2n, dimension 2k, generator diag(G, G)."""

    base: GrsCode

    @property
    def field(self) -> FieldSpec:
        return self.base.field

    @property
    def n(self) -> int:
        return 2 * self.base.n

    @property
    def dim(self) -> int:
        return 2 * self.base.dim

    def generator_matrix(self) -> np.ndarray:
        g = grs_generator(self.base)
        return linalg.block_diag(g, g)


def default_locators(field: FieldSpec, n: int) -> tuple[int, ...]:
    """First ``n`` elements of the canonical enumeration 0, 1, alpha, ..."""
    if n > field.q:
        raise CodeError(f"{field!r} has only {field.q} locators, {n} requested")
    return tuple(range(n))


def grs_generator(code: GrsCode) -> np.ndarray:
    f = code.field
    loc = np.array(code.locators, dtype=np.uint8)
    rows = np.empty((code.dim, code.n), dtype=np.uint8)
    power = np.ones(code.n, dtype=np.uint8)  # 0^0 = 1
    for i in range(code.dim):
        rows[i] = f.mul(power, np.array(code.multipliers, dtype=np.uint8))
        power = f.mul(power, loc)
    return rows


def locator_products(field: FieldSpec, locators) -> np.ndarray:
    """``u_j = prod_{i != j} (a_j - a_i)`` for each locator."""
    u = []
    for j, aj in enumerate(locators):
        p = 1
        for i, ai in enumerate(locators):
            if i != j:
                p = int(field.mul_table[p, aj ^ ai])
        u.append(p)
    return np.array(u, dtype=np.uint8)


def grs_dual(code: GrsCode) -> GrsCode:
    if code.dim == code.n:
        raise DegenerateCodeError("the dual of the full space is {0}")
    f = code.field
    u = locator_products(f, code.locators)
    mult = f.inv(f.mul(np.array(code.multipliers, dtype=np.uint8), u))
    return GrsCode(f, code.locators, tuple(mult), code.n - code.dim)


def star_product(c1: GrsCode, c2: GrsCode) -> GrsCode:
    """Star (Schur) product of two GRS codes on the same locators."""
    if c1.field != c2.field:
        raise CodeError("codes live over different fields")
    if c1.locators != c2.locators:
        raise CodeError("star product needs identical locators")
    dim = c1.dim + c2.dim - 1
    if dim > c1.n:
        raise CodeError(f"star dimension {c1.dim}+{c2.dim}-1 = {dim} exceeds length {c1.n}")
    f = c1.field
    mult = f.mul(np.array(c1.multipliers, dtype=np.uint8), np.array(c2.multipliers, dtype=np.uint8))
    return GrsCode(f, c1.locators, tuple(mult), dim)


def star_span(field: FieldSpec, g1, g2) -> np.ndarray:
    """Row basis of the span of all pairwise products of rows of g1 and g2."""
    g1 = np.atleast_2d(g1)
    g2 = np.atleast_2d(g2)
    prods = field.mul(g1[:, None, :], g2[None, :, :]).reshape(-1, g1.shape[1])
    return linalg.row_basis(field, prods)


def self_dual_grs(field: FieldSpec, locators) -> GrsCode:
    """[2k, k] self-dual GRS code with multipliers sqrt(1/u_j)."""
    locators = tuple(int(x) for x in locators)
    if len(set(locators)) != len(locators):
        raise CodeError("repeated locators")
    if len(locators) % 2:
        raise CodeError("a self-dual GRS code needs an even length")
    if len(locators) > field.q:
        raise CodeError("more locators than field elements")
    u = locator_products(field, locators)
    mult = field.sqrt(field.inv(u))
    return GrsCode(field, locators, tuple(mult), len(locators) // 2)


def weakly_self_dual_grs(field: FieldSpec, n: int, k: int, locators=None) -> GrsCode:
    """[n, k] GRS code containing its dual (requires k >= n/2)."""
    locators = default_locators(field, n) if locators is None else tuple(int(x) for x in locators)
    if len(locators) != n:
        raise CodeError(f"expected {n} locators, got {len(locators)}")
    if 2 * k < n:
        raise CodeError(f"k={k} < n/2: a [n,k] code cannot contain its dual")
    if k > n:
        raise CodeError("k > n")
    if n % 2 == 0:
        sd = self_dual_grs(field, locators)
        return GrsCode(field, locators, sd.multipliers, k)
    spare = [a for a in range(field.q) if a not in locators]
    if not spare:
        raise CodeError(f"odd n={n} needs a spare locator but all of {field!r} is used")
    extended = self_dual_grs(field, locators + (spare[0],))
    # puncture the spare position, then raise the dimension to k
    return GrsCode(field, locators, extended.multipliers[:n], k)


def query_code_for(storage: GrsCode, t: int) -> GrsCode:
    """[n, t] GRS code D with storage * D weakly self-dual of dimension k+t-1."""
    n, k = storage.n, storage.dim
    if not k + t - 1 < n:
        raise CodeError(f"need k+t-1 < n, got {k}+{t}-1 >= {n}")
    if not 2 * (k + t - 1) >= n:
        raise CodeError(f"need n/2 <= k+t-1, got {k}+{t}-1 < {n}/2")
    if t < 1:
        raise CodeError("t must be positive")
    f = storage.field
    star = weakly_self_dual_grs(f, n, k + t - 1, storage.locators)
    mult = f.mul(f.inv(np.array(storage.multipliers, dtype=np.uint8)), np.array(star.multipliers, dtype=np.uint8))
    return GrsCode(f, storage.locators, tuple(mult), t)


def parity_check(code: GrsCode | CartesianSquareCode) -> np.ndarray:
    """Row-reduced basis of the dual code."""
    return linalg.nullspace(code.field, code.generator_matrix())


def is_mds(code: GrsCode) -> bool:
    """Every k x k minor of the generator is nonsingular."""
    g = grs_generator(code)
    k = code.dim
    return all(linalg.rank(code.field, g[:, list(cols)]) == k for cols in itertools.combinations(range(code.n), k))


def is_weakly_self_dual(field: FieldSpec, g) -> bool:
    h = linalg.nullspace(field, g)
    if h.shape[0] == 0:
        return True
    return not field.matmul(h, h.T).any() and linalg.in_rowspace(field, g, h)


def mds_erasure_decode(code: GrsCode, positions, symbols) -> np.ndarray:
    """Message whose codeword agrees with ``symbols`` on ``positions``."""
    positions = list(positions)
    if len(positions) != code.dim or len(set(positions)) != code.dim:
        raise CodeError(f"need {code.dim} distinct positions, got {positions}")
    g = grs_generator(code)
    try:
        return linalg.solve_left(code.field, g[:, positions], np.asarray(symbols, dtype=np.uint8))
    except linalg.SingularMatrixError as exc:
        raise AssertionError(f"restriction to {positions} is singular; code is not MDS") from exc
