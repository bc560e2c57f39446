"""Arithmetic in binary extension fields GF(2^r).

Elements are integers in ``[0, q)`` read as coefficient vectors of a
polynomial basis (bit ``i`` is the coefficient of ``x^i``).  Every field
carries precomputed lookup tables so that whole numpy arrays of elements can
be multiplied, inverted and traced with fancy indexing; the scalar
:class:`FieldElement` wrapper sits on top of the same tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property, lru_cache

import numpy as np

# r -> modulus bitmask.  r=1 uses the degree-one polynomial x (so GF(2) = {0, 1}).
CANONICAL_MODULI = {
    1: 0b10,
    2: 0b111,  # x^2 + x + 1
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,  # x^5 + x^2 + 1
    6: 0b1000011,  # x^6 + x + 1
    7: 0b10000011,  # x^7 + x + 1
    8: 0b100011101,  # x^8 + x^4 + x^3 + x^2 + 1
}


class FieldMismatchError(TypeError):
    """Raised when elements of different fields are combined."""


def _poly_mod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a and a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def is_irreducible(modulus: int) -> bool:
    """Trial division by every polynomial of degree 1 .. deg(modulus) - 1."""
    deg = modulus.bit_length() - 1
    if deg < 1:
        return False
    for d in range(2, 1 << deg):
        if _poly_mod(modulus, d) == 0:
            return False
    return True


def _clmul_mod(a: int, b: int, modulus: int, r: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> r & 1:
            a ^= modulus
    return out


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^r) defined by an irreducible ``modulus`` of degree ``r``."""

    r: int
    modulus: int = dc_field(default=0)

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("extension degree must be >= 1")
        if self.modulus == 0:
            if self.r not in CANONICAL_MODULI:
                raise ValueError(f"no canonical modulus for r={self.r}; pass one explicitly")
            object.__setattr__(self, "modulus", CANONICAL_MODULI[self.r])
        if self.modulus.bit_length() - 1 != self.r:
            raise ValueError(f"modulus {self.modulus:#b} does not have degree {self.r}")
        if not is_irreducible(self.modulus):
            raise ValueError(f"modulus {self.modulus:#b} is reducible over F_2")
        if self.r > 8:
            raise ValueError("table-driven arithmetic supports r <= 8")

    @property
    def q(self) -> int:
        return 1 << self.r

    # -- lookup tables -----------------------------------------------------
    @cached_property
    def mul_table(self) -> np.ndarray:
        q = self.q
        t = np.zeros((q, q), dtype=np.uint8)
        for a in range(q):
            for b in range(a, q):
                t[a, b] = t[b, a] = _clmul_mod(a, b, self.modulus, self.r)
        t.setflags(write=False)
        return t

    @cached_property
    def inv_table(self) -> np.ndarray:
        inv = np.zeros(self.q, dtype=np.uint8)
        rows, cols = np.nonzero(self.mul_table == 1)
        inv[rows] = cols
        inv.setflags(write=False)
        return inv

    @cached_property
    def trace_table(self) -> np.ndarray:
        tr = np.zeros(self.q, dtype=np.uint8)
        sq = np.arange(self.q, dtype=np.uint8)
        elems = sq.copy()
        for _ in range(self.r):
            tr ^= elems
            elems = self.mul_table[elems, elems]
        if np.any(tr > 1):
            raise AssertionError("trace left the prime field")
        tr.setflags(write=False)
        return tr

    @cached_property
    def sqrt_table(self) -> np.ndarray:
        sq = self.mul_table[np.arange(self.q), np.arange(self.q)]
        root = np.zeros(self.q, dtype=np.uint8)
        root[sq] = np.arange(self.q, dtype=np.uint8)
        root.setflags(write=False)
        return root

    # -- vectorised arithmetic on uint8 arrays -----------------------------
    def asarray(self, values) -> np.ndarray:
        arr = np.asarray(values)
        if arr.size and (arr.min() < 0 or arr.max() >= self.q):
            raise ValueError(f"entries outside GF({self.q})")
        return arr.astype(np.uint8)

    def mul(self, a, b) -> np.ndarray:
        return self.mul_table[a, b]

    def inv(self, a) -> np.ndarray:
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in GF(2^r)")
        return self.inv_table[a]

    def trace(self, a) -> np.ndarray:
        return self.trace_table[a]

    def sqrt(self, a) -> np.ndarray:
        return self.sqrt_table[a]

    def dot(self, a, b) -> int:
        """Bilinear sum ``sum_i a_i b_i`` of two vectors."""
        prods = self.mul_table[np.asarray(a), np.asarray(b)]
        return int(np.bitwise_xor.reduce(prods, axis=-1)) if prods.size else 0

    def matmul(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.uint8)
        b = np.asarray(b, dtype=np.uint8)
        squeeze_row = a.ndim == 1
        squeeze_col = b.ndim == 1
        a = np.atleast_2d(a)
        b = b[:, None] if squeeze_col else b
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
        if a.shape[1]:
            # bound the (rows, inner, cols) temporary to a few MB
            step = max(1, (1 << 22) // max(1, a.shape[1] * b.shape[1]))
            for lo in range(0, a.shape[0], step):
                blk = self.mul_table[a[lo : lo + step, :, None], b[None, :, :]]
                out[lo : lo + step] = np.bitwise_xor.reduce(blk, axis=1)
        if squeeze_col:
            out = out[:, 0]
        if squeeze_row:
            out = out[0]
        return out

    def pow(self, a: int, e: int) -> int:
        result, base = 1, int(a)
        if e < 0:
            base, e = int(self.inv(base)), -e
        while e:
            if e & 1:
                result = int(self.mul_table[result, base])
            base = int(self.mul_table[base, base])
            e >>= 1
        return result

    def random(self, shape, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.q, size=shape, dtype=np.uint8)

    # -- scalar helpers ----------------------------------------------------
    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value), self)

    def elements(self) -> list["FieldElement"]:
        return [FieldElement(v, self) for v in range(self.q)]

    def to_json(self) -> dict:
        return {"r": self.r, "modulus": self.modulus}

    @classmethod
    def from_json(cls, data: dict) -> "FieldSpec":
        return gf(int(data["r"]), int(data.get("modulus", 0)))

    def __repr__(self) -> str:
        return f"GF({self.q})"


@lru_cache(maxsize=None)
def gf(r: int, modulus: int = 0) -> FieldSpec:
    """Cached field constructor; ``gf(2)`` is GF(4) with the canonical modulus."""
    return FieldSpec(r, modulus)


def field_for_length(n: int) -> FieldSpec:
    """Smallest binary field with at least ``n`` elements."""
    r = max(1, (n - 1).bit_length())
    return gf(r)


@dataclass(frozen=True)
class FieldElement:
    """A single element of ``field``; immutable and hashable."""

    value: int
    field: FieldSpec

    def __post_init__(self):
        if not 0 <= self.value < self.field.q:
            raise ValueError(f"{self.value} is not an element of {self.field!r}")

    def _check(self, other) -> "FieldElement":
        if isinstance(other, int):
            return FieldElement(other, self.field)
        if not isinstance(other, FieldElement):
            return NotImplemented
        if other.field != self.field:
            raise FieldMismatchError(f"{self.field!r} vs {other.field!r}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.value ^ other.value, self.field)

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__

    def __neg__(self):
        return self

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return gf_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return gf_mul(self, gf_inv(other))

    def __pow__(self, e: int):
        return FieldElement(self.field.pow(self.value, e), self.field)

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def hex(self) -> str:
        return format(self.value, "x")

    def __repr__(self) -> str:
        return f"{self.field!r}({self.value:#x})"


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    if a.field != b.field:
        raise FieldMismatchError(f"cannot multiply {a.field!r} by {b.field!r}")
    return FieldElement(int(a.field.mul_table[a.value, b.value]), a.field)


def gf_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise ZeroDivisionError("0 has no inverse")
    return FieldElement(int(a.field.inv_table[a.value]), a.field)


def gf_trace(a: FieldElement) -> int:
    """Absolute trace ``a + a^2 + ... + a^(2^(r-1))``, an element of F_2."""
    return int(a.field.trace_table[a.value])


def gf_sqrt(a: FieldElement) -> FieldElement:
    """Unique square root; equals ``a^(2^(r-1))`` since squaring is bijective."""
    return FieldElement(int(a.field.sqrt_table[a.value]), a.field)


def element_from_hex(text: str, field: FieldSpec) -> FieldElement:
    return FieldElement(int(text, 16), field)
