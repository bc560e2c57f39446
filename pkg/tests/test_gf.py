import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdsqpir.gf import (
    CANONICAL_MODULI,
    FieldElement,
    FieldMismatchError,
    FieldSpec,
    element_from_hex,
    field_for_length,
    gf,
    gf_inv,
    gf_mul,
    gf_sqrt,
    gf_trace,
    is_irreducible,
)

SMALL = [1, 2, 3, 4]


def ref_mul(a: int, b: int, modulus: int) -> int:
    """Schoolbook shift-and-add, reducing after every shift."""
    r = modulus.bit_length() - 1
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> r & 1:
            a ^= modulus
    return out


def ref_irreducible(modulus: int) -> bool:
    """No factor of degree 1..r/2, by exhaustive polynomial long division."""
    r = modulus.bit_length() - 1
    for d in range(1, r // 2 + 1):
        for f in range(1 << d, 1 << (d + 1)):
            rem = modulus
            while rem.bit_length() >= f.bit_length():
                rem ^= f << (rem.bit_length() - f.bit_length())
            if rem == 0:
                return False
    return True


def test_canonical_moduli_are_irreducible_and_fixed():
    assert CANONICAL_MODULI[2] == 0b111
    assert CANONICAL_MODULI[3] == 0b1011
    assert CANONICAL_MODULI[4] == 0b10011
    assert CANONICAL_MODULI[8] == 0b100011101
    assert CANONICAL_MODULI[1] == 0b10
    for r, m in CANONICAL_MODULI.items():
        assert m.bit_length() - 1 == r
        assert is_irreducible(m) == ref_irreducible(m) is True


@pytest.mark.parametrize("modulus", range(4, 64))
def test_irreducibility_agrees_with_reference(modulus):
    assert is_irreducible(modulus) == ref_irreducible(modulus)


def test_reducible_modulus_rejected():
    with pytest.raises(ValueError):
        FieldSpec(2, 0b101)  # x^2 + 1 = (x+1)^2


@pytest.mark.parametrize("r", SMALL + [5, 6, 7, 8])
def test_mul_table_matches_reference(r):
    f = gf(r)
    q = f.q
    ref = np.array([[ref_mul(a, b, f.modulus) for b in range(q)] for a in range(q)], dtype=np.uint8)
    assert np.array_equal(f.mul_table, ref)


def test_gf4_examples():
    f = gf(2)
    a = f(2)
    assert gf_mul(a, a) == f(3)  # alpha^2 = alpha + 1
    assert gf_mul(a, f(3)) == f(1)
    assert gf_inv(f(1)) == f(1)
    assert gf_inv(a) == f(3)
    assert gf_trace(f(0)) == 0
    assert gf_trace(a) == 1
    assert gf_trace(f(1)) == 0
    assert gf_sqrt(f(0)) == f(0)
    assert gf_sqrt(f(3)) == a


@pytest.mark.parametrize("r", [1, 2, 3, 4, 8])
def test_multiplicative_identity(r):
    f = gf(r)
    for a in f.elements():
        assert gf_mul(a, f(1)) == a


@pytest.mark.parametrize("r", [3, 8])
def test_inverse_sweep(r):
    f = gf(r)
    for a in f.elements()[1:]:
        assert a * gf_inv(a) == f(1)


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        gf_inv(gf(3)(0))


@pytest.mark.parametrize("r", SMALL)
def test_field_axioms_exhaustive(r):
    f = gf(r)
    q = f.q
    mul = f.mul_table.astype(np.int64)
    a, b, c = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    assert np.array_equal(mul[mul[a, b], c], mul[a, mul[b, c]])
    assert np.array_equal(mul[a, b ^ c], mul[a, b] ^ mul[a, c])
    assert np.array_equal(mul, mul.T)
    assert all(mul[x, f.inv_table[x]] == 1 for x in range(1, q))
    # no zero divisors
    assert (mul[1:, 1:] != 0).all()


@pytest.mark.parametrize("r", SMALL)
def test_frobenius_exhaustive(r):
    f = gf(r)
    q = f.q
    sq = f.mul_table[np.arange(q), np.arange(q)]
    for a, b in itertools.product(range(q), repeat=2):
        assert sq[a ^ b] == sq[a] ^ sq[b]


@pytest.mark.parametrize("r", SMALL)
def test_trace_linear_nonzero_and_binary(r):
    f = gf(r)
    q = f.q
    tr = f.trace_table
    assert set(np.unique(tr)) <= {0, 1}
    assert tr.any()
    for a, b in itertools.product(range(q), repeat=2):
        assert tr[a ^ b] == tr[a] ^ tr[b]
    # the defining sum a + a^2 + ... + a^(2^(r-1))
    for a in range(q):
        acc, x = 0, a
        for _ in range(r):
            acc ^= x
            x = ref_mul(x, x, f.modulus)
        assert acc == tr[a]


@pytest.mark.parametrize("r", SMALL)
def test_trace_equals_trace_of_multiplication_map(r):
    f = gf(r)
    for a in range(f.q):
        # matrix of x -> a x in the polynomial basis; its F_2 trace
        diag = sum((f.mul_table[a, 1 << i] >> i) & 1 for i in range(r)) % 2
        assert diag == f.trace_table[a]


@pytest.mark.parametrize("r", SMALL)
def test_sqrt_inverts_squaring(r):
    f = gf(r)
    q = f.q
    sq = f.mul_table[np.arange(q), np.arange(q)]
    assert sorted(sq.tolist()) == list(range(q))
    assert np.array_equal(f.sqrt_table[sq], np.arange(q))
    assert np.array_equal(f.sqrt_table, [f.pow(a, 2 ** (r - 1)) for a in range(q)])


def test_field_mismatch():
    with pytest.raises(FieldMismatchError):
        gf(2)(1) * gf(3)(1)
    with pytest.raises(FieldMismatchError):
        gf(2)(1) + gf(3)(1)


def test_element_value_range():
    with pytest.raises(ValueError):
        FieldElement(4, gf(2))


def test_serialization():
    f = gf(8)
    assert f(0xAB).hex() == "ab"
    assert element_from_hex("ab", f) == f(0xAB)
    assert f.to_json() == {"r": 8, "modulus": 0b100011101}
    assert FieldSpec.from_json(f.to_json()) == f


def test_field_for_length():
    assert field_for_length(2).q == 2
    assert field_for_length(4).q == 4
    assert field_for_length(5).q == 8
    assert field_for_length(6).q == 8
    assert field_for_length(9).q == 16


@given(r=st.sampled_from([3, 5, 8]), data=st.data())
def test_element_operators_agree_with_reference(r, data):
    f = gf(r)
    a = data.draw(st.integers(0, f.q - 1))
    b = data.draw(st.integers(1, f.q - 1))
    x, y = f(a), f(b)
    assert int(x * y) == ref_mul(a, b, f.modulus)
    assert (x / y) * y == x
    assert x + x == f(0)
    assert x - y == x + y
    assert int(x**3) == ref_mul(ref_mul(a, a, f.modulus), a, f.modulus)


@given(data=st.data())
def test_matmul_matches_elementwise_sums(data):
    f = gf(3)
    rows, inner, cols = (data.draw(st.integers(1, 4)) for _ in range(3))
    a = np.array(data.draw(st.lists(st.integers(0, 7), min_size=rows * inner, max_size=rows * inner)), np.uint8).reshape(rows, inner)
    b = np.array(data.draw(st.lists(st.integers(0, 7), min_size=inner * cols, max_size=inner * cols)), np.uint8).reshape(inner, cols)
    out = f.matmul(a, b)
    for i in range(rows):
        for j in range(cols):
            acc = 0
            for l in range(inner):
                acc ^= ref_mul(int(a[i, l]), int(b[l, j]), f.modulus)
            assert out[i, j] == acc
