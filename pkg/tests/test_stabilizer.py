import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdsqpir import linalg, protocol
from mdsqpir.gf import gf
from mdsqpir.stabilizer import (
    CosetLabel,
    StabilizerError,
    apply_weyl_fast,
    build_stabilizer_space,
    coset_reduce,
    symplectic_bilinear,
    symplectic_form,
    symplectic_matrix,
)
from conftest import GRID


def two_server_space():
    return build_stabilizer_space(gf(1), [[1, 1]], [[1, 0, 0, 0], [0, 0, 1, 0]])


def params_for(n, k, t):
    return protocol.derive_params(n, k, t, 1)


def test_symplectic_form_examples():
    f = gf(1)
    assert symplectic_form(f, [1, 1, 0, 0], [0, 0, 1, 1]) == 0
    assert symplectic_form(f, [1, 0, 0, 0], [0, 0, 1, 0]) == 1


def test_symplectic_form_equals_matrix_form():
    f = gf(2)
    rng = np.random.default_rng(0)
    j = symplectic_matrix(3)
    for _ in range(50):
        x, y = f.random(6, rng), f.random(6, rng)
        assert symplectic_bilinear(f, x, y) == f.dot(x, f.matmul(j, y))


@given(st.sampled_from([1, 2, 3]), st.data())
def test_symplectic_form_alternating(r, data):
    f = gf(r)
    x = np.array(data.draw(st.lists(st.integers(0, f.q - 1), min_size=6, max_size=6)), np.uint8)
    y = np.array(data.draw(st.lists(st.integers(0, f.q - 1), min_size=6, max_size=6)), np.uint8)
    assert symplectic_form(f, x, x) == 0
    assert symplectic_form(f, x, y) == symplectic_form(f, y, x)


def test_symplectic_length_mismatch():
    with pytest.raises(ValueError):
        symplectic_form(gf(1), [1, 0], [1, 0, 0, 0])


def test_two_server_space_is_self_dual():
    sp = two_server_space()
    f = sp.field
    v = {tuple(row) for row in linalg.span(f, sp.v_basis)}
    assert v == {(0, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1), (1, 1, 1, 1)}
    assert linalg.same_rowspace(f, sp.v_basis, sp.vperp_basis)


def test_two_server_reduce():
    sp = two_server_space()
    for a1, a2, b1, b2 in np.ndindex(2, 2, 2, 2):
        # representative of the coset (a1+a2, 0 | b1+b2, 0)
        assert coset_reduce(np.array([a1, a2, b1, b2], np.uint8), sp).coeffs == (a1 ^ a2, b1 ^ b2)


def test_gf4_n4_dimensions():
    p = params_for(4, 1, 2)
    sp = p.geometry(1).space
    f = p.field
    assert linalg.rank(f, sp.v_basis) == 4 and linalg.rank(f, sp.vperp_basis) == 4
    assert linalg.same_rowspace(f, sp.v_basis, sp.vperp_basis)


@pytest.mark.parametrize("n,k,t", GRID)
def test_space_invariants(n, k, t):
    p = params_for(n, k, t)
    f, c = p.field, p.c
    for r in range(1, p.rho + 1):
        sp = p.geometry(r).space
        assert linalg.rank(f, sp.v_basis) == 2 * c
        assert linalg.rank(f, sp.vperp_basis) == 2 * (k + t - 1)
        assert linalg.in_rowspace(f, sp.vperp_basis, sp.v_basis)
        assert linalg.rank(f, np.concatenate([sp.vperp_basis, sp.complement_basis])) == 2 * n
        # trace form vanishes on every pair of basis rows, and on scalar multiples
        for u in sp.v_basis:
            for w in sp.v_basis:
                for a in range(1, f.q):
                    assert symplectic_form(f, u, f.mul(a, w)) == 0
        # cross-block orthogonality tr(b a') = 0 for a', b in rowspace(H)
        h = sp.h
        span = linalg.span(f, h)
        tr = f.trace_table[f.matmul(span, span.T)]
        assert not tr.any()


def exhaustive_labels(sp):
    f = sp.field
    vecs = np.indices((f.q,) * (2 * sp.n)).reshape(2 * sp.n, -1).T.astype(np.uint8)
    return vecs, sp.reduce(vecs)


@pytest.mark.parametrize("case", ["two-server", (4, 1, 2), (4, 2, 1)])
def test_quotient_size_exhaustive(case):
    sp = two_server_space() if case == "two-server" else params_for(*case).geometry(1).space
    f = sp.field
    assert f.q ** (2 * sp.n) <= 1 << 16
    vecs, labels = exhaustive_labels(sp)
    keys, counts = np.unique(labels, axis=0, return_counts=True)
    assert len(keys) == f.q ** sp.label_length
    assert set(counts.tolist()) == {f.q ** sp.vperp_basis.shape[0]}
    # kernel is exactly the row space of G_S
    kernel = vecs[~labels.any(axis=1)]
    assert len(kernel) == f.q ** linalg.rank(f, sp.vperp_basis)
    assert linalg.same_rowspace(f, kernel, sp.vperp_basis)


@pytest.mark.parametrize("n,k,t", GRID)
def test_reduce_is_additive_and_kills_vperp(n, k, t, rng):
    p = params_for(n, k, t)
    f = p.field
    sp = p.geometry(1).space
    for _ in range(100):
        s, u = f.random(2 * n, rng), f.random(2 * n, rng)
        v = f.matmul(f.random(sp.vperp_basis.shape[0], rng), sp.vperp_basis)
        assert np.array_equal(sp.reduce(s ^ u), sp.reduce(s) ^ sp.reduce(u))
        assert np.array_equal(sp.reduce(s ^ v), sp.reduce(s))
        assert not sp.reduce(v).any()
        lab = coset_reduce(s, sp)
        assert np.array_equal(sp.reduce(sp.representative(lab)), lab.array())


def test_apply_weyl_fast(rng):
    p = params_for(5, 2, 2)
    f = p.field
    sp = p.geometry(1).space
    zero = CosetLabel((0,) * sp.label_length)
    for _ in range(50):
        t1, t2 = f.random(10, rng), f.random(10, rng)
        v = f.matmul(f.random(sp.vperp_basis.shape[0], rng), sp.vperp_basis)
        assert apply_weyl_fast(zero, v, sp) == zero
        assert apply_weyl_fast(apply_weyl_fast(zero, t1, sp), t2, sp) == apply_weyl_fast(zero, t1 ^ t2, sp)


def test_rejects_non_self_orthogonal():
    f = gf(2)
    with pytest.raises(StabilizerError, match="self-orthogonal"):
        build_stabilizer_space(f, [[1, 0, 0, 0]], np.zeros((2, 8), np.uint8))


def test_rejects_bad_complement():
    f = gf(1)
    with pytest.raises(StabilizerError):
        build_stabilizer_space(f, [[1, 1]], [[1, 1, 0, 0], [0, 0, 1, 0]])


def test_label_serialization():
    lab = CosetLabel.of([10, 0, 3])
    assert lab.hex() == ["a", "0", "3"]
    assert not lab.is_zero() and CosetLabel.of([0, 0]).is_zero()
