import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdsqpir import linalg
from mdsqpir.gf import gf


def matrices(r, max_rows=4, max_cols=5):
    q = 1 << r
    return st.integers(1, max_rows).flatmap(
        lambda m: st.integers(1, max_cols).flatmap(
            lambda n: st.lists(st.integers(0, q - 1), min_size=m * n, max_size=m * n).map(lambda v: np.array(v, np.uint8).reshape(m, n))
        )
    )


def brute_span_size(f, a):
    return len({linalg.span(f, a)[i].tobytes() for i in range(f.q ** a.shape[0])})


@given(matrices(2, 3, 4))
def test_rank_matches_span_size(a):
    f = gf(2)
    assert f.q ** linalg.rank(f, a) == brute_span_size(f, a)


@given(matrices(3))
def test_nullspace_is_the_kernel(a):
    f = gf(3)
    ns = linalg.nullspace(f, a)
    assert ns.shape[0] == a.shape[1] - linalg.rank(f, a)
    if ns.shape[0]:
        assert not f.matmul(a, ns.T).any()


@given(matrices(3, 4, 4))
def test_inverse_or_singular(a):
    f = gf(3)
    if a.shape[0] != a.shape[1]:
        return
    if linalg.rank(f, a) < a.shape[0]:
        with pytest.raises(linalg.SingularMatrixError):
            linalg.inverse(f, a)
    else:
        inv = linalg.inverse(f, a)
        assert np.array_equal(f.matmul(a, inv), np.eye(a.shape[0], dtype=np.uint8))


@given(matrices(4, 3, 5), st.data())
def test_solve_left_round_trip(a, data):
    f = gf(4)
    if linalg.rank(f, a) < a.shape[0]:
        return
    x = np.array(data.draw(st.lists(st.integers(0, 15), min_size=a.shape[0], max_size=a.shape[0])), np.uint8)
    assert np.array_equal(linalg.solve_left(f, a, f.matmul(x, a)), x)


def test_hex_round_trip():
    a = np.array([[0, 10, 255], [1, 2, 3]], np.uint8)
    assert linalg.matrix_to_hex(a) == [["0", "a", "ff"], ["1", "2", "3"]]
    assert np.array_equal(linalg.matrix_from_hex(linalg.matrix_to_hex(a)), a)
