"""Gaussian elimination over GF(2^r) on uint8 numpy arrays.

All functions take the field first and never mutate their inputs.
"""

from __future__ import annotations

import numpy as np

from .gf import FieldSpec


class SingularMatrixError(ArithmeticError):
    pass


def rref(field: FieldSpec, a) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = np.array(a, dtype=np.uint8, copy=True)
    if m.ndim != 2:
        raise ValueError("rref expects a 2-d array")
    rows, cols = m.shape
    mul, inv = field.mul_table, field.inv_table
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = mul[inv[m[r, c]], m[r]]
        factors = m[:, c].copy()
        factors[r] = 0
        m ^= mul[factors[:, None], m[r][None, :]]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(field: FieldSpec, a) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    return len(rref(field, a)[1])


def row_basis(field: FieldSpec, a) -> np.ndarray:
    """Nonzero rows of the RREF (a canonical basis of the row space)."""
    r, piv = rref(field, a)
    return r[: len(piv)]


def nullspace(field: FieldSpec, a) -> np.ndarray:
    """Rows spanning ``{x : a @ x^T = 0}``, returned in RREF."""
    a = np.atleast_2d(np.asarray(a, dtype=np.uint8))
    cols = a.shape[1]
    r, piv = rref(field, a)
    free = [c for c in range(cols) if c not in piv]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(piv):
            basis[i, pc] = r[row, f]  # char 2: -x = x
    if basis.shape[0] == 0:
        return basis
    return row_basis(field, basis)


def inverse(field: FieldSpec, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse needs a square matrix")
    aug = np.concatenate([a, np.eye(n, dtype=np.uint8)], axis=1)
    r, piv = rref(field, aug)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise SingularMatrixError("matrix is singular")
    return r[:, n:].copy()


def solve_left(field: FieldSpec, a, b) -> np.ndarray:
    """Solve ``x @ a = b`` for a row vector ``x`` (unique solution required)."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    k, n = a.shape
    aug = np.concatenate([a.T, b.reshape(n, 1)], axis=1)
    r, piv = rref(field, aug)
    if k in piv:
        raise SingularMatrixError("no solution")
    if len(piv) != k:
        raise SingularMatrixError("solution is not unique")
    return r[:k, k].copy()


def in_rowspace(field: FieldSpec, basis, vectors) -> bool:
    """True if every row of ``vectors`` lies in the row space of ``basis``."""
    basis = np.atleast_2d(np.asarray(basis, dtype=np.uint8))
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.uint8))
    return rank(field, np.concatenate([basis, vectors])) == rank(field, basis)


def same_rowspace(field: FieldSpec, a, b) -> bool:
    return in_rowspace(field, a, b) and in_rowspace(field, b, a)


def block_diag(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=np.uint8)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0] :, a.shape[1] :] = b
    return out


def span(field: FieldSpec, basis) -> np.ndarray:
    """Every F_q-combination of the rows of ``basis`` (q^rows vectors)."""
    basis = np.atleast_2d(np.asarray(basis, dtype=np.uint8))
    k, n = basis.shape
    q = field.q
    coeffs = np.indices((q,) * k).reshape(k, -1).T.astype(np.uint8) if k else np.zeros((1, 0), np.uint8)
    return field.matmul(coeffs, basis) if k else np.zeros((1, n), dtype=np.uint8)


def matrix_to_hex(a) -> list[list[str]]:
    a = np.atleast_2d(np.asarray(a))
    return [[format(int(v), "x") for v in row] for row in a]


def vector_to_hex(v) -> list[str]:
    return [format(int(x), "x") for x in np.asarray(v).ravel()]


def matrix_from_hex(rows, field: FieldSpec | None = None) -> np.ndarray:
    arr = np.array([[int(v, 16) for v in row] for row in rows], dtype=np.int64)
    if field is not None:
        return field.asarray(arr)
    return arr.astype(np.uint8)
