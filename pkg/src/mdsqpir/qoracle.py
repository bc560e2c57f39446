"""Brute-force density-matrix simulator used to certify the coset backend.

The Hilbert space is ``H^{(x)n}`` with ``H = span{|j> : j in F_q}``.  Basis
states are packed into integers with the first site most significant; since
``q = 2^r``, adding field vectors is XOR on the packed index.  Weyl operators
are monomial, so they are stored as scipy sparse matrices; a literal
Kronecker-product construction is kept alongside for cross-checking at small
sizes.

Phases ``c_v`` are all 1.  For ``V = E x E`` with ``E`` self-orthogonal the
cross terms ``tr(b . a')`` vanish, so ``{W(v)}`` is already an abelian group.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import linalg
from .gf import FieldSpec
from .stabilizer import CosetLabel, StabilizerSpace, symplectic_bilinear as _bilinear

DEFAULT_LIMIT = 1 << 16
ALGEBRA_TOL = 1e-9
PROBABILITY_TOL = 1e-6


class OracleSizeError(ValueError):
    pass


class UnsupportedStructureError(ValueError):
    pass


class NumericalIntegrityError(ArithmeticError):
    pass


def _check_size(field: FieldSpec, n: int, limit: int) -> int:
    dim = field.q**n
    if dim > limit:
        raise OracleSizeError(f"q^n = {dim} exceeds the oracle limit {limit}")
    return dim


@lru_cache(maxsize=16)
def basis_digits(field: FieldSpec, n: int) -> np.ndarray:
    """Row ``j`` holds the n site values of basis state ``j``."""
    idx = np.arange(field.q**n, dtype=np.int64)
    shifts = field.r * np.arange(n - 1, -1, -1)
    digits = ((idx[:, None] >> shifts[None, :]) & (field.q - 1)).astype(np.uint8)
    digits.setflags(write=False)
    return digits


def pack(field: FieldSpec, vec) -> int:
    out = 0
    for v in np.asarray(vec).ravel():
        out = (out << field.r) | int(v)
    return out


def _phase_bits(field: FieldSpec, b, digits) -> np.ndarray:
    """``tr(b . j)`` for every basis state ``j`` (rows of ``digits``)."""
    b = np.asarray(b, dtype=np.uint8)
    prod = field.mul_table[b[None, :], digits]
    return field.trace_table[np.bitwise_xor.reduce(prod, axis=1)]


@dataclass(frozen=True, eq=False)
class WeylOperator:
    label: np.ndarray
    field: FieldSpec
    matrix: sp.csr_array

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def weyl_matrix(field: FieldSpec, s, limit: int = DEFAULT_LIMIT) -> WeylOperator:
    """``X(s_1)Z(s_{n+1}) (x) ... (x) X(s_n)Z(s_{2n})`` as a sparse monomial matrix."""
    s = np.asarray(s, dtype=np.uint8)
    n = s.shape[0] // 2
    dim = _check_size(field, n, limit)
    digits = basis_digits(field, n)
    src = np.arange(dim, dtype=np.int64)
    dst = src ^ pack(field, s[:n])
    sign = 1.0 - 2.0 * _phase_bits(field, s[n:], digits)
    mat = sp.csr_array((sign.astype(complex), (dst, src)), shape=(dim, dim))
    return WeylOperator(s, field, mat)


def site_x(field: FieldSpec, a: int) -> np.ndarray:
    """``X(a) = sum_j |j + a><j|`` on one q-dimensional site."""
    m = np.zeros((field.q, field.q), dtype=complex)
    for j in range(field.q):
        m[j ^ a, j] = 1
    return m


def site_z(field: FieldSpec, b: int) -> np.ndarray:
    """``Z(b) = sum_j (-1)^{tr(b j)} |j><j|``."""
    return np.diag([(-1.0) ** int(field.trace_table[field.mul_table[b, j]]) for j in range(field.q)]).astype(complex)


def weyl_matrix_kron(field: FieldSpec, s, limit: int = 1 << 12) -> np.ndarray:
    """Dense tensor-product construction straight from the site definitions."""
    s = np.asarray(s, dtype=np.uint8)
    n = s.shape[0] // 2
    _check_size(field, n, limit)
    out = np.ones((1, 1), dtype=complex)
    for i in range(n):
        out = np.kron(out, site_x(field, int(s[i])) @ site_z(field, int(s[n + i])))
    return out


def _css_block(space: StabilizerSpace) -> np.ndarray:
    n = space.n
    v = space.v_basis
    d = v.shape[0] // 2
    e = v[:d, :n]
    ok = (
        v.shape[0] % 2 == 0
        and not v[:d, n:].any()
        and not v[d:, :n].any()
        and np.array_equal(v[d:, n:], e)
    )
    if not ok:
        raise UnsupportedStructureError("only CSS spaces diag(H, H) are supported")
    return e


def stabilizer_elements(space: StabilizerSpace) -> np.ndarray:
    _css_block(space)
    return linalg.span(space.field, space.v_basis)


@lru_cache(maxsize=8)
def _stabilizer_terms(space: StabilizerSpace):
    """Elements of V with the (row, col, sign) entries of each monomial W(v)."""
    field, n = space.field, space.n
    elements = stabilizer_elements(space)
    digits = basis_digits(field, n)
    tr, mul = field.trace_table, field.mul_table
    src = np.arange(field.q**n, dtype=np.int64)
    shift = np.array([pack(field, v[:n]) for v in elements], dtype=np.int64)
    phase = 1.0 - 2.0 * tr[np.bitwise_xor.reduce(mul[elements[:, None, n:], digits[None, :, :]], axis=2)]
    rows = (src[None, :] ^ shift[:, None]).ravel()
    cols = np.broadcast_to(src, (len(elements), src.size)).ravel()
    return elements, rows, cols, phase


def stabilizer_projector(space: StabilizerSpace, label: CosetLabel, limit: int = DEFAULT_LIMIT, method: str = "auto") -> sp.csr_array:
    """``P_s = |V|^{-1} sum_{v in V} (-1)^{<v, s>} W(v)`` for the coset ``label``.

    ``method="sum"`` adds all ``|V|`` Weyl matrices; ``"css"`` uses the
    factorisation ``(sum_a +-X(a)) (sum_b +-Z(b))`` valid for ``V = E x E``.
    """
    field, n = space.field, space.n
    e = _css_block(space)
    dim = _check_size(field, n, limit)
    s = space.representative(label)
    if method == "auto":
        method = "sum" if field.q ** space.dim_v * dim <= 1 << 20 else "css"
    if method == "sum":
        elements, rows, cols, phase = _stabilizer_terms(space)
        js = np.concatenate([s[n:], s[:n]])
        coset_sign = 1.0 - 2.0 * field.trace_table[field.matmul(elements, js)]
        vals = (coset_sign[:, None] * phase).ravel() / len(elements)
        acc = sp.csr_array((vals.astype(complex), (rows, cols)), shape=(dim, dim))
        acc.sum_duplicates()
    elif method == "css":
        code = linalg.span(field, e)
        digits = basis_digits(field, n)
        sx, sz = s[:n], s[n:]
        tr = field.trace_table
        # Z half: diagonal sum over b in E of (-1)^{tr(b . s_X)} Z(b)
        diag = np.zeros(dim)
        for b in code:
            sign = 1.0 - 2.0 * float(tr[field.dot(b, sx)])
            diag += sign * (1.0 - 2.0 * _phase_bits(field, b, digits))
        diag /= len(code)
        src = np.arange(dim, dtype=np.int64)
        rows, cols, vals = [], [], []
        for a in code:
            sign = 1.0 - 2.0 * float(tr[field.dot(a, sz)])
            rows.append(src ^ pack(field, a))
            cols.append(src)
            vals.append(np.full(dim, sign / len(code)))
        px = sp.csr_array(
            (np.concatenate(vals).astype(complex), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        )
        px.sum_duplicates()
        acc = px @ sp.diags_array(diag.astype(complex))
    else:
        raise ValueError(f"unknown method {method!r}")
    acc = sp.csr_array(acc)
    acc.data[np.abs(acc.data) < ALGEBRA_TOL] = 0
    acc.eliminate_zeros()
    return acc


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: sp.csr_array

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def trace(self) -> complex:
        return complex(self.matrix.diagonal().sum())

    def validate(self, tol: float = ALGEBRA_TOL) -> None:
        """Hermitian, unit trace, positive semidefinite.

        Above 4096 dimensions positivity is certified by checking that the
        state is a positive multiple of a projector, the only form the
        protocol produces at that scale.
        """
        m = self.matrix
        herm = m - m.conj().T
        if herm.nnz and np.abs(herm.data).max() > tol:
            raise NumericalIntegrityError("state is not Hermitian")
        if abs(self.trace() - 1) > tol:
            raise NumericalIntegrityError(f"trace {self.trace()} != 1")
        if self.dim <= 4096:
            if np.linalg.eigvalsh(self.dense()).min() < -tol:
                raise NumericalIntegrityError("state has a negative eigenvalue")
        else:
            sq = m @ m
            lam = complex(sq.diagonal().sum()).real
            diff = sq - lam * m
            if lam <= 0 or (diff.nnz and np.abs(diff.data).max() > tol):
                raise NumericalIntegrityError("cannot certify positivity: state is not a scaled projector")


def initial_state(space: StabilizerSpace, limit: int = DEFAULT_LIMIT) -> DensityMatrix:
    """Maximally mixed state on the code space ``P_0 / rank(P_0)``."""
    p0 = stabilizer_projector(space, CosetLabel((0,) * space.label_length), limit)
    return DensityMatrix(p0 / p0.diagonal().sum().real)


def conjugate(state: DensityMatrix, op: WeylOperator) -> DensityMatrix:
    w = op.matrix
    return DensityMatrix(sp.csr_array(w @ state.matrix @ w.conj().T))


def _trace_product(p: sp.csr_array, rho: sp.csr_array) -> float:
    return float(p.multiply(rho.T).sum().real)


@lru_cache(maxsize=8)
def _projector_family(space: StabilizerSpace, limit: int) -> tuple:
    return tuple(stabilizer_projector(space, CosetLabel.of(o), limit) for o in space.labels())


def outcome_distribution(state: DensityMatrix, space: StabilizerSpace, method: str = "auto", limit: int = DEFAULT_LIMIT) -> np.ndarray:
    """``Tr(P_s rho)`` for every label, ordered as ``space.labels()``.

    ``"projectors"`` builds each projector explicitly; ``"characteristic"``
    expands ``P_s`` in Weyl operators and evaluates ``Tr(W(v) rho)`` once per
    ``v`` in V, which is what keeps 8^5-dimensional instances tractable.
    """
    _check_size(space.field, space.n, limit)
    if method == "auto":
        method = "projectors" if space.field.q ** space.label_length * state.dim <= 1 << 20 else "characteristic"
    if method == "projectors":
        return np.array([_trace_product(p, state.matrix) for p in _projector_family(space, limit)])
    if method == "characteristic":
        return _characteristic_distribution(state, space)
    raise ValueError(f"unknown method {method!r}")


def _characteristic_distribution(state: DensityMatrix, space: StabilizerSpace) -> np.ndarray:
    field, n = space.field, space.n
    tr, mul = field.trace_table, field.mul_table
    code = linalg.span(field, _css_block(space))  # E, |E| = q^c
    size = len(code)
    packed = np.array([pack(field, a) for a in code], dtype=np.int64)
    position = {int(p): i for i, p in enumerate(packed)}
    coo = sp.coo_array(state.matrix)
    rows, cols, vals = coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data
    # Tr(X(a)Z(b) rho) = sum_k (-1)^{tr(b . k)} rho[k, k + a]
    diff = rows ^ cols
    slot = np.array([position.get(int(d), -1) for d in diff], dtype=np.int64)
    # entries whose X-difference lies outside E never meet a stabilizer element
    keep = slot >= 0
    rows, slot, vals = rows[keep], slot[keep], vals[keep]
    digits = basis_digits(field, n)[rows]
    sign_b = 1.0 - 2.0 * tr[np.bitwise_xor.reduce(mul[code[:, None, :], digits[None, :, :]], axis=2)]
    onehot = sp.csr_array((vals, (np.arange(len(slot)), slot)), shape=(len(slot), size))
    chi = (onehot.T @ sign_b.T).T  # chi[b, a]
    reps = field.matmul(space.labels(), space.complement_basis)
    sx, sz = reps[:, :n], reps[:, n:]
    sign_a = 1.0 - 2.0 * tr[field.matmul(sz, code.T)]  # (labels, a)
    sign_bb = 1.0 - 2.0 * tr[field.matmul(sx, code.T)]  # (labels, b)
    probs = np.einsum("la,ba,lb->l", sign_a, chi, sign_bb) / (size * size)
    return probs.real


def measure_pvm(state: DensityMatrix, space: StabilizerSpace, rng: np.random.Generator | None = None, method: str = "auto") -> tuple[CosetLabel, float]:
    """Outcome of the syndrome PVM and its probability.

    Without ``rng`` the most likely outcome is returned (the protocol only
    ever produces point masses); with ``rng`` an outcome is sampled.
    """
    dist = outcome_distribution(state, space, method)
    total = dist.sum()
    if abs(total - 1) > PROBABILITY_TOL or dist.min() < -PROBABILITY_TOL:
        raise NumericalIntegrityError(f"outcome distribution sums to {total}")
    i = int(rng.choice(len(dist), p=np.clip(dist, 0, None) / total)) if rng is not None else int(np.argmax(dist))
    return CosetLabel.of(space.labels()[i]), float(dist[i])
