"""Symplectic geometry over F_q^{2n} and coset arithmetic for CSS stabilizers.

Vectors are length-2n uint8 arrays ``(a | b)``: X-part ``a`` then Z-part ``b``.
The stabilizer space is ``V = rowspace(diag(H, H))`` for the parity-check
matrix ``H`` of a weakly self-dual code S'; its symplectic complement is
``S' x S'``.  A quantum state ``|s + V^perp>`` is tracked by the coordinates of
``s`` along a fixed complement basis, so applying a Weyl operator is a vector
addition followed by one matrix-vector product.

In characteristic 2 the sign in ``J = [[0, -I], [I, 0]]`` disappears.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import linalg
from .gf import FieldSpec


class StabilizerError(ValueError):
    pass


def symplectic_matrix(n: int) -> np.ndarray:
    """``J`` with entries reduced to F_2 (``-1 = 1``)."""
    j = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    j[:n, n:] = np.eye(n, dtype=np.uint8)
    j[n:, :n] = np.eye(n, dtype=np.uint8)
    return j


def symplectic_bilinear(field: FieldSpec, x, y) -> int:
    """F_q-valued form ``sum_i x_i y_{n+i} - x_{n+i} y_i`` (before the trace)."""
    x = np.asarray(x, dtype=np.uint8)
    y = np.asarray(y, dtype=np.uint8)
    if x.shape != y.shape or x.shape[-1] % 2:
        raise ValueError(f"symplectic vectors need equal even length, got {x.shape} and {y.shape}")
    n = x.shape[-1] // 2
    return field.dot(x[:n], y[n:]) ^ field.dot(x[n:], y[:n])


def symplectic_form(field: FieldSpec, x, y) -> int:
    """Trace-symplectic form, an element of F_2."""
    return int(field.trace_table[symplectic_bilinear(field, x, y)])


@dataclass(frozen=True)
class CosetLabel:
    """Coordinates of a coset representative along the complement basis."""

    coeffs: tuple[int, ...]

    @classmethod
    def of(cls, values) -> "CosetLabel":
        return cls(tuple(int(v) for v in np.asarray(values).ravel()))

    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.uint8)

    def hex(self) -> list[str]:
        return linalg.vector_to_hex(self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)


@dataclass(frozen=True, eq=False)
class StabilizerSpace:
    field: FieldSpec
    n: int
    h: np.ndarray
    f: np.ndarray
    v_basis: np.ndarray
    vperp_basis: np.ndarray
    complement_basis: np.ndarray
    _solver: np.ndarray = dc_field(repr=False)

    @property
    def dim_v(self) -> int:
        return self.v_basis.shape[0]

    @property
    def label_length(self) -> int:
        return self.complement_basis.shape[0]

    def reduce(self, s) -> np.ndarray:
        """Complement coordinates of ``s`` (works row-wise on a 2-d array)."""
        s = np.asarray(s, dtype=np.uint8)
        coords = self.field.matmul(s, self._solver)
        return coords[..., self.vperp_basis.shape[0] :]

    def representative(self, label: CosetLabel) -> np.ndarray:
        return self.field.matmul(label.array(), self.complement_basis)

    def labels(self) -> np.ndarray:
        """Every coefficient vector in F_q^{2c}, in lexicographic order."""
        q, L = self.field.q, self.label_length
        return np.indices((q,) * L).reshape(L, -1).T.astype(np.uint8)


def complete_basis(field: FieldSpec, fixed, candidates) -> np.ndarray:
    """Greedily pick rows of ``candidates`` that extend ``fixed`` to a larger span."""
    chosen = []
    current = np.atleast_2d(np.asarray(fixed, dtype=np.uint8))
    r = linalg.rank(field, current)
    for row in np.atleast_2d(candidates):
        trial = np.concatenate([current, row[None, :]])
        r2 = linalg.rank(field, trial)
        if r2 > r:
            chosen.append(row)
            current, r = trial, r2
    return np.array(chosen, dtype=np.uint8).reshape(len(chosen), current.shape[1])


def build_stabilizer_space(field: FieldSpec, h_sprime, m_round, f_sprime=None) -> StabilizerSpace:
    """Stabilizer space for ``V = <diag(H, H)>`` with the given complement rows.

    ``f_sprime`` completes ``H`` to a generator of the code S' = ker(H); when it
    is omitted a completion is taken from a kernel basis.
    """
    h = np.atleast_2d(np.asarray(h_sprime, dtype=np.uint8))
    m_round = np.atleast_2d(np.asarray(m_round, dtype=np.uint8))
    n = h.shape[1]
    if field.matmul(h, h.T).any():
        raise StabilizerError("H H^T != 0: <diag(H, H)> is not self-orthogonal")
    if f_sprime is None:
        f = complete_basis(field, h, linalg.nullspace(field, h))
    else:
        f = np.atleast_2d(np.asarray(f_sprime, dtype=np.uint8)).reshape(-1, n)
    v = linalg.block_diag(h, h)
    g_s = np.concatenate([v, linalg.block_diag(f, f)])
    rank_h = linalg.rank(field, h)
    if rank_h != h.shape[0]:
        raise StabilizerError("H has dependent rows")
    if linalg.rank(field, g_s) != 2 * (n - rank_h):
        raise StabilizerError("(H; F) does not generate ker(H)")
    if field.matmul(field.matmul(v, symplectic_matrix(n)), g_s.T).any():
        raise StabilizerError("H_S J^T G_S^T != 0")
    stacked = np.concatenate([g_s, m_round])
    if stacked.shape[0] != 2 * n:
        raise StabilizerError(f"complement has {m_round.shape[0]} rows, need {2 * n - g_s.shape[0]}")
    try:
        solver = linalg.inverse(field, stacked)
    except linalg.SingularMatrixError as exc:
        raise StabilizerError("complement rows do not complete G_S to a basis of F_q^{2n}") from exc
    for arr in (h, f, v, g_s, m_round, solver):
        arr.setflags(write=False)
    return StabilizerSpace(field, n, h, f, v, g_s, m_round, solver)


def coset_reduce(s, space: StabilizerSpace) -> CosetLabel:
    s = np.asarray(s, dtype=np.uint8)
    if s.shape != (2 * space.n,):
        raise ValueError(f"expected a length-{2 * space.n} vector, got shape {s.shape}")
    return CosetLabel.of(space.reduce(s))


def apply_weyl_fast(state: CosetLabel, t, space: StabilizerSpace) -> CosetLabel:
    """Coset label after applying ``W(t)`` to ``|state>``."""
    return coset_reduce(space.representative(state) ^ np.asarray(t, dtype=np.uint8), space)
