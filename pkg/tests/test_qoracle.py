import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdsqpir import linalg, protocol, qoracle
from mdsqpir.gf import gf
from mdsqpir.stabilizer import CosetLabel, StabilizerSpace, build_stabilizer_space, symplectic_form

TOL = qoracle.ALGEBRA_TOL


def two_server_space():
    return build_stabilizer_space(gf(1), [[1, 1]], [[1, 0, 0, 0], [0, 0, 1, 0]])


def space_for(n, k, t, r=1):
    return protocol.derive_params(n, k, t, 1).geometry(r).space


def close(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)).max() <= TOL


def test_identity_and_bit_flip():
    f = gf(1)
    assert close(qoracle.weyl_matrix(f, [0, 0, 0, 0]).dense(), np.eye(4))
    assert close(qoracle.weyl_matrix(f, [1, 0]).dense(), [[0, 1], [1, 0]])
    assert close(qoracle.weyl_matrix(f, [0, 1]).dense(), [[1, 0], [0, -1]])


@pytest.mark.parametrize("r", [1, 2])
def test_commutation_exhaustive_single_site(r):
    f = gf(r)
    labels = list(itertools.product(range(f.q), repeat=2))
    for s, t in itertools.product(labels, repeat=2):
        ws, wt = qoracle.weyl_matrix(f, s).dense(), qoracle.weyl_matrix(f, t).dense()
        sign = (-1) ** symplectic_form(f, s, t)
        assert close(ws @ wt, sign * wt @ ws)


@given(st.sampled_from([(1, 3), (2, 2), (3, 2)]), st.data())
def test_commutation_random_multi_site(rn, data):
    r, n = rn
    f = gf(r)
    s = data.draw(st.lists(st.integers(0, f.q - 1), min_size=2 * n, max_size=2 * n))
    t = data.draw(st.lists(st.integers(0, f.q - 1), min_size=2 * n, max_size=2 * n))
    ws, wt = qoracle.weyl_matrix(f, s).matrix, qoracle.weyl_matrix(f, t).matrix
    sign = (-1) ** symplectic_form(f, s, t)
    assert close((ws @ wt - sign * (wt @ ws)).toarray(), 0)


@given(st.sampled_from([(1, 3), (2, 2), (3, 2), (2, 3)]), st.data())
def test_sparse_matches_tensor_product(rn, data):
    r, n = rn
    f = gf(r)
    s = data.draw(st.lists(st.integers(0, f.q - 1), min_size=2 * n, max_size=2 * n))
    w = qoracle.weyl_matrix(f, s).dense()
    assert close(w, qoracle.weyl_matrix_kron(f, s))
    assert close(w @ w.conj().T, np.eye(len(w)))


def test_size_limit():
    with pytest.raises(qoracle.OracleSizeError):
        qoracle.weyl_matrix(gf(3), np.zeros(12, np.uint8))
    with pytest.raises(qoracle.OracleSizeError):
        qoracle.weyl_matrix(gf(2), np.zeros(8, np.uint8), limit=16)


def test_non_css_rejected():
    f = gf(1)
    v = np.array([[1, 0, 0, 1]], np.uint8)  # X on site 1, Z on site 2: not of the form diag(H, H)
    sp = StabilizerSpace(f, 2, v[:, :2], v[:, :2], v, v, v, np.eye(4, dtype=np.uint8))
    with pytest.raises(qoracle.UnsupportedStructureError):
        qoracle.stabilizer_projector(sp, CosetLabel((0,)))


def test_two_server_initial_projector_is_bell_state():
    sp = two_server_space()
    p0 = qoracle.stabilizer_projector(sp, CosetLabel((0, 0))).toarray()
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert close(p0, np.outer(bell, bell))
    assert np.linalg.matrix_rank(p0) == 1
    assert close(p0 @ bell, bell)


def projector_family(sp, method="auto"):
    return [qoracle.stabilizer_projector(sp, CosetLabel.of(o), method=method) for o in sp.labels()]


def sparse_zero(m):
    return m.nnz == 0 or np.abs(m.data).max() <= TOL


@pytest.mark.parametrize("case", ["two-server", (4, 1, 2), (4, 2, 1)])
def test_projector_algebra(case):
    sp = two_server_space() if case == "two-server" else space_for(*case)
    f = sp.field
    ps = projector_family(sp)
    dim = f.q**sp.n
    assert close(sum(p.toarray() for p in ps), np.eye(dim))
    expected_rank = f.q ** (sp.n - sp.dim_v)
    for p in ps:
        assert sparse_zero(p @ p - p)
        assert sparse_zero(p - p.conj().T)
        # Hermitian idempotent: rank equals trace
        assert abs(p.diagonal().sum() - expected_rank) < TOL
    for i, j in itertools.combinations(range(len(ps)), 2):
        if (i + j) % 5 == 0:
            assert sparse_zero(ps[i] @ ps[j])


def test_projector_rank_by_eigenvalues():
    sp = space_for(4, 1, 2)
    p = qoracle.stabilizer_projector(sp, CosetLabel.of([1, 2, 0, 3])).toarray()
    assert np.sum(np.linalg.eigvalsh(p) > 0.5) == 4 ** (4 - sp.dim_v)


def test_rank_at_five_sites():
    sp = space_for(5, 2, 2)
    p = qoracle.stabilizer_projector(sp, CosetLabel.of([3, 1, 0, 5]))
    diff = p @ p - p
    assert diff.nnz == 0 or np.abs(diff.data).max() < TOL
    # for an idempotent, rank = trace
    assert abs(p.diagonal().sum() - 8 ** (5 - sp.dim_v)) < TOL


def test_sum_and_css_methods_agree():
    sp = space_for(4, 1, 2)
    for o in [(0, 0, 0, 0), (1, 2, 3, 0), (3, 3, 1, 2)]:
        a = qoracle.stabilizer_projector(sp, CosetLabel(o), method="sum").toarray()
        b = qoracle.stabilizer_projector(sp, CosetLabel(o), method="css").toarray()
        assert close(a, b)


def test_conjugation_covariance(rng):
    sp = space_for(4, 2, 1)
    f = sp.field
    for _ in range(5):
        s_label = CosetLabel.of(f.random(sp.label_length, rng))
        t = f.random(2 * sp.n, rng)
        w = qoracle.weyl_matrix(f, t).matrix
        lhs = (w @ qoracle.stabilizer_projector(sp, s_label) @ w.conj().T).toarray()
        shifted = CosetLabel.of(s_label.array() ^ sp.reduce(t))
        assert close(lhs, qoracle.stabilizer_projector(sp, shifted).toarray())


@pytest.mark.parametrize("case", ["two-server", (4, 1, 2), (5, 2, 2)])
def test_initial_state(case, rng):
    sp = two_server_space() if case == "two-server" else space_for(*case)
    f = sp.field
    rho = qoracle.initial_state(sp)
    rho.validate()
    assert abs(rho.trace() - 1) < TOL
    p0 = qoracle.stabilizer_projector(sp, CosetLabel((0,) * sp.label_length))
    assert abs(float((p0 @ rho.matrix).diagonal().sum().real) - 1) < TOL
    elements = linalg.span(f, sp.v_basis)
    for v in elements[rng.choice(len(elements), size=min(8, len(elements)), replace=False)]:
        diff = qoracle.conjugate(rho, qoracle.weyl_matrix(f, v)).matrix - rho.matrix
        assert diff.nnz == 0 or np.abs(diff.data).max() < TOL
    label, prob = qoracle.measure_pvm(rho, sp)
    assert label.is_zero() and abs(prob - 1) < TOL


def test_validate_rejects_bad_states():
    import scipy.sparse as sparse

    with pytest.raises(qoracle.NumericalIntegrityError):
        qoracle.DensityMatrix(sparse.csr_array(np.diag([0.5, 0.6]).astype(complex))).validate()
    with pytest.raises(qoracle.NumericalIntegrityError):
        qoracle.DensityMatrix(sparse.csr_array(np.diag([1.5, -0.5]).astype(complex))).validate()
    with pytest.raises(qoracle.NumericalIntegrityError):
        qoracle.DensityMatrix(sparse.csr_array(np.array([[0.5, 1], [0, 0.5]], complex))).validate()


@pytest.mark.parametrize("n,k,t", [(4, 1, 2), (4, 2, 1), (5, 2, 2)])
def test_measurement_after_weyl_matches_fast_label(n, k, t, rng):
    sp = space_for(n, k, t)
    f = sp.field
    rho = qoracle.initial_state(sp)
    for _ in range(3):
        b = f.random(2 * n, rng)
        moved = qoracle.conjugate(rho, qoracle.weyl_matrix(f, b))
        label, prob = qoracle.measure_pvm(moved, sp)
        assert np.array_equal(label.array(), sp.reduce(b)) and abs(prob - 1) < TOL


def test_characteristic_and_projector_distributions_agree(rng):
    sp = space_for(4, 1, 2)
    f = sp.field
    rho = qoracle.initial_state(sp)
    # mix two cosets so the distribution is not a point mass
    b1, b2 = f.random(8, rng), f.random(8, rng)
    m = 0.3 * qoracle.conjugate(rho, qoracle.weyl_matrix(f, b1)).matrix + 0.7 * qoracle.conjugate(rho, qoracle.weyl_matrix(f, b2)).matrix
    state = qoracle.DensityMatrix(m)
    d1 = qoracle.outcome_distribution(state, sp, "projectors")
    d2 = qoracle.outcome_distribution(state, sp, "characteristic")
    assert np.abs(d1 - d2).max() < TOL
    assert abs(d1.sum() - 1) < 1e-6
    labels = sp.labels()
    i1 = next(i for i, o in enumerate(labels) if np.array_equal(o, sp.reduce(b1)))
    assert d1[i1] >= 0.3 - TOL
    drawn, p = qoracle.measure_pvm(state, sp, rng=np.random.default_rng(1))
    assert p > 0.29


def test_measurement_integrity_error():
    import scipy.sparse as sparse

    sp = two_server_space()
    bad = qoracle.DensityMatrix(sparse.csr_array(np.eye(4, dtype=complex)))
    with pytest.raises(qoracle.NumericalIntegrityError):
        qoracle.measure_pvm(bad, sp)
