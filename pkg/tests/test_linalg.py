import numpy as np
import pytest

from regmodbp import linalg


def test_submatrix_identity_case():
    eye = np.eye(3)
    got = linalg.submatrix_cols(eye, [0, 2])
    assert np.array_equal(got, eye[:, [0, 2]])


def test_submatrix_empty_set():
    a = np.arange(12.0).reshape(3, 4)
    got = linalg.submatrix_cols(a, [])
    assert got.shape == (3, 0)


def test_submatrix_against_direct_indexing():
    fixture = np.array([[float(10 * r + c) for c in range(6)] for r in range(4)])
    sel = [1, 3, 4]
    got = linalg.submatrix_cols(fixture, sel)
    for r in range(4):
        for j, c in enumerate(sel):
            assert got[r, j] == fixture[r, c]


def test_submatrix_out_of_range():
    with pytest.raises(IndexError):
        linalg.submatrix_cols(np.eye(3), [0, 3])


def test_solve_spd_identity():
    b = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    assert np.array_equal(linalg.solve_spd(np.eye(3), b), b)


def test_solve_spd_diagonal():
    x = linalg.solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 8.0]))
    assert np.allclose(x, [1.0, 2.0], atol=1e-14)


def test_solve_spd_residual(np_rng):
    r = np_rng.standard_normal((5, 5))
    g = r.T @ r + np.eye(5)
    b = np_rng.standard_normal((5, 3))
    x = linalg.solve_spd(g, b)
    assert np.abs(g @ x - b).max() <= 1e-9 * (1 + np.abs(b).max())


def test_solve_spd_rejects_indefinite():
    g = np.diag([1.0, -1.0, 2.0])
    with pytest.raises(linalg.NotSpdError) as exc:
        linalg.solve_spd(g, np.ones(3))
    assert exc.value.pivot == 1


def test_solve_spd_rejects_asymmetric():
    g = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError, match="symmetric"):
        linalg.solve_spd(g, np.ones(2))


def test_sym_eigvals_diagonal():
    assert np.allclose(linalg.sym_eigvals(np.diag([3.0, 1.0, 2.0])),
                       [1.0, 2.0, 3.0], atol=1e-14)


def test_sym_eigvals_2x2_closed_form():
    for c in (0.3, -0.77, 0.0):
        g = np.array([[1.0, c], [c, 1.0]])
        assert np.allclose(linalg.sym_eigvals(g), [1 - abs(c), 1 + abs(c)],
                           atol=1e-12)


def test_sym_eigvals_trace_det_oracle(np_rng):
    r = np_rng.standard_normal((6, 6))
    g = (r + r.T) / 2
    ev = linalg.sym_eigvals(g)
    assert abs(ev.sum() - np.trace(g)) < 1e-8
    assert abs(np.prod(ev) - np.linalg.det(g)) < 1e-8


def test_sym_eigvals_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        linalg.sym_eigvals(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_operator_norm_identity():
    assert abs(linalg.operator_norm(np.eye(5)) - 1.0) < 1e-12


def test_operator_norm_rank_one():
    u = np.array([2.0, 0.0, 0.0])
    v = np.array([0.0, 3.0])
    assert abs(linalg.operator_norm(np.outer(u, v)) - 6.0) < 1e-12


def test_operator_norm_sampling_oracle(np_rng):
    b = np_rng.standard_normal((4, 7))
    norm = linalg.operator_norm(b)
    x = np_rng.standard_normal((7, 100000))
    x /= np.linalg.norm(x, axis=0)
    gains = np.linalg.norm(b @ x, axis=0)
    assert gains.max() <= norm + 1e-12
    # refine the best random direction; stays a lower bound throughout
    best = x[:, np.argmax(gains)]
    val = gains.max()
    sigma = 0.3
    for _ in range(400):
        cand = best + sigma * np_rng.standard_normal(7)
        cand /= np.linalg.norm(cand)
        v = np.linalg.norm(b @ cand)
        if v > val:
            best, val = cand, v
        else:
            sigma *= 0.99
    assert val <= norm + 1e-12
    assert norm - val < 1e-3 * norm


def test_operator_norm_transpose_invariance(np_rng):
    b = np_rng.standard_normal((5, 9))
    assert abs(linalg.operator_norm(b) - linalg.operator_norm(b.T)) < 1e-10


def test_projector_empty_set():
    assert np.array_equal(linalg.projector(np.eye(4), []), np.eye(4))


def test_projector_orthonormal_case(np_rng):
    q, _ = np.linalg.qr(np_rng.standard_normal((6, 6)))
    a = q[:, :4]
    m = linalg.projector(a, [0, 1])
    direct = np.eye(6) - a[:, :2] @ a[:, :2].T
    assert np.abs(m - direct).max() < 1e-12


def test_projector_identities(np_rng):
    a = np_rng.standard_normal((6, 10))
    s = [0, 1, 2]
    m = linalg.projector(a, s)
    assert np.abs(m @ m - m).max() < 1e-10
    assert np.abs(m - m.T).max() < 1e-10
    assert np.abs(m @ a[:, s]).max() < 1e-10


def test_projector_singular_gram():
    a = np.ones((4, 3))  # duplicated columns
    with pytest.raises(ValueError, match="support Gram singular"):
        linalg.projector(a, [0, 1])


def test_index_set_sorted_unique():
    s = linalg.index_set([5, 1, 5, 3])
    assert np.array_equal(s, [1, 3, 5])


def test_set_algebra():
    a, b = [1, 3, 5], [3, 4]
    assert np.array_equal(linalg.set_union(a, b), [1, 3, 4, 5])
    assert np.array_equal(linalg.set_diff(a, b), [1, 5])
    assert np.array_equal(linalg.set_intersect(a, b), [3])
    assert np.array_equal(linalg.complement([0, 2], 4), [1, 3])


def test_matrix_csv_roundtrip(tmp_path, np_rng):
    a = np_rng.standard_normal((4, 6)) * np.pi
    path = tmp_path / "a.csv"
    linalg.write_matrix_csv(path, a)
    back = linalg.read_matrix_csv(path)
    assert np.array_equal(a, back)


def test_vector_csv_roundtrip(tmp_path, np_rng):
    v = np_rng.standard_normal(9) / 3.0
    path = tmp_path / "v.csv"
    linalg.write_vector_csv(path, v)
    assert np.array_equal(v, linalg.read_vector_csv(path))
