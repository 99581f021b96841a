import numpy as np
import pytest

from histreg import DimensionMismatch, Histogram, SingularDesign, gram, nnls, ols
from histreg.histcore import constant, qf_center
from histreg.solver import QfMatrix, rcond

from oracles import nnls_faces, random_histogram, random_table


def random_pd(rng, m):
    a = rng.normal(size=(m + 3, m))
    return a.T @ a, a.T @ rng.normal(size=m + 3)


def test_gram_of_flat_entries_is_matrix_product(rng):
    a, b = rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
    g = gram(QfMatrix.from_scalars(a), QfMatrix.from_scalars(b))
    assert np.allclose(g, a.T @ b, atol=1e-12)


def test_gram_single_uniform():
    u = QfMatrix([[Histogram.interval(0, 1).quantile_function]])
    assert gram(u, u)[0, 0] == pytest.approx(1 / 3)


def test_gram_of_centered_blood_column(blood):
    xc = QfMatrix.from_columns([[qf_center(h.quantile_function) for h in blood.predictors["X"]]])
    expected = sum(h.quantile_function.std ** 2 for h in blood.predictors["X"])
    assert gram(xc, xc)[0, 0] == pytest.approx(expected, abs=1e-9)


def test_gram_transpose_and_shape_check(rng):
    a = QfMatrix([[random_histogram(rng).quantile_function for _ in range(3)] for _ in range(6)])
    b = QfMatrix([[random_histogram(rng).quantile_function for _ in range(2)] for _ in range(6)])
    assert np.allclose(gram(a, b), gram(b, a).T, rtol=0, atol=1e-12 * np.abs(gram(a, b)).max())
    with pytest.raises(DimensionMismatch):
        gram(a, QfMatrix([[constant(1.0)]]))


def test_means_design_orthogonal_to_centered_functions(rng):
    for _ in range(50):
        tbl = random_table(rng)
        cols = list(tbl.predictors.values())
        means = QfMatrix.from_scalars(np.column_stack([np.ones(tbl.n)] + [[h.mean for h in c] for c in cols]))
        centered = QfMatrix.from_columns([[qf_center(h.quantile_function) for h in c] for c in cols])
        assert np.abs(gram(means, centered)).max() <= 1e-9


def test_ols_examples():
    c = np.array([1.0, -2.0, 3.0])
    assert np.allclose(ols(np.eye(3), c), c)
    assert ols(np.array([[4.0]]), np.array([2.0])) == pytest.approx([0.5])


def test_ols_residual(rng):
    g, c = random_pd(rng, 5)
    b = ols(g, c)
    assert np.linalg.norm(g @ b - c) <= 1e-8 * np.linalg.norm(c)


def test_ols_singular():
    with pytest.raises(SingularDesign):
        ols(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 1.0]))
    assert rcond(np.zeros((2, 2))) == 0.0


def test_nnls_interior_equals_ols():
    g = np.array([[2.0, 0.5], [0.5, 1.0]])
    b_true = np.array([1.0, 2.0])
    res = nnls(g, g @ b_true)
    assert np.allclose(res.coefficients, b_true, atol=1e-12)
    assert res.active_set == ()


def test_nnls_boundary_one_dimensional():
    res = nnls(np.array([[2.0]]), np.array([-1.0]))
    assert res.coefficients.tolist() == [0.0]
    assert res.active_set == (0,)
    assert res.gradient[0] == pytest.approx(1.0)


def test_nnls_diagonal(rng):
    d = rng.uniform(0.5, 3.0, 6)
    c = rng.normal(size=6)
    res = nnls(np.diag(d), c)
    assert np.allclose(res.coefficients, np.maximum(c / d, 0), atol=1e-10)


def test_nnls_matches_face_enumeration(rng):
    for _ in range(100):
        m = int(rng.integers(1, 7))
        g, c = random_pd(rng, m)
        res = nnls(g, c)
        best, best_val = nnls_faces(g, c)
        assert np.allclose(res.coefficients, best, atol=1e-8)
        obj = res.coefficients @ g @ res.coefficients - 2 * c @ res.coefficients
        assert obj == pytest.approx(best_val, abs=1e-8 * (1 + abs(best_val)))


def test_nnls_kkt_and_objective_bounds(rng):
    for _ in range(100):
        m = int(rng.integers(1, 8))
        g, c = random_pd(rng, m)
        res = nnls(g, c)
        tol = 1e-8 * np.trace(g)
        b = res.coefficients
        free = [j for j in range(m) if j not in res.active_set]
        assert np.all(b >= 0)
        assert np.all(np.abs(res.gradient[free]) <= tol)
        assert np.all(res.gradient[list(res.active_set)] >= -tol)
        assert res.iterations <= 3 * m

        def obj(x):
            return x @ g @ x - 2 * c @ x

        assert obj(b) <= 1e-12
        assert obj(b) <= obj(np.maximum(np.linalg.solve(g, c), 0)) + 1e-9


def test_nnls_shape_check():
    with pytest.raises(DimensionMismatch):
        nnls(np.eye(2), np.ones(3))
