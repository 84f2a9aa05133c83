import numpy as np
import pytest

from spiked_unfold.linalg import (MatrixFreeOperator, NonConvergenceError,
                                  ShiftInsideSpectrumError,
                                  deflated_second_value, dense_spectral_summary,
                                  full_singular_values, gram,
                                  shifted_gram_solve, top_singular_triple)


def test_top_singular_triple_rank_one_exact():
    M = np.zeros((2, 3))
    M[0, 0] = 3.0
    t = top_singular_triple(MatrixFreeOperator.from_dense(M), seed=5)
    assert t.value == pytest.approx(3.0, abs=1e-12)
    assert np.allclose(np.abs(t.left), [1.0, 0.0], atol=1e-12)
    assert np.allclose(np.abs(t.right), [1.0, 0.0, 0.0], atol=1e-12)
    # sign convention: largest-magnitude component positive
    assert t.left[0] > 0 and t.right[0] > 0


def test_top_singular_triple_zero_operator_errors():
    with pytest.raises(NonConvergenceError):
        top_singular_triple(MatrixFreeOperator.from_dense(np.zeros((2, 2))), seed=0)


def test_top_singular_triple_exhausts_iterations():
    rng = np.random.default_rng(3)
    op = MatrixFreeOperator.from_dense(rng.standard_normal((8, 8)))
    with pytest.raises(NonConvergenceError) as err:
        top_singular_triple(op, seed=0, max_iter=1)
    assert err.value.iterations == 1
    assert err.value.value is not None and err.value.value > 0


@pytest.mark.parametrize("seed", range(20))
def test_power_iteration_matches_dense_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(5, 61))
    m = int(rng.integers(n, 4 * n))
    M = rng.standard_normal((n, m)) / np.sqrt(n)
    t = top_singular_triple(MatrixFreeOperator.from_dense(M), seed=seed)
    s_dense = full_singular_values(M)[0]
    assert abs(t.value - s_dense) <= 1e-8
    # triple self-consistency: the vector residual scales like the square
    # root of the Rayleigh tolerance
    assert np.linalg.norm(M @ t.right - t.value * t.left) <= 1e-4 * t.value
    assert abs(np.linalg.norm(t.left) - 1) <= 1e-12
    assert abs(np.linalg.norm(t.right) - 1) <= 1e-12


def test_top_singular_triple_seeded_gaussian_50x200():
    rng = np.random.default_rng(42)
    M = rng.standard_normal((50, 200)) / np.sqrt(50)
    t = top_singular_triple(MatrixFreeOperator.from_dense(M), seed=7)
    assert abs(t.value - full_singular_values(M)[0]) <= 1e-8


def test_top_singular_triple_gram_path_agrees():
    rng = np.random.default_rng(11)
    M = rng.standard_normal((20, 80))
    base = MatrixFreeOperator.from_dense(M)
    G = gram(M)
    fused = MatrixFreeOperator(rows=20, cols=80, apply=base.apply,
                               apply_t=base.apply_t, apply_gram=lambda w: G @ w)
    t0 = top_singular_triple(base, seed=3)
    t1 = top_singular_triple(fused, seed=3)
    assert abs(t0.value - t1.value) <= 1e-9


def test_adjoint_consistency_probes():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((17, 41))
    op = MatrixFreeOperator.from_dense(M)
    for _ in range(100):
        x = rng.standard_normal(41)
        y = rng.standard_normal(17)
        lhs = y @ op.apply(x)
        rhs = op.apply_t(y) @ x
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


def test_full_singular_values_diagonal():
    M = np.array([[3.0, 0.0, 0.0], [0.0, 4.0, 0.0]])
    assert np.allclose(full_singular_values(M), [4.0, 3.0], atol=1e-12)


def test_full_singular_values_identity():
    assert np.allclose(full_singular_values(np.eye(3)), [1.0, 1.0, 1.0], atol=1e-12)


def test_full_singular_values_noise_edge():
    # 200x800 noise with entry variance 1/200: top edge at phi + 1 = 3
    rng = np.random.default_rng(2024)
    M = rng.standard_normal((200, 800)) / np.sqrt(200)
    s = full_singular_values(M)
    assert abs(s[0] - 3.0) <= 0.05
    assert s.shape == (200,)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)


def test_full_singular_values_transpose_invariance():
    rng = np.random.default_rng(5)
    M = rng.standard_normal((30, 70))
    assert np.allclose(full_singular_values(M), full_singular_values(M.T),
                       atol=1e-10)


def test_full_singular_values_rejects_nonfinite():
    M = np.ones((2, 3))
    M[0, 1] = np.nan
    with pytest.raises(ValueError):
        full_singular_values(M)


def test_gram_small_examples():
    assert np.allclose(gram(np.array([[1.0, 2.0]])), [[5.0]], atol=0)
    assert np.allclose(gram(np.eye(2)), np.eye(2), atol=0)


def test_gram_matches_row_dot_products():
    rng = np.random.default_rng(8)
    M = rng.standard_normal((20, 50))
    G = gram(M)
    for i in range(20):
        for j in range(20):
            assert abs(G[i, j] - M[i] @ M[j]) <= 1e-14 * max(1.0, abs(G[i, j]))
    assert np.array_equal(G, G.T)


def test_shifted_gram_solve_zero_matrix():
    w = shifted_gram_solve(np.zeros((2, 2)), 2.0, np.array([1.0, 0.0]))
    assert np.allclose(w, [0.5, 0.0], atol=1e-15)


def test_shifted_gram_solve_diagonal():
    M = np.array([[1.0, 0.0], [0.0, 0.0]])
    w = shifted_gram_solve(M, 2.0, np.array([1.0, 0.0]))
    assert np.allclose(w, [2.0 / 3.0, 0.0], atol=1e-15)


def test_shifted_gram_solve_residual():
    rng = np.random.default_rng(12)
    M = rng.standard_normal((30, 120)) / np.sqrt(30)
    b = rng.standard_normal(30)
    x = full_singular_values(M)[0] + 0.5
    w = shifted_gram_solve(M, x, b)
    resid = x * w - (M @ (M.T @ w)) / x - b
    assert np.linalg.norm(resid) <= 1e-10 * np.linalg.norm(b)


def test_shifted_gram_solve_rejects_shift_inside_spectrum():
    rng = np.random.default_rng(13)
    M = rng.standard_normal((10, 40)) / np.sqrt(10)
    inside = 0.5 * full_singular_values(M)[0]
    with pytest.raises(ShiftInsideSpectrumError):
        shifted_gram_solve(M, inside, np.ones(10))


def test_dense_spectral_summary_matches_svd():
    rng = np.random.default_rng(21)
    M = rng.standard_normal((12, 30))
    summ = dense_spectral_summary(M, want_spectrum=True)
    u, s, vt = np.linalg.svd(M)
    assert abs(summ.top.value - s[0]) <= 1e-10
    assert summ.second_value == pytest.approx(s[1], abs=1e-10)
    assert np.allclose(summ.full_spectrum, s, atol=1e-10)
    assert abs(abs(summ.top.left @ u[:, 0]) - 1.0) <= 1e-10
    assert abs(abs(summ.top.right @ vt[0])) == pytest.approx(1.0, abs=1e-10)
    assert abs(summ.top.value - summ.full_spectrum[0]) <= 1e-10


def test_deflated_second_value():
    rng = np.random.default_rng(30)
    M = rng.standard_normal((15, 40))
    op = MatrixFreeOperator.from_dense(M)
    top = top_singular_triple(op, seed=2)
    s2 = deflated_second_value(op, top, seed=2)
    assert s2 == pytest.approx(np.linalg.svd(M, compute_uv=False)[1], abs=1e-7)
