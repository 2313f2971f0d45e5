import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from richardson_mimo.errors import (
    DimensionError,
    DomainError,
    FactorizationError,
    PreconditionerError,
    UnsupportedRowError,
)
from richardson_mimo.linsolve import (
    SpdMatrix,
    cholesky_solve,
    convergence_interval,
    count_multiplications,
    estimate_lambda_max,
    is_spd,
    neumann_solve,
    richardson_solve,
    spectral_radius_of_iteration_matrix,
)
from richardson_mimo.mimo import build_filtering_system, complex_to_real, generate_channel


def random_spd(rng, n, rows_per_dim=4, shift=0.1):
    m = rng.standard_normal((rows_per_dim * n, n))
    return SpdMatrix.symmetrized(m.T @ m / (rows_per_dim * n) + shift * np.eye(n))


def channel_w(seed, n_rx, n_users, sigma2):
    h = generate_channel(n_rx, n_users, seed)
    return build_filtering_system(complex_to_real(h, np.zeros(n_rx), sigma2)).w_matrix.entries


# ---------------------------------------------------------------- is_spd


def test_is_spd_identity():
    assert is_spd(np.eye(4), 0.0)


def test_is_spd_indefinite_swap():
    assert not is_spd(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.0)


def test_is_spd_channel_w_agrees_with_eigen_oracle():
    w = channel_w(3, 8, 2, 0.1)
    assert np.all(np.linalg.eigvalsh(w) > 0)
    assert is_spd(w, 0.0)


def test_is_spd_rejects_asymmetry_beyond_tol():
    a = np.eye(3)
    a[0, 1] = 1e-6
    assert not is_spd(a, 1e-9)
    assert is_spd(a, 1e-5)


def test_is_spd_non_square():
    with pytest.raises(DimensionError):
        is_spd(np.ones((2, 3)))


def test_spd_matrix_requires_exact_symmetry():
    with pytest.raises(DomainError):
        SpdMatrix(np.array([[1.0, 0.5], [0.5 + 1e-15, 1.0]]))
    a = np.random.default_rng(0).standard_normal((5, 5))
    s = SpdMatrix.symmetrized(a)
    assert np.array_equal(s.entries, s.entries.T)


# ---------------------------------------------------------- cholesky_solve


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky_solve(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_cholesky_diagonal():
    np.testing.assert_allclose(cholesky_solve(np.diag([2.0, 4.0]), [2.0, 4.0]), [1.0, 1.0])


def test_cholesky_matches_direct_inverse():
    rng = np.random.default_rng(11)
    a = random_spd(rng, 6)
    b = rng.standard_normal(6)
    expected = np.linalg.inv(a.entries) @ b
    np.testing.assert_allclose(cholesky_solve(a, b), expected, rtol=1e-9, atol=1e-12)


def test_cholesky_reports_failing_pivot():
    a = np.diag([1.0, 2.0, -1.0, 4.0])
    with pytest.raises(FactorizationError) as info:
        cholesky_solve(a, np.ones(4))
    assert info.value.index == 2


def test_cholesky_block_rhs():
    rng = np.random.default_rng(5)
    a = random_spd(rng, 5)
    b = rng.standard_normal((5, 3))
    np.testing.assert_allclose(a.entries @ cholesky_solve(a, b), b, atol=1e-10)


def test_cholesky_dimension_mismatch():
    with pytest.raises(DimensionError):
        cholesky_solve(np.eye(3), np.ones(4))


# -------------------------------------------------------- richardson_solve


def test_richardson_one_step_identity():
    tr = richardson_solve(np.eye(2), [5.0, 7.0], 1.0, 1)
    np.testing.assert_array_equal(tr.iterates[1], [5.0, 7.0])


def test_richardson_zero_iterations_returns_x0():
    tr = richardson_solve(np.diag([3.0, 4.0]), [1.0, 2.0], 0.5, 0, x0=[1.0, 1.0])
    assert len(tr.iterates) == 1
    np.testing.assert_array_equal(tr.iterates[0], [1.0, 1.0])
    assert len(tr.residual_norms) == 1 and tr.mult_count == 0


def _scalar_recursion(diag, b, w, iters):
    # per-component unrolling of x <- x + w (b - a x) with plain floats
    xs = [[0.0] * len(diag)]
    for _ in range(iters):
        prev = xs[-1]
        xs.append([p + w * (bi - d * p) for p, d, bi in zip(prev, diag, b)])
    return xs


def test_richardson_hand_unrolled():
    expected = _scalar_recursion([2.0, 4.0], [2.0, 4.0], 0.25, 2)
    assert expected[1] == [0.5, 1.0] and expected[2] == [0.75, 1.0]
    tr = richardson_solve(np.diag([2.0, 4.0]), [2.0, 4.0], 0.25, 2)
    np.testing.assert_array_equal(tr.iterates[1], expected[1])
    np.testing.assert_array_equal(tr.iterates[2], expected[2])


def test_richardson_iterates_follow_update_exactly():
    rng = np.random.default_rng(2)
    a = random_spd(rng, 7).entries
    b = rng.standard_normal(7)
    tr = richardson_solve(a, b, 0.3, 6)
    assert len(tr.iterates) == len(tr.residual_norms) == 7
    for k in range(6):
        x = tr.iterates[k]
        np.testing.assert_array_equal(tr.iterates[k + 1], x + 0.3 * (b - a @ x))
        assert tr.residual_norms[k] == pytest.approx(np.linalg.norm(b - a @ x))


def test_richardson_records_divergence():
    tr = richardson_solve(np.diag([1.0, 10.0]), [1.0, 1.0], 0.5, 20)
    assert tr.residual_norms[-1] > 1e6 * tr.residual_norms[0]


def test_richardson_bad_arguments():
    with pytest.raises(DimensionError):
        richardson_solve(np.eye(2), [1.0, 2.0], 0.5, 3, x0=[0.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        richardson_solve(np.eye(2), [1.0, 2.0], 0.0, 3)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 12), frac=st.floats(0.05, 0.99))
def test_richardson_contraction(seed, n, frac):
    rng = np.random.default_rng(seed)
    a = random_spd(rng, n).entries
    b = rng.standard_normal(n)
    lam_max = np.linalg.eigvalsh(a)[-1]
    w = frac * 2.0 / lam_max
    rho = spectral_radius_of_iteration_matrix(a, w)
    x_star = cholesky_solve(a, b)
    tr = richardson_solve(a, b, w, 15)
    bound = 1e-9 * np.linalg.norm(x_star)
    for k in range(15):
        e0 = np.linalg.norm(tr.iterates[k] - x_star)
        e1 = np.linalg.norm(tr.iterates[k + 1] - x_star)
        assert e1 <= rho * e0 + bound


# ----------------------------------------------------------- neumann_solve


def _neumann_oracle(a, b, iters):
    x_inv = np.diag(1.0 / np.diag(a))
    step = x_inv @ (np.diag(np.diag(a)) - a)
    return sum(np.linalg.matrix_power(step, k) @ x_inv @ b for k in range(iters))


def test_neumann_diagonal_is_exact_after_one_term():
    a = np.diag([2.0, 5.0, 0.5])
    b = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(neumann_solve(a, b, 1).solution, b / np.diag(a))


def test_neumann_first_term():
    np.testing.assert_allclose(neumann_solve([[2.0, 1.0], [1.0, 2.0]], [3.0, 3.0], 1).solution, [1.5, 1.5])


def test_neumann_converges_to_direct_solution():
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    direct = np.linalg.inv(a) @ np.array([3.0, 3.0])
    np.testing.assert_allclose(direct, [1.0, 1.0])
    np.testing.assert_allclose(neumann_solve(a, [3.0, 3.0], 60).solution, direct, atol=1e-12)


@pytest.mark.parametrize("iters", [1, 2, 3, 4, 5, 8])
def test_neumann_matches_power_series_oracle(iters):
    rng = np.random.default_rng(iters)
    a = random_spd(rng, 9, rows_per_dim=8).entries
    b = rng.standard_normal(9)
    tr = neumann_solve(a, b, iters)
    np.testing.assert_allclose(tr.solution, _neumann_oracle(a, b, iters), rtol=1e-10, atol=1e-12)
    assert len(tr.iterates) == iters + 1
    for k in range(1, iters + 1):
        np.testing.assert_allclose(tr.iterates[k], _neumann_oracle(a, b, k), rtol=1e-10, atol=1e-12)


def test_neumann_zero_diagonal():
    with pytest.raises(PreconditionerError):
        neumann_solve(np.array([[0.0, 1.0], [1.0, 2.0]]), [1.0, 1.0], 2)


def test_neumann_block_rhs_matches_columns():
    rng = np.random.default_rng(8)
    a = random_spd(rng, 6, rows_per_dim=8).entries
    b = rng.standard_normal((6, 4))
    block = neumann_solve(a, b, 4).solution
    for j in range(4):
        np.testing.assert_allclose(block[:, j], neumann_solve(a, b[:, j], 4).solution, rtol=1e-12)


# ------------------------------------------------------ spectral utilities


def test_lambda_max_diagonal():
    est = estimate_lambda_max(np.diag([1.0, 2.0, 5.0]))
    assert est.converged
    assert est.value == pytest.approx(5.0, rel=1e-6)
    assert est.value <= 5.0


def test_lambda_max_identity():
    est = estimate_lambda_max(np.eye(6))
    assert est.value == pytest.approx(1.0) and est.converged


@pytest.mark.parametrize("seed", range(5))
def test_lambda_max_matches_dense_eigensolver(seed):
    rng = np.random.default_rng(seed)
    a = random_spd(rng, 10).entries
    lam = np.linalg.eigvalsh(a)[-1]
    est = estimate_lambda_max(a, tol=1e-10, max_steps=5000)
    assert est.converged
    assert est.value <= lam * (1 + 1e-12)
    assert est.value == pytest.approx(lam, rel=1e-6)


def test_lambda_max_flags_unconverged():
    a = random_spd(np.random.default_rng(1), 12).entries
    est = estimate_lambda_max(a, tol=1e-15, max_steps=3)
    assert not est.converged and est.steps == 3 and est.value > 0


def test_convergence_interval():
    assert convergence_interval(1.0) == (0.0, 2.0)
    assert convergence_interval(4.0) == (0.0, 0.5)
    with pytest.raises(DomainError):
        convergence_interval(0.0)


@pytest.mark.parametrize(
    "diag, w, expected",
    [([1.0, 1.0, 1.0], 0.5, 0.5), ([1.0, 2.0], 1.0, 1.0), ([1.0, 3.0], 0.5, 0.5)],
)
def test_spectral_radius(diag, w, expected):
    hand = max(abs(1 - w * lam) for lam in diag)
    assert hand == expected
    assert spectral_radius_of_iteration_matrix(np.diag(diag), w) == pytest.approx(expected)


# --------------------------------------------------- count_multiplications


def test_count_examples():
    assert count_multiplications("richardson", 16, 5) == 5280
    assert count_multiplications("neumann", 16, 2) == 3008
    assert count_multiplications("richardson", 1, 1) == 6


def test_count_neumann_rows_only():
    for bad in (1, 6):
        with pytest.raises(UnsupportedRowError):
            count_multiplications("neumann", 16, bad)
    with pytest.raises(DomainError):
        count_multiplications("jacobi", 4, 2)


def _naive_cholesky_solve_count(n):
    # mirror a textbook triple loop and count every product and pivot division
    count = 0
    for j in range(n):
        count += j  # sum of squares on the diagonal
        for i in range(j + 1, n):
            count += j + 1  # dot product then division by L[j, j]
    for i in range(n):  # forward then backward substitution
        count += 2 * (i + 1)
    return count


@pytest.mark.parametrize("K", [1, 2, 5, 16])
def test_count_exact_matches_naive_loop(K):
    assert count_multiplications("exact", K, 1) == _naive_cholesky_solve_count(2 * K)


@pytest.mark.parametrize("K", [1, 3, 8])
@pytest.mark.parametrize("iters", [2, 3, 4, 5])
def test_instrumented_counts_match_closed_form(K, iters):
    rng = np.random.default_rng(K * 10 + iters)
    a = random_spd(rng, 2 * K, rows_per_dim=8).entries
    b = rng.standard_normal(2 * K)
    assert richardson_solve(a, b, 0.1, iters).mult_count == count_multiplications("richardson", K, iters)
    assert neumann_solve(a, b, iters).mult_count == count_multiplications("neumann", K, iters)
