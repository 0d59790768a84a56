import numpy as np
import pytest

from mimome import cmatrix
from mimome.errors import DomainError, KKTError


def random_complex(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_psd(rng, n):
    x = random_complex(rng, n, n + 2)
    return x @ x.conj().T


# -- logdet_ipa ----------------------------------------------------------


def test_logdet_zero_matrix():
    for n in (1, 2, 4):
        assert cmatrix.logdet_ipa(np.zeros((n, n))) == 0.0


def test_logdet_diagonal():
    # det(I + diag(1, 3)) = 2 * 4
    assert cmatrix.logdet_ipa(np.diag([1.0, 3.0])) == pytest.approx(np.log(8.0), rel=1e-14)


def test_logdet_matches_eigenvalue_oracle():
    rng = np.random.default_rng(1)
    a = random_psd(rng, 3)
    oracle = np.sum(np.log1p(np.linalg.eigvalsh(a)))
    assert cmatrix.logdet_ipa(a) == pytest.approx(oracle, rel=1e-10)


def test_logdet_batched_matches_loop():
    rng = np.random.default_rng(2)
    stack = np.stack([random_psd(rng, 3) for _ in range(5)])
    batched = cmatrix.logdet_ipa(stack)
    for k in range(5):
        assert batched[k] == pytest.approx(cmatrix.logdet_ipa(stack[k]), rel=1e-13)


def test_logdet_nonnegative_for_psd():
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert cmatrix.logdet_ipa(random_psd(rng, 3)) >= 0.0


def test_logdet_rejects_nonfinite():
    a = np.array([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        cmatrix.logdet_ipa(a)


def test_logdet_singular_raises_domain_error():
    with pytest.raises(DomainError):
        cmatrix.logdet_ipa(np.diag([-1.0, 0.0]))


# -- kron ----------------------------------------------------------------


def test_kron_scalar_identity():
    rng = np.random.default_rng(4)
    b = random_complex(rng, 2, 3)
    assert np.array_equal(cmatrix.kron(np.array([[1.0]]), b), b)


def test_kron_identity_blocks():
    assert np.array_equal(cmatrix.kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_matches_definitional_loop():
    rng = np.random.default_rng(5)
    a = random_complex(rng, 2, 2)
    b = random_complex(rng, 2, 3)
    k = cmatrix.kron(a, b)
    for i in range(2):
        for j in range(2):
            for r in range(2):
                for c in range(3):
                    assert k[i * 2 + r, j * 3 + c] == a[i, j] * b[r, c]


def test_kron_bilinear():
    rng = np.random.default_rng(6)
    a, b, c = (random_complex(rng, 2, 2) for _ in range(3))
    lhs = cmatrix.kron(a + b, c)
    rhs = cmatrix.kron(a, c) + cmatrix.kron(b, c)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_kron_size_guard():
    big = np.ones((20000, 1))
    with pytest.raises(ValueError):
        cmatrix.kron(big, big)


# -- vec / commutation ---------------------------------------------------


def test_vec_column_major():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(cmatrix.vec(a), [1.0, 3.0, 2.0, 4.0])


def test_vec_of_column_vector_is_itself():
    v = np.arange(4.0).reshape(4, 1)
    assert np.array_equal(cmatrix.vec(v), v.ravel())


def test_unvec_round_trip():
    rng = np.random.default_rng(7)
    a = random_complex(rng, 3, 5)
    assert np.array_equal(cmatrix.unvec(cmatrix.vec(a), 3, 5), a)


def test_vec_sandwich_identity():
    # vec(A X B) = (B^T kron A) vec(X)
    rng = np.random.default_rng(8)
    a = random_complex(rng, 2, 3)
    x = random_complex(rng, 3, 4)
    b = random_complex(rng, 4, 2)
    lhs = cmatrix.vec(a @ x @ b)
    rhs = cmatrix.kron(b.T, a) @ cmatrix.vec(x)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_commutation_trivial():
    assert np.array_equal(cmatrix.commutation_matrix(1, 1), [[1.0]])


def test_commutation_2x2_swaps_middle():
    k = cmatrix.commutation_matrix(2, 2)
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[3, 3] = 1.0
    expected[1, 2] = expected[2, 1] = 1.0
    assert np.array_equal(k, expected)


def test_commutation_transposes_vec():
    rng = np.random.default_rng(9)
    a = random_complex(rng, 3, 4)
    k = cmatrix.commutation_matrix(3, 4)
    assert np.array_equal(cmatrix.vec(a.T), k @ cmatrix.vec(a))


def test_commutation_inverse_pair():
    k_pq = cmatrix.commutation_matrix(3, 4)
    k_qp = cmatrix.commutation_matrix(4, 3)
    assert np.array_equal(k_pq @ k_qp, np.eye(12))


# -- solve_kkt -----------------------------------------------------------


def test_kkt_zero_residual_gives_zero_step():
    h = -np.eye(2)
    a = np.eye(2)[:1]
    delta = cmatrix.solve_kkt(h, a, np.zeros(3))
    assert np.array_equal(delta, np.zeros(3))


def test_kkt_matches_direct_inversion():
    h = np.diag([-2.0, -3.0])
    a = np.array([[1.0, 1.0]])
    r = np.array([0.5, -1.0, 0.25])
    kkt = np.block([[h, a.T], [a, np.zeros((1, 1))]])
    expected = np.linalg.solve(kkt, -r)
    assert np.allclose(cmatrix.solve_kkt(h, a, r), expected, rtol=1e-12)


def test_kkt_residual_small_for_random_system():
    rng = np.random.default_rng(10)
    h = -(random_psd(rng, 4).real + 4 * np.eye(4))
    a = rng.standard_normal((2, 4))
    r = rng.standard_normal(6)
    delta = cmatrix.solve_kkt(h, a, r)
    kkt = np.block([[h, a.T], [a, np.zeros((2, 2))]])
    assert np.linalg.norm(kkt @ delta + r) < 1e-8 * np.linalg.norm(r)


def test_kkt_singular_raises_with_condition():
    h = np.zeros((2, 2))
    a = np.zeros((1, 2))
    with pytest.raises(KKTError) as err:
        cmatrix.solve_kkt(h, a, np.ones(3))
    assert err.value.condition is None or err.value.condition > 1e8


# -- Hermitian parametrization -------------------------------------------


def test_hermitize_exact_closure():
    rng = np.random.default_rng(11)
    a = random_complex(rng, 3, 3)
    h = cmatrix.hermitize(a)
    assert np.abs(h - h.conj().T).max() == 0.0


def test_param_round_trip():
    rng = np.random.default_rng(12)
    a = cmatrix.hermitize(random_complex(rng, 3, 3))
    theta = cmatrix.hermitian_to_params(a)
    assert theta.shape == (9,)
    assert np.array_equal(cmatrix.params_to_hermitian(theta), a)


def test_basis_matches_parametrization():
    # params_to_hermitian(theta) must equal sum_alpha theta_alpha * basis_alpha
    rng = np.random.default_rng(13)
    n = 3
    theta = rng.standard_normal(n * n)
    direct = cmatrix.params_to_hermitian(theta)
    summed = np.tensordot(theta, np.asarray(cmatrix.hermitian_basis(n)), axes=1)
    assert np.abs(direct - summed).max() < 1e-15


def test_vec_jacobian_columns():
    n = 2
    jac = cmatrix.hermitian_vec_jacobian(n)
    basis = cmatrix.hermitian_basis(n)
    for alpha in range(n * n):
        assert np.array_equal(jac[:, alpha], cmatrix.vec(basis[alpha]))


def test_is_psd_scale_relative():
    assert cmatrix.is_psd(np.diag([1e8, 0.0]))
    assert not cmatrix.is_psd(np.diag([1.0, -1e-3]))
