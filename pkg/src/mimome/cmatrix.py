"""Dense complex linear-algebra kernel.

Log-determinant primitives for small Hermitian systems, the Kronecker /
vectorization tool set used by the covariance optimizer's matrix calculus,
and a real parametrization of Hermitian matrices that turns complex
covariance optimization into a well-posed real Newton problem.

Conventions
-----------
* ``vec`` stacks columns (column-major).  The commutation matrix is the
  consistency anchor: ``vec(a.T) == commutation_matrix(p, q) @ vec(a)``
  holds for every p-by-q matrix ``a``.
* A Hermitian n-by-n matrix is parametrized by ``n*n`` real numbers: the
  ``n`` real diagonal entries first, followed by ``(Re, Im)`` of each
  strict upper-triangle entry, pairs ordered row-major.

All operations are pure functions of their inputs; cached arrays are
returned read-only and must not be mutated by callers.
"""

from functools import lru_cache

import numpy as np

from .errors import DomainError, KKTError

__all__ = [
    "assert_finite",
    "hermitize",
    "is_hermitian",
    "psd_tolerance",
    "is_psd",
    "smallest_eigenvalue",
    "logdet_ipa",
    "kron",
    "vec",
    "unvec",
    "commutation_matrix",
    "solve_kkt",
    "hermitian_param_count",
    "hermitian_basis",
    "hermitian_to_params",
    "params_to_hermitian",
    "hermitian_vec_jacobian",
]

# Relative scale of the PSD eigenvalue tolerance, with an absolute floor of
# one so the predicate stays meaningful across large power sweeps.
_PSD_TOL_SCALE = 1e-10

# Largest entry count accepted for a Kronecker product result.
_KRON_ENTRY_LIMIT = 100_000_000


def assert_finite(a, name="matrix"):
    """Raise ``ValueError`` when ``a`` contains NaN or Inf entries."""
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")


def hermitize(a):
    """Exactly symmetrize: ``(a + a^H) / 2`` with a real diagonal.

    Works on stacked input of shape ``(..., n, n)``.
    """
    a = np.asarray(a)
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def is_hermitian(a, rtol=1e-12):
    """Whether ``max|a - a^H|`` is below ``rtol`` times the largest entry."""
    a = np.asarray(a)
    dev = np.abs(a - np.conj(np.swapaxes(a, -1, -2))).max()
    scale = max(np.abs(a).max(), 1.0)
    return bool(dev <= rtol * scale)


def psd_tolerance(eigenvalues):
    """Scale-relative eigenvalue tolerance for PSD predicates."""
    eigenvalues = np.asarray(eigenvalues)
    return _PSD_TOL_SCALE * max(float(np.abs(eigenvalues).max(initial=0.0)), 1.0)


def is_psd(a):
    """PSD predicate: all eigenvalues above the scale-relative tolerance."""
    w = np.linalg.eigvalsh(hermitize(a))
    return bool(w.min() >= -psd_tolerance(w))


def smallest_eigenvalue(a):
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(hermitize(a)).min())


def logdet_ipa(a):
    """``log det(I + a)`` (natural log) for Hermitian ``a``, stacked-capable.

    Parameters
    ----------
    a : ndarray, shape (..., n, n)
        Hermitian matrix (or stack of them), typically a Gram product and
        therefore PSD.  Input is symmetrized exactly before factoring.

    Returns
    -------
    float or ndarray
        ``log det(I + a)`` per stacked item; a plain float for 2-D input.

    Raises
    ------
    ValueError
        Non-finite entries.
    DomainError
        ``I + a`` is numerically singular (some eigenvalue <= 0).

    Notes
    -----
    Cholesky of ``I + a`` is the fast common path (valid whenever ``a`` is
    PSD); an eigenvalue factorization is the fallback when Cholesky fails.
    """
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError("expected a square matrix or stack of square matrices")
    assert_finite(a, "logdet_ipa input")
    n = a.shape[-1]
    m = hermitize(a) + np.eye(n)
    try:
        chol = np.linalg.cholesky(m)
        diag = np.einsum("...ii->...i", chol).real
        out = 2.0 * np.sum(np.log(diag), axis=-1)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(m)
        floor = 1e-13 * np.maximum(1.0, np.abs(w).max(axis=-1))
        if np.any(w.min(axis=-1) <= floor):
            raise DomainError("I + A is numerically singular") from None
        out = np.sum(np.log(w), axis=-1)
    return float(out) if a.ndim == 2 else out


def kron(a, b):
    """Kronecker product with finiteness and size guards."""
    a = np.asarray(a)
    b = np.asarray(b)
    assert_finite(a, "kron left factor")
    assert_finite(b, "kron right factor")
    if a.size * b.size > _KRON_ENTRY_LIMIT:
        raise ValueError("Kronecker product would exceed the supported size")
    return np.kron(a, b)


def vec(a):
    """Column-stacking vectorization: returns a 1-D array of length rows*cols."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec` for a rows-by-cols matrix."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError("vector length does not match the requested shape")
    return v.reshape((rows, cols), order="F")


@lru_cache(maxsize=None)
def commutation_matrix(p, q):
    """Permutation matrix ``K`` with ``vec(a.T) == K @ vec(a)`` for p-by-q ``a``.

    Returned array is cached and read-only.
    """
    if p < 1 or q < 1:
        raise ValueError("commutation matrix dimensions must be >= 1")
    k = np.zeros((p * q, p * q))
    i, j = np.meshgrid(np.arange(p), np.arange(q), indexing="ij")
    k[(i * q + j).ravel(), (j * p + i).ravel()] = 1.0
    k.setflags(write=False)
    return k


def solve_kkt(hessian_block, constraint, residual):
    """Newton direction from the equality-constrained KKT system.

    Solves ``[[H, A^T], [A, 0]] @ delta = -residual`` and returns ``delta``
    (the stacked primal and multiplier updates).

    Parameters
    ----------
    hessian_block : ndarray, shape (n, n)
    constraint : ndarray, shape (m, n)
        Equality-constraint matrix ``A``.
    residual : ndarray, shape (n + m,)

    Raises
    ------
    KKTError
        Singular or ill-conditioned KKT matrix (relative back-substitution
        residual above ``1e-8``); carries a condition estimate.
    """
    h = np.asarray(hessian_block)
    a = np.asarray(constraint)
    r = np.asarray(residual).reshape(-1)
    n = h.shape[0]
    if h.shape != (n, n):
        raise ValueError("Hessian block must be square")
    m = a.shape[0]
    if a.shape != (m, n):
        raise ValueError("constraint matrix width must match the Hessian")
    if r.size != n + m:
        raise ValueError("residual length must be n + m")
    assert_finite(h, "KKT Hessian block")
    assert_finite(a, "KKT constraint")
    assert_finite(r, "KKT residual")

    dtype = np.result_type(h.dtype, a.dtype, r.dtype, np.float64)
    kkt = np.zeros((n + m, n + m), dtype=dtype)
    kkt[:n, :n] = h
    kkt[:n, n:] = a.T
    kkt[n:, :n] = a
    try:
        delta = np.linalg.solve(kkt, -r)
    except np.linalg.LinAlgError as exc:
        raise KKTError(
            "KKT matrix is singular", condition=_safe_cond(kkt)
        ) from exc
    back = np.linalg.norm(kkt @ delta + r)
    rnorm = np.linalg.norm(r)
    if rnorm == 0.0:
        ok = back == 0.0
    else:
        ok = back <= 1e-8 * rnorm
    if not ok or not np.all(np.isfinite(delta)):
        raise KKTError(
            "KKT solve is unreliable (ill-conditioned system)",
            condition=_safe_cond(kkt),
        )
    return delta


def _safe_cond(m):
    try:
        return float(np.linalg.cond(m))
    except np.linalg.LinAlgError:  # pragma: no cover - cond rarely fails
        return None


def hermitian_param_count(n):
    """Number of real parameters of an n-by-n Hermitian matrix."""
    return n * n


@lru_cache(maxsize=None)
def hermitian_basis(n):
    """Real-parametrization basis matrices, shape ``(n*n, n, n)``, read-only.

    Order: ``E_ii`` for the diagonal, then for each ``i < j`` (row-major)
    the pair ``E_ij + E_ji`` (real part) and ``i*(E_ij - E_ji)`` (imaginary
    part).  Every basis matrix is Hermitian with spectral norm one.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    mats = np.zeros((n * n, n, n), dtype=complex)
    for i in range(n):
        mats[i, i, i] = 1.0
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            mats[k, i, j] = 1.0
            mats[k, j, i] = 1.0
            mats[k + 1, i, j] = 1.0j
            mats[k + 1, j, i] = -1.0j
            k += 2
    mats.setflags(write=False)
    return mats


def hermitian_to_params(a):
    """Real parameter vector of a Hermitian matrix (see :func:`hermitian_basis`)."""
    a = np.asarray(a)
    n = a.shape[0]
    theta = np.empty(n * n)
    theta[:n] = np.diagonal(a).real
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            theta[k] = a[i, j].real
            theta[k + 1] = a[i, j].imag
            k += 2
    return theta


def params_to_hermitian(theta):
    """Hermitian matrix from its real parameter vector (exactly Hermitian)."""
    theta = np.asarray(theta, dtype=float)
    n = int(round(np.sqrt(theta.size)))
    if n * n != theta.size:
        raise ValueError("parameter vector length must be a perfect square")
    a = np.zeros((n, n), dtype=complex)
    a[np.arange(n), np.arange(n)] = theta[:n]
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            a[i, j] = theta[k] + 1j * theta[k + 1]
            a[j, i] = theta[k] - 1j * theta[k + 1]
            k += 2
    return a


@lru_cache(maxsize=None)
def hermitian_vec_jacobian(n):
    """Jacobian of ``vec(sigma)`` w.r.t. the real parameters, read-only.

    Column ``alpha`` is ``vec(basis[alpha])``; shape ``(n*n, n*n)`` complex.
    """
    basis = hermitian_basis(n)
    j = np.stack([vec(b) for b in basis], axis=1)
    j.setflags(write=False)
    return j
