"""Secrecy-rate functionals and their Monte-Carlo estimators.

The central quantity is the ergodic secrecy rate of a transmit covariance
``sigma``:

    R_s(sigma) = E_H[log det(I + H sigma H^H)] - E_G[log det(I + G sigma G^H)]

estimated by averaging per-draw values over a :class:`~mimome.channel.SampleSet`
(both terms always use the same draw index, i.e. common random numbers).
``transformed_rate`` evaluates the equivalent concave rewrite built on the
same-marginal channel, which is what the per-antenna optimizer maximizes.
Closed-form optima are exposed as ``capacity_total`` (uniform covariance,
valid when the legitimate receiver dominates the eavesdropper in antennas
and channel strength) and ``capacity_misose_per_antenna`` (diagonal
covariance at the per-antenna power limits, single-antenna receivers).

All rates are in nats.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import channel, cmatrix
from .errors import ConstraintError, DomainError

__all__ = [
    "RateEstimate",
    "TotalPower",
    "PerAntennaPower",
    "combined_std_err",
    "gram_logdet_values",
    "secrecy_rate",
    "secrecy_rate_values",
    "rate_difference",
    "transformed_rate",
    "transformed_rate_values",
    "per_sample_transformed",
    "per_sample_transformed_values",
    "capacity_total",
    "capacity_misose_per_antenna",
    "misose_scalar_values",
    "misose_scalar_objective",
    "capacity_wishart_form",
    "zero_capacity",
    "snr_fit",
    "snr_slope",
]


@dataclass(frozen=True)
class RateEstimate:
    """Monte-Carlo estimate of a rate functional, in nats.

    ``std_err`` is the sample standard deviation of the per-draw values
    divided by ``sqrt(n_samples)`` (zero for a single draw).
    """

    mean: float
    std_err: float
    n_samples: int

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("per-draw values must be a nonempty 1-D array")
        n = values.size
        se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(mean=float(values.mean()), std_err=se, n_samples=n)


@dataclass(frozen=True)
class TotalPower:
    """Total transmit-power budget: ``trace(sigma) <= p``."""

    p: float

    def __post_init__(self):
        if not self.p >= 0.0:
            raise ValueError("total power must be >= 0")


@dataclass(frozen=True)
class PerAntennaPower:
    """Per-antenna power budget: ``sigma[i, i] <= powers[i]``."""

    powers: tuple

    def __post_init__(self):
        powers = tuple(float(p) for p in self.powers)
        if len(powers) == 0 or any(p < 0.0 for p in powers):
            raise ValueError("per-antenna powers must be a nonempty list of values >= 0")
        object.__setattr__(self, "powers", powers)

    @property
    def total(self):
        return sum(self.powers)

    @property
    def p_max(self):
        return max(self.powers)

    @property
    def p_min(self):
        return min(self.powers)


def combined_std_err(a, b):
    """Standard error of the difference of two independent estimates."""
    return math.hypot(a.std_err, b.std_err)


def _check_covariance(sigma, n_t, require_pd=False):
    """Validate and exactly symmetrize a transmit covariance matrix."""
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (n_t, n_t):
        raise ValueError(f"covariance must be {n_t}x{n_t}, got {sigma.shape}")
    cmatrix.assert_finite(sigma, "covariance")
    if not cmatrix.is_hermitian(sigma, rtol=1e-10):
        raise DomainError("covariance must be Hermitian")
    sigma = cmatrix.hermitize(sigma)
    w = np.linalg.eigvalsh(sigma)
    tol = cmatrix.psd_tolerance(w)
    if w.min() < -tol:
        raise DomainError("covariance must be positive semidefinite")
    if require_pd and w.min() <= tol:
        raise DomainError(
            "covariance must be strictly positive definite for this form; "
            "use transformed_rate for singular covariances"
        )
    return sigma


def gram_logdet_values(channels, sigma):
    """Per-draw ``log det(I + M_k sigma M_k^H)`` for stacked channels.

    ``channels`` has shape ``(count, m, n_t)``; returns ``(count,)``.
    """
    prod = np.einsum("kij,jl,kml->kim", channels, sigma, np.conj(channels))
    return np.atleast_1d(cmatrix.logdet_ipa(prod))


def secrecy_rate_values(sigma, samples):
    """Per-draw secrecy-rate integrand over a sample set (common draw index)."""
    sigma = _check_covariance(sigma, samples.spec.n_t)
    return gram_logdet_values(samples.h, sigma) - gram_logdet_values(samples.g, sigma)


def secrecy_rate(sigma, samples):
    """Monte-Carlo estimate of the secrecy rate of covariance ``sigma``.

    Parameters
    ----------
    sigma : ndarray, shape (n_t, n_t)
        PSD transmit covariance.
    samples : SampleSet

    Returns
    -------
    RateEstimate
    """
    return RateEstimate.from_values(secrecy_rate_values(sigma, samples))


def rate_difference(sigma_a, sigma_b, samples):
    """Estimate ``R_s(sigma_a) - R_s(sigma_b)`` with common random numbers.

    The per-draw difference is averaged, so the reported standard error
    reflects the (much smaller) variance of the paired comparison.
    """
    values = secrecy_rate_values(sigma_a, samples) - secrecy_rate_values(sigma_b, samples)
    return RateEstimate.from_values(values)


def _require_dominant_regime(spec, strict_g=True):
    if spec.n_r < spec.n_e or spec.sigma_h2 < spec.sigma_g2:
        raise ConstraintError(
            "this operation requires n_r >= n_e and sigma_h >= sigma_g "
            f"(got n_r={spec.n_r}, n_e={spec.n_e}, "
            f"sigma_h2={spec.sigma_h2}, sigma_g2={spec.sigma_g2})"
        )
    if strict_g and not spec.sigma_g2 > 0.0:
        raise ConstraintError("sigma_g2 must be > 0")


def transformed_rate_values(sigma, samples):
    """Per-draw values of the concave rewrite of the secrecy functional.

    The first log-determinant uses the same-marginal channel (top rows of
    ``H`` over rescaled ``G``), whose Gram matrix equals
    ``H_top^H H_top + (sigma_h2/sigma_g2) G^H G`` draw by draw.
    """
    spec = samples.spec
    _require_dominant_regime(spec)
    sigma = _check_covariance(sigma, spec.n_t)
    hp = channel.same_marginal_h(samples.h, samples.g, spec)
    return gram_logdet_values(hp, sigma) - gram_logdet_values(samples.g, sigma)


def transformed_rate(sigma, samples):
    """Monte-Carlo estimate of the concave transformed secrecy functional.

    Equals :func:`secrecy_rate` in expectation (the same-marginal channel
    has the law of ``H``), so estimates on independent sample sets agree
    within Monte-Carlo error.
    """
    return RateEstimate.from_values(transformed_rate_values(sigma, samples))


def _htilde(h, g, spec):
    # Gram(htilde) = H_top^H H_top + (ratio - 1) G^H G, PSD since ratio >= 1.
    ratio = spec.variance_ratio
    top = h[..., : spec.n_r - spec.n_e, :]
    return np.concatenate([top, np.sqrt(ratio - 1.0) * g], axis=-2)


def per_sample_transformed(sigma, h, g, spec):
    """Single-draw transformed integrand in its strictly-PD product form.

    Evaluates ``log det(I + Htilde (sigma^-1 + G^H G)^-1 Htilde^H)`` where
    ``Gram(Htilde) = H_top^H H_top + (sigma_h2/sigma_g2 - 1) G^H G``.  This
    equals the per-draw difference form of :func:`transformed_rate_values`
    for strictly PD ``sigma``, and is nonnegative term by term, which makes
    per-draw positivity checks exact.

    Raises
    ------
    DomainError
        Singular ``sigma`` (the product form needs ``sigma^-1``); use
        :func:`transformed_rate` instead.
    ConstraintError
        Outside the ``n_r >= n_e``, ``sigma_h >= sigma_g`` regime.
    """
    _require_dominant_regime(spec)
    sigma = _check_covariance(sigma, spec.n_t, require_pd=True)
    h = np.asarray(h)
    g = np.asarray(g)
    ht = _htilde(h, g, spec)
    a = np.linalg.inv(sigma) + np.conj(g).T @ g
    inner = ht @ np.linalg.solve(cmatrix.hermitize(a), np.conj(ht).T)
    return float(cmatrix.logdet_ipa(inner))


def per_sample_transformed_values(sigma, samples):
    """Batched :func:`per_sample_transformed` over a whole sample set."""
    spec = samples.spec
    _require_dominant_regime(spec)
    sigma = _check_covariance(sigma, spec.n_t, require_pd=True)
    ht = _htilde(samples.h, samples.g, spec)
    sigma_inv = np.linalg.inv(sigma)
    a = cmatrix.hermitize(
        sigma_inv + np.einsum("kmi,kmj->kij", np.conj(samples.g), samples.g)
    )
    t = np.linalg.solve(a, np.swapaxes(np.conj(ht), -1, -2))
    inner = np.einsum("kim,kmj->kij", ht, t)
    return np.atleast_1d(cmatrix.logdet_ipa(inner))


def capacity_total(spec, p, samples):
    """Secrecy capacity under a total power budget: uniform covariance.

    The optimal covariance is ``(p / n_t) * I`` (isotropy of the Rayleigh
    ensemble makes the objective Schur-concave, and more transmit power
    never hurts in the dominant regime), so this returns
    ``secrecy_rate((p / n_t) * I, samples)``.

    Raises
    ------
    ConstraintError
        Outside the ``n_r >= n_e``, ``sigma_h >= sigma_g`` regime where the
        uniform covariance is known to be optimal (see :func:`zero_capacity`
        for the complementary regime).
    """
    _require_dominant_regime(spec)
    if p < 0.0:
        raise ValueError("power must be >= 0")
    sigma = (p / spec.n_t) * np.eye(spec.n_t, dtype=complex)
    return secrecy_rate(sigma, samples)


def capacity_misose_per_antenna(spec, powers, samples):
    """Per-antenna-constrained secrecy capacity for single-antenna receivers.

    With ``n_r = n_e = 1`` the optimum is ``diag(powers)`` (off-diagonal
    covariance terms only help the eavesdropper on average), so this returns
    ``secrecy_rate(diag(powers), samples)``.
    """
    if spec.n_r != 1 or spec.n_e != 1:
        raise ConstraintError(
            "per-antenna closed form requires n_r = n_e = 1 "
            f"(got n_r={spec.n_r}, n_e={spec.n_e})"
        )
    _require_dominant_regime(spec)
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (spec.n_t,) or np.any(powers < 0.0):
        raise ValueError("powers must be n_t values >= 0")
    return secrecy_rate(np.diag(powers).astype(complex), samples)


def misose_scalar_values(sigma, beta, noise_var, g_draws):
    """Per-draw values of ``log(1 + beta / (noise_var + g^H sigma g))``.

    Exposed separately so paired (common-random-number) comparisons of two
    covariances can difference the per-draw values directly.
    """
    if beta > 0.0:
        raise ValueError("beta must be <= 0")
    if not noise_var > 0.0:
        raise ValueError("noise_var must be > 0")
    if not beta + 2.0 * noise_var > 0.0:
        raise ValueError("beta + 2 * noise_var must be > 0")
    if isinstance(g_draws, channel.SampleSet):
        if g_draws.spec.n_e != 1:
            raise ValueError("sample set must have a single-antenna eavesdropper")
        g = g_draws.g[:, 0, :]
    else:
        g = np.asarray(g_draws)
        if g.ndim != 2:
            raise ValueError("g_draws must be a (count, n_t) array")
    sigma = _check_covariance(sigma, g.shape[1])
    quad = np.einsum("ki,ij,kj->k", g, sigma, np.conj(g)).real
    arg = 1.0 + beta / (noise_var + quad)
    if np.any(arg <= 0.0):
        raise DomainError("objective argument left the domain of the logarithm")
    return np.log(arg)


def misose_scalar_objective(sigma, beta, noise_var, g_draws):
    """Monte-Carlo mean of ``log(1 + beta / (noise_var + g^H sigma g))``.

    This scalar objective is the core of the single-antenna-receiver
    per-antenna optimization; the secrecy problem is the special case
    ``beta = sigma_g2/sigma_h2 - 1``, ``noise_var = 1``.

    Parameters
    ----------
    sigma : ndarray, shape (n_t, n_t)
        PSD covariance.
    beta : float
        Must satisfy ``beta <= 0`` and ``beta + 2 * noise_var > 0``.
    noise_var : float
        Must be positive.
    g_draws : SampleSet or ndarray, shape (count, n_t)
        Eavesdropper row-vector draws; a sample set must have ``n_e = 1``.
    """
    return RateEstimate.from_values(misose_scalar_values(sigma, beta, noise_var, g_draws))


def capacity_wishart_form(spec, p, eigen_legit, eigen_eve=None):
    """Alternate capacity estimate from Wishart eigenvalue ensembles.

    Uses the identity ``E[log det(I + a X X^H)] = E[sum_i log(1 + a l_i)]``
    with ``l_i`` the eigenvalues of a complex Wishart matrix with ``n_t``
    degrees of freedom, so the capacity at the uniform covariance is
    estimated from eigenvalue draws alone.  Agrees with
    :func:`capacity_total` within Monte-Carlo error.

    Parameters
    ----------
    spec : ChannelSpec
    p : float
        Total transmit power.
    eigen_legit : ndarray, shape (count, n_r)
        Eigenvalue tuples for the legitimate term
        (see :func:`~mimome.channel.wishart_eigen_samples` with dim = n_r).
    eigen_eve : ndarray, shape (count, n_e), optional
        Eigenvalue tuples for the eavesdropper term.  May be omitted when
        ``n_r == n_e``, in which case the legitimate ensemble is reused for
        both terms (common random numbers).
    """
    _require_dominant_regime(spec)
    if p < 0.0:
        raise ValueError("power must be >= 0")
    eigen_legit = np.asarray(eigen_legit, dtype=float)
    if eigen_legit.ndim != 2 or eigen_legit.shape[1] != spec.n_r:
        raise ValueError("eigen_legit must have shape (count, n_r)")
    a_h = spec.sigma_h2 * p / spec.n_t
    a_g = spec.sigma_g2 * p / spec.n_t
    legit = np.log1p(a_h * eigen_legit).sum(axis=1)
    if eigen_eve is None:
        if spec.n_e != spec.n_r:
            raise ValueError("eigen_eve is required when n_e != n_r")
        return RateEstimate.from_values(legit - np.log1p(a_g * eigen_legit).sum(axis=1))
    eigen_eve = np.asarray(eigen_eve, dtype=float)
    if eigen_eve.ndim != 2 or eigen_eve.shape[1] != spec.n_e:
        raise ValueError("eigen_eve must have shape (count, n_e)")
    est_h = RateEstimate.from_values(legit)
    est_g = RateEstimate.from_values(np.log1p(a_g * eigen_eve).sum(axis=1))
    return RateEstimate(
        mean=est_h.mean - est_g.mean,
        std_err=combined_std_err(est_h, est_g),
        n_samples=min(est_h.n_samples, est_g.n_samples),
    )


def zero_capacity(spec):
    """Whether the secrecy capacity is identically zero for this ensemble.

    True exactly when the eavesdropper matches or dominates the legitimate
    receiver in both antenna count and channel strength
    (``n_r <= n_e`` and ``sigma_h <= sigma_g``).
    """
    return spec.n_r <= spec.n_e and spec.sigma_h2 <= spec.sigma_g2


def snr_fit(capacity_points):
    """Least-squares fit of capacity against the log received eavesdropper SNR.

    Parameters
    ----------
    capacity_points : sequence of (p_g, c)
        ``p_g`` is the equivalent received SNR at the eavesdropper in linear
        units; ``c`` is the capacity in nats.  At least two points with
        distinct ``p_g`` are required.

    Returns
    -------
    (slope, intercept)
        Slope in nats per nat of ``log(p_g)``.
    """
    points = [(float(p), float(c)) for p, c in capacity_points]
    if len({p for p, _ in points}) < 2:
        raise ValueError("need at least two points with distinct p_g")
    x = np.log([p for p, _ in points])
    y = np.array([c for _, c in points])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def snr_slope(capacity_points):
    """High-SNR scaling slope, nats per nat of ``log(p_g)``."""
    return snr_fit(capacity_points)[0]
