"""Barrier/Newton optimizer for per-antenna-power-constrained secrecy rates.

The stochastic concave objective (the transformed secrecy functional of
:mod:`mimome.rates`) is frozen over a fixed draw set before optimizing, so
each barrier stage maximizes a deterministic, exactly concave sample-average
function of the transmit covariance.  Iterates live in the real Hermitian
parametrization of :mod:`mimome.cmatrix` (n_t real diagonal entries plus
Re/Im off-diagonal pairs), which makes the Newton system real and
well-posed; since every antenna is best used at full power, the per-antenna
budget enters as the linear equality ``diag(sigma) = p``.

Each stage runs equality-constrained Newton steps on the residual

    r = [grad f_t + A^T nu;  diag(sigma) - p]

with backtracking on ``||r||_2`` plus a positive-definiteness safeguard
(the ``(1/t) log det sigma`` barrier requires strictly PD iterates).  Once
the stage residual is small the barrier weight ``t`` grows by ``gamma``;
the loop stops when the suboptimality certificate ``n_t / t`` drops below
``epsilon``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import channel, cmatrix, rates
from .errors import (
    ConstraintError,
    ConvergenceError,
    DomainError,
    LineSearchError,
)

__all__ = [
    "SolverConfig",
    "NewtonState",
    "StepRecord",
    "TransformedSampleObjective",
    "barrier_objective",
    "gradient",
    "hessian",
    "optimize",
]


@dataclass(frozen=True)
class SolverConfig:
    """Barrier/Newton tuning parameters.

    ``inner_residual_tol`` defaults to ``epsilon`` when left as ``None``.
    ``max_newton_iters`` caps the total number of accepted Newton steps
    across all barrier stages.
    """

    epsilon: float = 1e-4
    t0: float = 1.0
    gamma: float = 1.5
    ls_alpha: float = 0.1
    ls_beta: float = 0.5
    max_newton_iters: int = 200
    inner_residual_tol: float | None = None
    pd_floor: float = 1e-12
    min_step: float = 1e-13

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be > 0")
        if not self.gamma > 1.0:
            raise ValueError("gamma must be > 1")
        if not 0.0 < self.ls_alpha < 0.5:
            raise ValueError("ls_alpha must lie in (0, 0.5)")
        if not 0.0 < self.ls_beta < 1.0:
            raise ValueError("ls_beta must lie in (0, 1)")
        if not self.t0 > 0.0:
            raise ValueError("t0 must be > 0")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be >= 1")

    @property
    def resolved_inner_tol(self):
        return self.epsilon if self.inner_residual_tol is None else self.inner_residual_tol


@dataclass(frozen=True)
class NewtonState:
    """Solver iterate: covariance, multiplier, barrier weight, residual norm."""

    sigma: np.ndarray
    nu: np.ndarray
    t: float
    residual_norm: float

    @property
    def gap(self):
        """Suboptimality certificate ``n_t / t``."""
        return self.sigma.shape[0] / self.t


@dataclass(frozen=True)
class StepRecord:
    """One accepted Newton step of the convergence trace.

    ``sigma`` is the iterate after the step (kept so stage-level invariants
    can be audited); the CSV trace emits only the scalar fields.
    """

    iteration: int
    t: float
    residual_norm: float
    objective: float
    step_size: float
    sigma: np.ndarray = None


class TransformedSampleObjective:
    """Sample-average of the concave secrecy functional over frozen draws.

    Precomputes the same-marginal channel stack once, then evaluates the
    objective value, gradient and Hessian (in the real Hermitian
    parametrization) at any strictly PD covariance.  ``t`` is the barrier
    weight; pass ``t=None`` (or ``inf``) for the bare objective without the
    ``(1/t) log det`` term.
    """

    def __init__(self, samples):
        spec = samples.spec
        if spec.n_r < spec.n_e or spec.sigma_h2 < spec.sigma_g2:
            raise ConstraintError(
                "the concave rewrite requires n_r >= n_e and sigma_h >= sigma_g"
            )
        self.spec = spec
        self.n = spec.n_t
        self.hp = np.ascontiguousarray(
            channel.same_marginal_h(samples.h, samples.g, spec)
        )
        self.g = samples.g
        self.n_draws = samples.count
        self._jac = cmatrix.hermitian_vec_jacobian(self.n)
        self._kp = cmatrix.commutation_matrix(self.n, self.n)

    # -- scalar values -------------------------------------------------

    def value(self, sigma):
        """Sample-average transformed secrecy rate at ``sigma`` (PSD)."""
        sigma = rates._check_covariance(sigma, self.n)
        legit = rates.gram_logdet_values(self.hp, sigma)
        eve = rates.gram_logdet_values(self.g, sigma)
        return float(legit.mean() - eve.mean())

    def barrier_value(self, sigma, t):
        """Objective plus ``(1/t) log det sigma``; requires strictly PD sigma."""
        sigma = self._require_pd(sigma)
        val = self.value(sigma)
        if _barrier_weight(t) == 0.0:
            return val
        w = np.linalg.eigvalsh(sigma)
        return val + _barrier_weight(t) * float(np.log(w).sum())

    # -- derivatives ----------------------------------------------------

    def gradient(self, sigma, t):
        """Gradient over the real Hermitian parameters, shape ``(n*n,)``."""
        sigma = self._require_pd(sigma)
        w_tot = self._w_mean(self.hp, sigma) - self._w_mean(self.g, sigma)
        if _barrier_weight(t) > 0.0:
            w_tot = w_tot + _barrier_weight(t) * np.linalg.inv(sigma)
        # d f = tr(W dSigma); in vec space the gradient is vec(W^T), and the
        # parametrization Jacobian pulls it back to the real coordinates.
        g_vec = self._jac.T @ cmatrix.vec(w_tot.T)
        return np.ascontiguousarray(g_vec.real)

    def hessian(self, sigma, t):
        """Hessian over the real Hermitian parameters, shape ``(n*n, n*n)``.

        Negative definite for strictly PD ``sigma``: the sample-average term
        is concave and the barrier is strictly concave.
        """
        sigma = self._require_pd(sigma)
        n = self.n
        t_h = self._mean_kron(self._w_stack(self.hp, sigma))
        t_g = self._mean_kron(self._w_stack(self.g, sigma))
        core = t_h - t_g
        if _barrier_weight(t) > 0.0:
            sigma_inv = np.linalg.inv(sigma)
            core = core + _barrier_weight(t) * cmatrix.kron(sigma_inv, sigma_inv.T)
        h_vec = -(core @ self._kp)
        h_theta = (self._jac.T @ h_vec @ self._jac).real
        return 0.5 * (h_theta + h_theta.T)

    # -- internals ------------------------------------------------------

    def _require_pd(self, sigma):
        sigma = rates._check_covariance(sigma, self.n)
        w = np.linalg.eigvalsh(sigma)
        if w.min() <= cmatrix.psd_tolerance(w):
            raise DomainError("barrier evaluation requires a strictly PD covariance")
        return sigma

    @staticmethod
    def _w_stack(channels, sigma):
        # W_k = M_k^H (I + M_k sigma M_k^H)^-1 M_k, Hermitian PSD per draw.
        m = channels.shape[1]
        s = np.einsum("kij,jl,kml->kim", channels, sigma, np.conj(channels))
        s = cmatrix.hermitize(s) + np.eye(m)
        t = np.linalg.solve(s, channels)
        return cmatrix.hermitize(np.einsum("kmi,kmj->kij", np.conj(channels), t))

    def _w_mean(self, channels, sigma):
        return self._w_stack(channels, sigma).mean(axis=0)

    @staticmethod
    def _mean_kron(w):
        # mean over draws of kron(W_k, W_k^T), assembled without a Python loop
        n = w.shape[-1]
        t = np.einsum("kij,ksr->irjs", w, w) / w.shape[0]
        return t.reshape(n * n, n * n)


def _barrier_weight(t):
    if t is None:
        return 0.0
    t = float(t)
    if not t > 0.0:
        raise ValueError("barrier parameter t must be > 0")
    return 0.0 if math.isinf(t) else 1.0 / t


def barrier_objective(sigma, t, samples):
    """Sample-average objective plus logarithmic barrier at weight ``1/t``."""
    return TransformedSampleObjective(samples).barrier_value(sigma, t)


def gradient(sigma, t, samples):
    """Gradient of :func:`barrier_objective` in the real Hermitian parameters."""
    return TransformedSampleObjective(samples).gradient(sigma, t)


def hessian(sigma, t, samples):
    """Hessian of :func:`barrier_objective` in the real Hermitian parameters."""
    return TransformedSampleObjective(samples).hessian(sigma, t)


def _diag_selector(n):
    # the diagonal entries are the first n real parameters
    return np.eye(n, n * n)


def optimize(spec, powers, samples, config=None, trace=None):
    """Maximize the per-antenna-constrained secrecy rate over covariances.

    Freezes the expectation over ``samples``, then runs the barrier/Newton
    loop described in the module docstring from the feasible start
    ``sigma = diag(powers)``.

    Parameters
    ----------
    spec : ChannelSpec
        Must match ``samples.spec``; requires ``n_r >= n_e``,
        ``sigma_h >= sigma_g > 0`` and all powers positive.
    powers : sequence of float, length n_t
        Per-antenna power limits (met with equality at the optimum).
    samples : SampleSet
        Frozen draw set defining the sample-average objective.
    config : SolverConfig, optional
    trace : list, optional
        When given, one :class:`StepRecord` per accepted Newton step is
        appended (iteration counter, barrier weight, residual norm, barrier
        objective, step size).

    Returns
    -------
    (NewtonState, RateEstimate)
        Final iterate (gap below ``epsilon``, residual below the inner
        tolerance, ``diag(sigma)`` equal to ``powers``) and the plain
        secrecy-rate estimate of the final covariance on ``samples``.

    Raises
    ------
    LineSearchError
        No acceptable strictly-PD step could be found.
    ConvergenceError
        Newton step cap exceeded; carries the last state.
    """
    cfg = config or SolverConfig()
    if samples.spec != spec:
        raise ValueError("samples were drawn for a different channel spec")
    powers = np.asarray(powers, dtype=float)
    n = spec.n_t
    if powers.shape != (n,):
        raise ValueError(f"powers must be a length-{n} vector")
    if np.any(powers <= 0.0):
        raise ConstraintError("all per-antenna powers must be > 0")

    obj = TransformedSampleObjective(samples)
    a_eq = _diag_selector(n)
    theta = cmatrix.hermitian_to_params(np.diag(powers).astype(complex))
    nu = np.zeros(n)
    t_bar = cfg.t0
    inner_tol = cfg.resolved_inner_tol

    def residual(theta_v, nu_v, sigma_v):
        grad = obj.gradient(sigma_v, t_bar)
        return np.concatenate([grad + a_eq.T @ nu_v, a_eq @ theta_v - powers])

    sigma = cmatrix.params_to_hermitian(theta)
    steps = 0
    while True:
        r = residual(theta, nu, sigma)
        r_norm = float(np.linalg.norm(r))
        while r_norm >= inner_tol:
            if steps >= cfg.max_newton_iters:
                raise ConvergenceError(
                    f"no convergence within {cfg.max_newton_iters} Newton steps",
                    state=NewtonState(sigma=sigma, nu=nu.copy(), t=t_bar, residual_norm=r_norm),
                )
            h = obj.hessian(sigma, t_bar)
            delta = cmatrix.solve_kkt(h, a_eq, r)
            d_theta, d_nu = delta[: n * n], delta[n * n :]

            # shrink until the candidate covariance is strictly PD, then
            # backtrack on the residual norm
            s = 1.0
            cand_sigma = cmatrix.params_to_hermitian(theta + s * d_theta)
            while s >= cfg.min_step and cmatrix.smallest_eigenvalue(cand_sigma) <= cfg.pd_floor:
                s *= cfg.ls_beta
                cand_sigma = cmatrix.params_to_hermitian(theta + s * d_theta)
            accepted = False
            while s >= cfg.min_step:
                cand_theta = theta + s * d_theta
                cand_nu = nu + s * d_nu
                cand_sigma = cmatrix.params_to_hermitian(cand_theta)
                cand_r = residual(cand_theta, cand_nu, cand_sigma)
                cand_norm = float(np.linalg.norm(cand_r))
                if cand_norm <= (1.0 - cfg.ls_alpha * s) * r_norm:
                    accepted = True
                    break
                s *= cfg.ls_beta
            if not accepted:
                raise LineSearchError(
                    "backtracking found no acceptable positive-definite step "
                    f"(t={t_bar:.6g}, ||r||={r_norm:.3e})"
                )
            theta, nu, sigma = cand_theta, cand_nu, cand_sigma
            r, r_norm = cand_r, cand_norm
            steps += 1
            if trace is not None:
                trace.append(
                    StepRecord(
                        iteration=steps,
                        t=t_bar,
                        residual_norm=r_norm,
                        objective=obj.barrier_value(sigma, t_bar),
                        step_size=s,
                        sigma=sigma,
                    )
                )
        if n / t_bar < cfg.epsilon:
            break
        t_bar *= cfg.gamma

    state = NewtonState(sigma=sigma, nu=nu.copy(), t=t_bar, residual_norm=r_norm)
    return state, rates.secrecy_rate(sigma, samples)
