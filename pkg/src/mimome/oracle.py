"""Independent verification: brute force, quadrature, finite differences.

Everything here deliberately avoids the code paths it checks: the grid
search enumerates covariances directly, the scalar rate uses adaptive 1-D
quadrature (cross-checked against an exponential-integral closed form with
its own series / continued-fraction evaluation), and differentiation is by
central differences in the real Hermitian parametrization.

``property_suite`` bundles the statistical and deterministic invariants of
the sampling, rate and solver layers into a machine-checkable report.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import channel, cmatrix, rates, solver
from .errors import DomainError

__all__ = [
    "GridSpec",
    "grid_covariances",
    "grid_search",
    "expected_log1p_exponential",
    "expected_log1p_exponential_closed_form",
    "exp1",
    "scalar_quadrature_rate",
    "finite_diff_gradient",
    "finite_diff_jacobian",
    "PropertyResult",
    "PropertyReport",
    "property_suite",
]

DIAG_TRACE_SIMPLEX = "diag_trace_simplex"
FIXED_DIAG_OFFDIAG = "fixed_diag_offdiag"

# keep the grid strictly inside the PSD region so product-form evaluators
# stay usable at every grid point
_OFFDIAG_SHRINK = 1.0 - 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Exhaustive-search grid over a small covariance parametrization.

    ``diag_trace_simplex`` walks diagonal covariances of fixed trace (the
    uniform-power optimality check); ``fixed_diag_offdiag`` fixes the
    diagonal at the per-antenna limits and walks the complex off-diagonal
    entry over its PSD disk (two transmit antennas only).
    """

    parametrization: str
    resolution: int
    budget: object

    def __post_init__(self):
        if self.parametrization not in (DIAG_TRACE_SIMPLEX, FIXED_DIAG_OFFDIAG):
            raise ValueError(f"unknown grid parametrization {self.parametrization!r}")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")


def grid_covariances(grid, n_t):
    """Deterministically ordered list of grid covariance matrices."""
    if grid.parametrization == DIAG_TRACE_SIMPLEX:
        if not isinstance(grid.budget, rates.TotalPower):
            raise ValueError("diag_trace_simplex requires a TotalPower budget")
        p = grid.budget.p
        axis = np.linspace(0.0, p, grid.resolution) if grid.resolution > 1 else np.array([p])
        if n_t == 1:
            return [np.array([[p]], dtype=complex)]
        if n_t == 2:
            return [np.diag([d, p - d]).astype(complex) for d in axis]
        if n_t == 3:
            out = []
            for d1 in axis:
                for d2 in axis:
                    d3 = p - d1 - d2
                    if d3 >= -1e-12:
                        out.append(np.diag([d1, d2, max(d3, 0.0)]).astype(complex))
            return out
        raise ValueError("diagonal-simplex grids are supported for n_t <= 3")

    if not isinstance(grid.budget, rates.PerAntennaPower) or len(grid.budget.powers) != 2:
        raise ValueError("fixed_diag_offdiag requires a two-antenna PerAntennaPower budget")
    if n_t != 2:
        raise ValueError("fixed_diag_offdiag grids are supported for n_t = 2 only")
    p1, p2 = grid.budget.powers
    radius = math.sqrt(p1 * p2) * _OFFDIAG_SHRINK
    axis = np.linspace(-radius, radius, grid.resolution) if grid.resolution > 1 else np.array([0.0])
    out = []
    for re in axis:
        for im in axis:
            if math.hypot(re, im) <= radius:
                rho = re + 1j * im
                out.append(np.array([[p1, rho], [np.conj(rho), p2]], dtype=complex))
    return out


def grid_search(objective, grid, samples):
    """Exhaustively evaluate ``objective(sigma, samples)`` over the grid.

    ``objective`` may return a float or a :class:`~mimome.rates.RateEstimate`
    (its mean is used).  Ties break toward the earliest grid point, so the
    result is deterministic.

    Returns
    -------
    (best_sigma, best_value)
    """
    best_sigma, best_value = None, -math.inf
    for sigma in grid_covariances(grid, samples.spec.n_t):
        value = objective(sigma, samples)
        value = float(getattr(value, "mean", value))
        if value > best_value:
            best_sigma, best_value = sigma, value
    if best_sigma is None:
        raise ValueError("grid is empty")
    return best_sigma, best_value


# -- scalar quadrature oracle ------------------------------------------


def expected_log1p_exponential(a, tol=1e-12):
    """``E[log(1 + a e)]`` with ``e ~ Exp(1)``, by adaptive quadrature."""
    if a < 0.0:
        raise ValueError("scale a must be >= 0")
    if a == 0.0:
        return 0.0
    value, _ = integrate.quad(
        lambda x: math.log1p(a * x) * math.exp(-x),
        0.0,
        np.inf,
        epsabs=tol,
        epsrel=tol,
        limit=200,
    )
    return float(value)


def exp1(x):
    """Exponential integral E1 via series (x < 1) or continued fraction.

    Implemented independently of scipy so the closed-form scalar rate can
    cross-check the quadrature route without shared code.
    """
    if x <= 0.0:
        raise ValueError("exp1 requires x > 0")
    if x < 1.0:
        # E1(x) = -gamma - ln x + sum_k (-1)^(k+1) x^k / (k * k!)
        total = -np.euler_gamma - math.log(x)
        term = 1.0
        for k in range(1, 60):
            term *= -x / k
            contribution = -term / k
            total += contribution
            if abs(contribution) < 1e-18 * max(abs(total), 1.0):
                break
        return total
    # modified Lentz evaluation of the standard continued fraction
    # E1(x) = exp(-x) / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...))))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for k in range(1, 200):
        a_k = -(k * k)
        b += 2.0
        d = 1.0 / (b + a_k * d)
        c = b + a_k / c
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x) * f


def expected_log1p_exponential_closed_form(a):
    """``E[log(1 + a e)] = exp(1/a) E1(1/a)`` for ``a > 0`` (0 at ``a = 0``)."""
    if a < 0.0:
        raise ValueError("scale a must be >= 0")
    if a == 0.0:
        return 0.0
    return math.exp(1.0 / a) * exp1(1.0 / a)


def scalar_quadrature_rate(a_h, a_g, tol=1e-12):
    """Single-antenna secrecy rate ``E[log(1+a_h e)] - E[log(1+a_g e)]``.

    ``e ~ Exp(1)``; absolute quadrature error well below 1e-9.
    """
    return expected_log1p_exponential(a_h, tol) - expected_log1p_exponential(a_g, tol)


# -- finite differences -------------------------------------------------


def _require_margin(sigma, step):
    w = np.linalg.eigvalsh(cmatrix.hermitize(np.asarray(sigma)))
    if w.min() <= step:
        raise DomainError(
            "finite differences need a strictly PD matrix with margin above the step"
        )


def finite_diff_gradient(f, sigma, step=1e-5):
    """Central-difference gradient of ``f`` over the Hermitian parameters.

    The basis matrices have unit spectral norm, so ``sigma`` must be
    strictly PD with smallest eigenvalue above ``step``.
    """
    _require_margin(sigma, step)
    sigma = np.asarray(sigma, dtype=complex)
    basis = cmatrix.hermitian_basis(sigma.shape[0])
    grad = np.empty(len(basis))
    for alpha, b in enumerate(basis):
        grad[alpha] = (f(sigma + step * b) - f(sigma - step * b)) / (2.0 * step)
    return grad


def finite_diff_jacobian(grad_fn, sigma, step=1e-4):
    """Central-difference Jacobian of a gradient function (Hessian check)."""
    _require_margin(sigma, step)
    sigma = np.asarray(sigma, dtype=complex)
    basis = cmatrix.hermitian_basis(sigma.shape[0])
    cols = []
    for b in basis:
        cols.append((grad_fn(sigma + step * b) - grad_fn(sigma - step * b)) / (2.0 * step))
    return np.stack(cols, axis=1)


# -- property harness ----------------------------------------------------


@dataclass(frozen=True)
class PropertyResult:
    """One verified invariant.

    ``worst_margin`` is the smallest observed slack: for statistical checks
    it is measured in standard-error units against the 3-SE gate, for
    deterministic checks in the natural units of the quantity.  Negative
    slack means the property failed.
    """

    name: str
    trials: int
    worst_margin: float
    passed: bool


@dataclass(frozen=True)
class PropertyReport:
    results: tuple

    @property
    def all_passed(self):
        return all(r.passed for r in self.results)

    def __getitem__(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self):
        lines = ["property report"]
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(
                f"  {status}  {r.name:32s} trials={r.trials:<5d} worst_margin={r.worst_margin:+.4g}"
            )
        lines.append("all passed" if self.all_passed else "FAILURES PRESENT")
        return "\n".join(lines)

    def csv_rows(self):
        yield ("property", "trials", "worst_margin_se", "pass")
        for r in self.results:
            yield (r.name, str(r.trials), "%.17g" % r.worst_margin, str(r.passed).lower())

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in self.csv_rows():
                fh.write(",".join(row) + "\n")


def _random_psd(rng, n, trace):
    x = (rng.standard_normal((n, n + 2)) + 1j * rng.standard_normal((n, n + 2))) / np.sqrt(2)
    a = x @ np.conj(x).T
    return a * (trace / np.trace(a).real)


def _random_pd(rng, n, trace):
    a = _random_psd(rng, n, trace * 0.9)
    return a + (0.1 * trace / n) * np.eye(n)


def _slack_z(est, gate=3.0):
    # one-sided slack in SE units for "mean >= 0 up to `gate` SEs"
    if est.std_err == 0.0:
        return math.inf if est.mean >= 0.0 else -math.inf
    return est.mean / est.std_err + gate


def _slack_match(diff, se, gate=3.0):
    # two-sided slack in SE units for "|diff| <= gate SEs"
    if se == 0.0:
        return math.inf if diff == 0.0 else -math.inf
    return gate - abs(diff) / se


def property_suite(spec, budget, samples, trial_count=200):
    """Run the statistical/deterministic invariants and collect a report.

    Parameters
    ----------
    spec : ChannelSpec
        Must satisfy ``n_r >= n_e`` and ``sigma_h >= sigma_g`` (the regime
        where monotonicity and positivity are guaranteed).
    budget : TotalPower or PerAntennaPower
        Sets the power scale of the randomized covariance trials.
    samples : SampleSet
        Common-random-number draw set shared by all paired comparisons.
    trial_count : int
        Number of randomized trials for the heaviest properties; the
        cheaper ones use fixed fractions of it.

    Returns
    -------
    PropertyReport
    """
    rng = np.random.default_rng((samples.seed ^ 0x5EED5EED) & ((1 << 64) - 1))
    n_t = spec.n_t
    p_total = budget.p if isinstance(budget, rates.TotalPower) else budget.total
    results = []

    # covariance monotonicity: growing the covariance in the PSD order
    # never decreases the rate (checked as a CRN difference)
    worst = math.inf
    for _ in range(trial_count):
        s1 = _random_psd(rng, n_t, rng.uniform(0.2, 0.8) * p_total)
        s2 = s1 + _random_psd(rng, n_t, rng.uniform(0.05, 0.5) * p_total)
        diff = rates.rate_difference(s2, s1, samples)
        worst = min(worst, _slack_z(diff))
    results.append(PropertyResult("covariance_monotonicity", trial_count, worst, worst >= 0.0))

    # strictly PD covariance gives a strictly positive rate; the product
    # form of the transformed integrand is positive draw by draw
    pos_trials = max(10, trial_count // 10)
    worst_mean = math.inf
    worst_draw = math.inf
    strict = spec.sigma_h2 > spec.sigma_g2
    for _ in range(pos_trials):
        s = _random_pd(rng, n_t, rng.uniform(0.3, 1.0) * p_total)
        est = rates.secrecy_rate(s, samples)
        worst_mean = min(worst_mean, _slack_z(est))
        per_draw = rates.per_sample_transformed_values(s, samples)
        worst_draw = min(worst_draw, float(per_draw.min()))
    results.append(PropertyResult("pd_rate_positive", pos_trials, worst_mean, worst_mean >= 0.0))
    results.append(
        PropertyResult(
            "per_draw_transformed_positive",
            pos_trials,
            worst_draw,
            worst_draw > 0.0 if strict else worst_draw >= 0.0,
        )
    )

    # uniform power split beats any other diagonal split of the same trace
    schur_trials = max(20, trial_count // 2)
    uniform = (p_total / n_t) * np.eye(n_t, dtype=complex)
    worst = math.inf
    for _ in range(schur_trials):
        d = rng.dirichlet(np.ones(n_t)) * p_total
        diff = rates.rate_difference(uniform, np.diag(d).astype(complex), samples)
        worst = min(worst, _slack_z(diff))
    results.append(PropertyResult("uniform_diag_optimal", schur_trials, worst, worst >= 0.0))

    # scaling up the uniform covariance is monotone (full power is best)
    alphas = np.linspace(0.0, p_total / n_t, 8)
    worst = math.inf
    eye = np.eye(n_t, dtype=complex)
    for lo, hi in zip(alphas[:-1], alphas[1:]):
        diff = rates.rate_difference(hi * eye, lo * eye, samples)
        worst = min(worst, _slack_z(diff))
    results.append(PropertyResult("full_power_monotone", len(alphas) - 1, worst, worst >= 0.0))

    # deterministic per-draw midpoint concavity of the transformed integrand
    conc_trials = max(100, trial_count)
    worst = math.inf
    for _ in range(conc_trials):
        k = int(rng.integers(samples.count))
        h_k, g_k = samples.draw(k)
        s1 = _random_pd(rng, n_t, rng.uniform(0.3, 1.0) * p_total)
        s2 = _random_pd(rng, n_t, rng.uniform(0.3, 1.0) * p_total)
        f1 = rates.per_sample_transformed(s1, h_k, g_k, spec)
        f2 = rates.per_sample_transformed(s2, h_k, g_k, spec)
        fm = rates.per_sample_transformed(0.5 * (s1 + s2), h_k, g_k, spec)
        worst = min(worst, fm - 0.5 * (f1 + f2))
    results.append(
        PropertyResult("per_draw_midpoint_concavity", conc_trials, worst, worst >= -1e-9)
    )

    # the same-marginal channel reproduces the legitimate log-det mean
    worst = math.inf
    hp = channel.same_marginal_h(samples.h, samples.g, spec)
    for _ in range(5):
        s = _random_psd(rng, n_t, rng.uniform(0.3, 1.0) * p_total)
        direct = rates.RateEstimate.from_values(rates.gram_logdet_values(samples.h, s))
        marginal = rates.RateEstimate.from_values(rates.gram_logdet_values(hp, s))
        worst = min(
            worst,
            _slack_match(direct.mean - marginal.mean, rates.combined_std_err(direct, marginal)),
        )
    results.append(PropertyResult("same_marginal_match", 5, worst, worst >= 0.0))

    # transformed and direct estimators agree across independent draw sets
    other = channel.sample(spec, samples.count, samples.seed + 104729)
    worst = math.inf
    for _ in range(5):
        s = _random_psd(rng, n_t, rng.uniform(0.3, 1.0) * p_total)
        direct = rates.secrecy_rate(s, other)
        transformed = rates.transformed_rate(s, samples)
        worst = min(
            worst,
            _slack_match(
                direct.mean - transformed.mean, rates.combined_std_err(direct, transformed)
            ),
        )
    results.append(PropertyResult("transformed_vs_direct_match", 5, worst, worst >= 0.0))

    # matched eavesdropper (same antennas, same variance) zeroes the rate
    spec_zero = channel.ChannelSpec(n_t, spec.n_e, spec.n_e, spec.sigma_g2, spec.sigma_g2)
    zero_samples = channel.sample(spec_zero, samples.count, samples.seed + 7919)
    est = rates.secrecy_rate((p_total / n_t) * eye, zero_samples)
    slack = _slack_match(est.mean, est.std_err)
    results.append(PropertyResult("zero_capacity_boundary", 1, slack, slack >= 0.0))

    # Wishart eigenvalue form tracks the direct uniform-covariance estimate
    worst = math.inf
    eig_r = channel.wishart_eigen_samples(n_t, spec.n_r, samples.count, samples.seed + 31)
    eig_e = (
        eig_r
        if spec.n_e == spec.n_r
        else channel.wishart_eigen_samples(n_t, spec.n_e, samples.count, samples.seed + 37)
    )
    for p in (0.25 * p_total, 0.5 * p_total, p_total):
        direct = rates.capacity_total(spec, p, samples)
        wishart = (
            rates.capacity_wishart_form(spec, p, eig_r)
            if spec.n_e == spec.n_r
            else rates.capacity_wishart_form(spec, p, eig_r, eig_e)
        )
        se = rates.combined_std_err(direct, wishart)
        worst = min(worst, _slack_match(direct.mean - wishart.mean, se))
    results.append(PropertyResult("wishart_form_match", 3, worst, worst >= 0.0))

    # diagonal covariance is optimal for the single-antenna-receiver scalar
    # objective at fixed diagonal (paired comparison on common draws)
    worst = math.inf
    mis_trials = max(20, trial_count // 2)
    for n_mis in (2, 3):
        spec_mis = channel.ChannelSpec(n_mis, 1, 1, spec.sigma_h2, spec.sigma_g2)
        g_set = channel.sample(spec_mis, min(samples.count, 20000), samples.seed + 11 + n_mis)
        diag_p = np.full(n_mis, p_total / n_mis)
        diag_sigma = np.diag(diag_p).astype(complex)
        for _ in range(mis_trials // 2):
            beta = rng.uniform(-0.95, -0.05)
            noise = rng.uniform(max(0.55, -beta / 2 + 0.05), 2.0)
            off = _random_psd(rng, n_mis, p_total)
            cand = off - np.diag(np.diag(off)) + np.diag(diag_p)
            # shrink the off-diagonal part until the fixed-diagonal matrix is PSD
            shrink = 1.0
            while cmatrix.smallest_eigenvalue(cand) < 0.0 and shrink > 1e-6:
                shrink *= 0.5
                cand = shrink * (off - np.diag(np.diag(off))) + np.diag(diag_p)
            base = rates.misose_scalar_objective(diag_sigma, beta, noise, g_set)
            other_est = rates.misose_scalar_objective(cand, beta, noise, g_set)
            se = rates.combined_std_err(base, other_est)
            slack = math.inf if se == 0.0 else (base.mean - other_est.mean) / se + 3.0
            worst = min(worst, slack)
    results.append(PropertyResult("misose_diag_optimal", mis_trials, worst, worst >= 0.0))

    # Gram identity of the same-marginal channel, draw by draw
    gram_hp = np.einsum("kmi,kmj->kij", np.conj(hp), hp)
    top = samples.h[:, : spec.n_r - spec.n_e, :]
    gram_sum = np.einsum("kmi,kmj->kij", np.conj(top), top) + spec.variance_ratio * np.einsum(
        "kmi,kmj->kij", np.conj(samples.g), samples.g
    )
    scale = max(float(np.abs(gram_sum).max()), 1.0)
    max_dev = float(np.abs(gram_hp - gram_sum).max()) / scale
    results.append(
        PropertyResult("gram_identity", samples.count, 1e-12 - max_dev, max_dev <= 1e-12)
    )

    # bit-exact regeneration of the seeded ensemble
    probe = channel.sample(spec, min(samples.count, 1000), samples.seed)
    again = channel.sample(spec, min(samples.count, 1000), samples.seed)
    identical = np.array_equal(probe.h, again.h) and np.array_equal(probe.g, again.g)
    prefix = np.array_equal(probe.h, samples.h[: probe.count]) if samples.count >= probe.count else True
    ok = identical and prefix
    results.append(PropertyResult("sampling_reproducible", 2, 1.0 if ok else -1.0, ok))

    # solver end state: feasible, PSD, certified gap, deterministic rerun
    if isinstance(budget, rates.PerAntennaPower) and len(budget.powers) == n_t:
        powers = np.asarray(budget.powers)
    else:
        powers = np.full(n_t, p_total / n_t)
    if np.all(powers > 0.0):
        solver_samples = channel.sample(spec, min(samples.count, 4000), samples.seed + 131)
        state_a, _ = solver.optimize(spec, powers, solver_samples)
        state_b, _ = solver.optimize(spec, powers, solver_samples)
        feas = float(np.abs(np.diag(state_a.sigma).real - powers).max())
        ok = (
            feas <= 1e-8
            and cmatrix.is_psd(state_a.sigma)
            and state_a.gap < solver.SolverConfig().epsilon
            and np.array_equal(state_a.sigma, state_b.sigma)
        )
        results.append(PropertyResult("solver_feasible_deterministic", 2, 1e-8 - feas, ok))

    return PropertyReport(results=tuple(results))
