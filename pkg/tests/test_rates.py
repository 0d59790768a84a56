import numpy as np
import pytest
from scipy import integrate

from mimome import channel, oracle, rates
from mimome.errors import ConstraintError, DomainError

# E[log(1+40 e)] - E[log(1+10 e)], e ~ Exp(1), by exponential-integral
# quadrature (the single-antenna case with sigma_h2=4, sigma_g2=1, P=10)
SCALAR_RATE_40_10 = 1.2012669467599926


def random_psd(rng, n, trace=None):
    x = (rng.standard_normal((n, n + 2)) + 1j * rng.standard_normal((n, n + 2))) / np.sqrt(2)
    a = x @ x.conj().T
    if trace is not None:
        a *= trace / np.trace(a).real
    return a


def test_zero_covariance_gives_exact_zero():
    spec = channel.ChannelSpec(2, 2, 1, 4.0, 1.0)
    ss = channel.sample(spec, 100, 1)
    est = rates.secrecy_rate(np.zeros((2, 2)), ss)
    assert est.mean == 0.0 and est.std_err == 0.0 and est.n_samples == 100


def test_scalar_case_matches_quadrature_oracle():
    spec = channel.ChannelSpec(1, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 50_000, 2)
    est = rates.secrecy_rate(np.array([[10.0]]), ss)
    assert est.mean == pytest.approx(SCALAR_RATE_40_10, abs=3 * est.std_err)
    # frozen constant agrees with the quadrature oracle it came from
    assert oracle.scalar_quadrature_rate(40.0, 10.0) == pytest.approx(
        SCALAR_RATE_40_10, abs=1e-12
    )


def test_matched_ensembles_give_zero_mean():
    spec = channel.ChannelSpec(2, 2, 2, 1.5, 1.5)
    ss = channel.sample(spec, 20_000, 3)
    rng = np.random.default_rng(4)
    est = rates.secrecy_rate(random_psd(rng, 2, trace=8.0), ss)
    assert abs(est.mean) < 3 * est.std_err


def test_rejects_bad_covariances():
    spec = channel.ChannelSpec(2, 2, 1, 4.0, 1.0)
    ss = channel.sample(spec, 10, 5)
    with pytest.raises(ValueError):
        rates.secrecy_rate(np.eye(3), ss)
    with pytest.raises(DomainError):
        rates.secrecy_rate(np.array([[1.0, 2.0], [0.0, 1.0]]), ss)
    with pytest.raises(DomainError):
        rates.secrecy_rate(np.diag([1.0, -0.5]), ss)


# -- transformed functional -------------------------------------------------


def test_transformed_zero_cases():
    spec = channel.ChannelSpec(2, 1, 1, 2.0, 2.0)
    ss = channel.sample(spec, 500, 6)
    rng = np.random.default_rng(7)
    sigma = random_psd(rng, 2, trace=4.0)
    values = rates.transformed_rate_values(sigma, ss)
    assert np.all(values == 0.0)
    est = rates.transformed_rate(np.zeros((2, 2)), ss)
    assert est.mean == 0.0 and est.std_err == 0.0


def test_transformed_matches_direct_on_independent_sets():
    spec = channel.ChannelSpec(2, 3, 1, 4.0, 1.0)
    ss_direct = channel.sample(spec, 60_000, 8)
    ss_transformed = channel.sample(spec, 60_000, 9)
    rng = np.random.default_rng(10)
    for _ in range(3):
        sigma = random_psd(rng, 2, trace=10.0)
        direct = rates.secrecy_rate(sigma, ss_direct)
        transformed = rates.transformed_rate(sigma, ss_transformed)
        tol = 3 * rates.combined_std_err(direct, transformed)
        assert abs(direct.mean - transformed.mean) < tol


def test_transformed_requires_dominant_regime():
    spec = channel.ChannelSpec(2, 1, 1, 1.0, 4.0)
    ss = channel.sample(spec, 10, 11)
    with pytest.raises(ConstraintError):
        rates.transformed_rate(np.eye(2), ss)


# -- per-draw product form ---------------------------------------------------


def test_per_sample_transformed_zero_at_matched_ensembles():
    spec = channel.ChannelSpec(2, 1, 1, 3.0, 3.0)
    ss = channel.sample(spec, 5, 12)
    h, g = ss.draw(0)
    assert rates.per_sample_transformed(np.eye(2), h, g, spec) == pytest.approx(0.0, abs=1e-15)


def test_per_sample_transformed_matches_difference_form():
    spec = channel.ChannelSpec(2, 2, 1, 4.0, 1.0)
    ss = channel.sample(spec, 50, 13)
    rng = np.random.default_rng(14)
    sigma = random_psd(rng, 2, trace=6.0) + 0.5 * np.eye(2)
    diff_form = rates.transformed_rate_values(sigma, ss)
    for k in range(10):
        h, g = ss.draw(k)
        prod_form = rates.per_sample_transformed(sigma, h, g, spec)
        assert prod_form == pytest.approx(diff_form[k], abs=1e-9)


def test_per_sample_transformed_scalar_reduction():
    # n_t = n_r = n_e = 1, sigma = [1]: log(1 + (r-1)|g|^2 / (1 + |g|^2))
    spec = channel.ChannelSpec(1, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 5, 15)
    h, g = ss.draw(2)
    gg = abs(g[0, 0]) ** 2
    expected = np.log(1.0 + 3.0 * gg / (1.0 + gg))
    got = rates.per_sample_transformed(np.array([[1.0]]), h, g, spec)
    assert got == pytest.approx(expected, rel=1e-12)


def test_per_sample_transformed_rejects_singular():
    spec = channel.ChannelSpec(2, 2, 1, 4.0, 1.0)
    ss = channel.sample(spec, 5, 16)
    h, g = ss.draw(0)
    with pytest.raises(DomainError, match="transformed_rate"):
        rates.per_sample_transformed(np.diag([1.0, 0.0]), h, g, spec)


# -- capacities ---------------------------------------------------------------


def test_capacity_total_zero_power():
    spec = channel.ChannelSpec(3, 2, 1, 4.0, 1.0)
    ss = channel.sample(spec, 100, 17)
    est = rates.capacity_total(spec, 0.0, ss)
    assert est.mean == 0.0 and est.std_err == 0.0


def test_capacity_total_outside_regime():
    spec = channel.ChannelSpec(2, 1, 2, 4.0, 1.0)
    ss = channel.sample(spec, 10, 18)
    with pytest.raises(ConstraintError):
        rates.capacity_total(spec, 10.0, ss)


def test_capacity_total_scalar_case():
    spec = channel.ChannelSpec(1, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 50_000, 19)
    est = rates.capacity_total(spec, 10.0, ss)
    assert est.mean == pytest.approx(SCALAR_RATE_40_10, abs=3 * est.std_err)


def test_capacity_saturates_with_matched_antennas():
    # with n_r = n_e the capacity curve flattens at high SNR
    spec = channel.ChannelSpec(4, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 50_000, 20)
    high = rates.capacity_total(spec, 10_000.0, ss)
    higher = rates.capacity_total(spec, 100_000.0, ss)
    assert abs(higher.mean - high.mean) < 0.1


def test_capacity_misose_per_antenna():
    spec = channel.ChannelSpec(2, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 200, 21)
    est = rates.capacity_misose_per_antenna(spec, [0.0, 0.0], ss)
    assert est.mean == 0.0

    single = channel.ChannelSpec(1, 1, 1, 4.0, 1.0)
    ss1 = channel.sample(single, 5_000, 22)
    a = rates.capacity_misose_per_antenna(single, [7.0], ss1)
    b = rates.capacity_total(single, 7.0, ss1)
    assert a == b

    wrong = channel.ChannelSpec(2, 2, 1, 4.0, 1.0)
    with pytest.raises(ConstraintError):
        rates.capacity_misose_per_antenna(wrong, [1.0, 1.0], channel.sample(wrong, 10, 23))


def test_uniform_per_antenna_matches_total():
    spec = channel.ChannelSpec(2, 1, 1, 4.0, 1.0)
    a = rates.capacity_misose_per_antenna(spec, [10.0, 10.0], channel.sample(spec, 60_000, 24))
    b = rates.capacity_total(spec, 20.0, channel.sample(spec, 60_000, 25))
    assert abs(a.mean - b.mean) < 3 * rates.combined_std_err(a, b)


# -- scalar objective ---------------------------------------------------------


def test_misose_objective_zero_beta():
    spec = channel.ChannelSpec(2, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 100, 26)
    est = rates.misose_scalar_objective(np.diag([2.0, 3.0]), 0.0, 1.0, ss)
    assert est.mean == 0.0 and est.std_err == 0.0


def test_misose_objective_unitary_invariance():
    spec = channel.ChannelSpec(2, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 40_000, 27)
    rng = np.random.default_rng(28)
    sigma = random_psd(rng, 2, trace=8.0)
    q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    rotated = q @ sigma @ q.conj().T
    a = rates.misose_scalar_objective(sigma, -0.75, 1.0, ss)
    b = rates.misose_scalar_objective(rotated, -0.75, 1.0, ss)
    assert abs(a.mean - b.mean) < 3 * rates.combined_std_err(a, b)


def test_misose_objective_quadrature():
    # n_t = 1: E[log(1 + beta/(noise + sigma_g2 P e))], e ~ Exp(1)
    spec = channel.ChannelSpec(1, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 50_000, 29)
    beta, noise, p = -0.75, 1.0, 5.0
    est = rates.misose_scalar_objective(np.array([[p]]), beta, noise, ss)
    ref, _ = integrate.quad(
        lambda x: np.log1p(beta / (noise + p * x)) * np.exp(-x), 0.0, np.inf
    )
    assert est.mean == pytest.approx(ref, abs=3 * est.std_err)


def test_misose_objective_domain_checks():
    spec = channel.ChannelSpec(2, 1, 1, 4.0, 1.0)
    ss = channel.sample(spec, 10, 30)
    with pytest.raises(ValueError):
        rates.misose_scalar_objective(np.eye(2), 0.5, 1.0, ss)
    with pytest.raises(ValueError):
        rates.misose_scalar_objective(np.eye(2), -0.5, 0.0, ss)
    with pytest.raises(ValueError):
        rates.misose_scalar_objective(np.eye(2), -3.0, 1.0, ss)


# -- Wishart form -------------------------------------------------------------


def test_wishart_form_zero_power():
    spec = channel.ChannelSpec(4, 2, 2, 4.0, 1.0)
    eig = channel.wishart_eigen_samples(4, 2, 100, 31)
    est = rates.capacity_wishart_form(spec, 0.0, eig)
    assert est.mean == 0.0


def test_wishart_form_matches_direct():
    spec = channel.ChannelSpec(4, 2, 2, 4.0, 1.0)
    ss = channel.sample(spec, 50_000, 32)
    eig = channel.wishart_eigen_samples(4, 2, 50_000, 33)
    direct = rates.capacity_total(spec, 100.0, ss)
    wishart = rates.capacity_wishart_form(spec, 100.0, eig)
    assert abs(direct.mean - wishart.mean) < 3 * rates.combined_std_err(direct, wishart)


def test_wishart_form_matched_ensembles_zero():
    spec = channel.ChannelSpec(3, 2, 2, 2.0, 2.0)
    eig = channel.wishart_eigen_samples(3, 2, 1_000, 34)
    est = rates.capacity_wishart_form(spec, 50.0, eig)
    assert est.mean == 0.0 and est.std_err == 0.0


def test_wishart_form_mismatched_dims_need_second_ensemble():
    spec = channel.ChannelSpec(2, 3, 1, 4.0, 1.0)
    eig_r = channel.wishart_eigen_samples(2, 3, 1_000, 35)
    with pytest.raises(ValueError):
        rates.capacity_wishart_form(spec, 10.0, eig_r)
    eig_e = channel.wishart_eigen_samples(2, 1, 1_000, 36)
    est = rates.capacity_wishart_form(spec, 10.0, eig_r, eig_e)
    assert est.n_samples == 1_000


# -- zero capacity / slope -----------------------------------------------------


def test_zero_capacity_predicate():
    assert rates.zero_capacity(channel.ChannelSpec(2, 1, 2, 1.0, 4.0))
    assert not rates.zero_capacity(channel.ChannelSpec(2, 2, 1, 4.0, 1.0))
    assert rates.zero_capacity(channel.ChannelSpec(1, 1, 1, 2.0, 2.0))


def test_snr_slope_exact_line():
    points = [(p, 2.0 * np.log(p) + 1.0) for p in (10.0, 100.0, 1e3, 1e4)]
    assert rates.snr_slope(points) == pytest.approx(2.0, rel=1e-12)
    slope, intercept = rates.snr_fit(points)
    assert intercept == pytest.approx(1.0, abs=1e-9)


def test_snr_slope_needs_two_distinct_points():
    with pytest.raises(ValueError):
        rates.snr_slope([(10.0, 1.0), (10.0, 2.0)])


# -- order properties (quick versions; the full gates live in acceptance) -----


def test_monotonicity_small():
    spec = channel.ChannelSpec(2, 2, 1, 4.0, 1.0)
    ss = channel.sample(spec, 20_000, 37)
    rng = np.random.default_rng(38)
    for _ in range(20):
        s1 = random_psd(rng, 2, trace=rng.uniform(1.0, 50.0))
        s2 = s1 + random_psd(rng, 2, trace=rng.uniform(0.5, 30.0))
        diff = rates.rate_difference(s2, s1, ss)
        assert diff.mean >= -3 * diff.std_err


def test_positivity_per_draw():
    spec = channel.ChannelSpec(2, 2, 1, 4.0, 1.0)
    ss = channel.sample(spec, 2_000, 39)
    rng = np.random.default_rng(40)
    sigma = random_psd(rng, 2, trace=10.0) + 0.2 * np.eye(2)
    values = rates.per_sample_transformed_values(sigma, ss)
    assert np.all(values > 0.0)
