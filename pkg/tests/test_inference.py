import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from discrete_lifetimes import distributions as dist
from discrete_lifetimes.distributions import IpdParams, W1Params, WeibullParams
from discrete_lifetimes.inference import (
    AllCensored,
    DegenerateSample,
    FitConfig,
    FitError,
    IpdLikelihoodStats,
    Model,
    fit_ipd,
    fit_w1,
    fit_weibull,
    ipd_gradient,
    ipd_grid_search,
    ipd_hessian,
    ipd_log_likelihood,
    ipd_log_likelihood_gamma_form,
    ipd_quantile,
    ipd_score_equations,
    kaplan_meier,
    w1_log_likelihood,
    weibull_log_likelihood,
)
from discrete_lifetimes.sampling import (
    LifetimeSample,
    SeededStream,
    apply_censoring,
    sample_ipd,
    sample_w1,
)

records = st.lists(st.tuples(st.integers(1, 80), st.sampled_from([0, 1])), min_size=1, max_size=60)
interior = st.tuples(st.floats(1e-3, 0.9), st.floats(1e-5, 1.0))


def naive_ipd_ll(sample, p):
    total = 0.0
    for v, e in sample.records():
        total += dist.ipd_log_pmf(p, v) if e else dist.ipd_log_survival(p, v)
    return total


def censored_w1(eta, beta, size, rate, seed, mechanism="uniform"):
    g = SeededStream(seed).generator()
    s = sample_w1(W1Params(eta, beta), size, g)
    return apply_censoring(s, rate, g, mechanism=mechanism) if rate else s


# --- IPD likelihood ----------------------------------------------------------


def test_ipd_ll_examples():
    p = IpdParams(0.3, 0.01)
    assert ipd_log_likelihood(LifetimeSample.from_records([(1, 1)]), p) == pytest.approx(math.log(0.3))
    s = LifetimeSample.from_records([(5, 0)])
    assert ipd_log_likelihood(s, p) == pytest.approx(dist.ipd_log_survival(p, 5), rel=1e-14)
    assert ipd_log_likelihood(s, (0.0, 0.1)) == -math.inf
    assert ipd_log_likelihood(s, (1.0, 0.1)) == -math.inf


def test_likelihood_stats():
    s = LifetimeSample.from_records([(3, 0), (3, 0), (7, 0), (2, 1), (4, 1)])
    st_ = IpdLikelihoodStats.from_grouped(s.grouped())
    assert (st_.s, st_.r, st_.mu) == (2, 2, 5)
    assert st_.A == 2 * 3 + 7 + 2 + 4 - 2


@given(records, interior)
def test_ipd_ll_matches_per_record_oracle(recs, pz):
    s = LifetimeSample.from_records(recs)
    p = IpdParams(*pz)
    ref = naive_ipd_ll(s, p)
    assert ipd_log_likelihood(s.grouped(), p) == pytest.approx(ref, abs=1e-9, rel=1e-12)
    assert ipd_log_likelihood(s, p) == pytest.approx(ref, abs=1e-9, rel=1e-12)


@given(records, st.tuples(st.floats(1e-3, 0.9), st.floats(1e-2, 1.0)))
def test_gamma_form_agrees(recs, pz):
    s = LifetimeSample.from_records(recs)
    p = IpdParams(*pz)
    assert ipd_log_likelihood_gamma_form(s, p) == pytest.approx(ipd_log_likelihood(s, p), abs=1e-8, rel=1e-10)


def _fd_grad(s, a, z, h=1e-6):
    ha, hz = h * a, h * z
    return np.array(
        [
            (ipd_log_likelihood(s, (a + ha, z)) - ipd_log_likelihood(s, (a - ha, z))) / (2 * ha),
            (ipd_log_likelihood(s, (a, z + hz)) - ipd_log_likelihood(s, (a, z - hz))) / (2 * hz),
        ]
    )


def test_gradient_and_hessian_match_finite_differences():
    rng = np.random.default_rng(0)
    s = sample_ipd(IpdParams(0.05, 0.02), 300, SeededStream(1))
    s = apply_censoring(s, 0.3, SeededStream(2))
    for _ in range(20):
        a, z = 10 ** rng.uniform(-3, -0.3), 10 ** rng.uniform(-4, 0)
        p = IpdParams(a, z)
        fd = _fd_grad(s, a, z)
        for method in ("sum", "digamma"):
            g = ipd_gradient(s, p, method=method)
            np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-6 * np.abs(fd).max())
        h = 1e-6
        col_a = (ipd_gradient(s, IpdParams(a + h * a, z)) - ipd_gradient(s, IpdParams(a - h * a, z))) / (2 * h * a)
        col_z = (ipd_gradient(s, IpdParams(a, z + h * z)) - ipd_gradient(s, IpdParams(a, z - h * z))) / (2 * h * z)
        H_fd = np.column_stack([col_a, col_z])
        for method in ("sum", "digamma"):
            np.testing.assert_allclose(ipd_hessian(s, p, method=method), H_fd, rtol=1e-5, atol=1e-6 * np.abs(H_fd).max())


@given(records, interior)
def test_score_equations_are_scaled_gradient(recs, pz):
    s = LifetimeSample.from_records(recs)
    p = IpdParams(*pz)
    g = ipd_gradient(s, p)
    first, second = ipd_score_equations(s, p)
    assert first == pytest.approx((1 - p.alpha) * g[0], abs=1e-9 * (1 + abs(g[0])))
    assert second == pytest.approx(p.zeta**2 * g[1], abs=1e-7 * (1 + abs(g[1])) * max(1, p.zeta) ** 2)


# --- fit_ipd ------------------------------------------------------------------


def test_fit_ipd_geometric_recovery():
    s = sample_ipd(IpdParams(0.2, 0.0), 10_000, SeededStream(3))
    fit = fit_ipd(s)
    assert fit.converged and fit.model is Model.IPD
    assert abs(fit.params.alpha - 0.2) < 0.015
    assert fit.params.zeta < 1e-3


def test_fit_ipd_recovery():
    s = sample_ipd(IpdParams(0.01, 0.001), 10_000, SeededStream(4))
    fit = fit_ipd(s)
    assert fit.params.alpha == pytest.approx(0.01, rel=0.1)
    assert fit.params.zeta == pytest.approx(0.001, rel=0.1)
    assert fit.log_likelihood >= fit.grid_log_likelihood
    r1, r2 = ipd_score_equations(s, fit.params)
    assert abs(r1) < 1e-6 and abs(r2) < 1e-6


def test_fit_ipd_steep_weibull_gives_ratio_above_one():
    g = SeededStream(5).generator()
    s = sample_w1(W1Params(100, 2.5), 1000, g)
    assert fit_ipd(s).params.ratio > 1


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("rate", [0.0, 0.5])
def test_fit_ipd_converged_score_residuals(seed, rate):
    truth = [IpdParams(0.05, 0.01), IpdParams(0.3, 0.0), IpdParams(0.002, 0.0005)][seed % 3]
    s = sample_ipd(truth, 2000, SeededStream(seed))
    if rate:
        s = apply_censoring(s, rate, SeededStream(seed, 1))
    fit = fit_ipd(s)
    assert fit.converged
    assert 0 < fit.params.alpha < 1 and fit.params.zeta >= 0
    r1, r2 = ipd_score_equations(s, fit.params)
    assert abs(r2) < 1e-6
    if "alpha" not in fit.active_bounds:
        assert abs(r1) < 1e-6
    if "zeta" in fit.active_bounds:
        assert fit.params.zeta == 0.0 and ipd_gradient(s, fit.params)[1] <= 0


def test_fit_ipd_ascends_from_grid():
    s = sample_ipd(IpdParams(0.1, 0.05), 500, SeededStream(6))
    a, z, grid_ll = ipd_grid_search(IpdLikelihoodStats.from_grouped(s.grouped()), FitConfig())
    fit = fit_ipd(s)
    assert fit.log_likelihood >= grid_ll
    assert grid_ll == pytest.approx(ipd_log_likelihood(s, (a, z)))


def test_fit_ipd_all_censored():
    with pytest.raises(AllCensored):
        fit_ipd(LifetimeSample.from_records([(3, 0), (5, 0)]))


def test_fit_ipd_max_iterations_carries_result():
    s = sample_ipd(IpdParams(0.05, 0.01), 500, SeededStream(7))
    with pytest.raises(FitError) as info:
        fit_ipd(s, FitConfig(max_iter=1))
    assert info.value.result is not None and not info.value.result.converged


def test_ipd_quantile():
    p = IpdParams(0.3, 0.0)
    # geometric: P[N <= n] = 1 - 0.7**n
    assert ipd_quantile(p, 0.5) == 2
    p = IpdParams(0.01, 0.001)
    n = ipd_quantile(p, 0.9)
    assert dist.ipd_survival(p, n) <= 0.1 < dist.ipd_survival(p, n - 1)


# --- W1 / Weibull ---------------------------------------------------------------


def test_w1_ll_examples():
    p = W1Params(40, 1.7)
    assert w1_log_likelihood(LifetimeSample.from_records([(1, 1)]), p) == pytest.approx(math.log(p.one_minus_theta))
    assert w1_log_likelihood(LifetimeSample.from_records([(23, 0)]), p) == pytest.approx(-((23 / 40) ** 1.7))


@given(st.lists(st.integers(1, 500), min_size=1, max_size=40), st.floats(1, 1000), st.floats(0.2, 8))
def test_censor_only_likelihoods_identical(values, eta, beta):
    s = LifetimeSample(np.array(values), np.zeros(len(values), dtype=bool))
    assert w1_log_likelihood(s, W1Params(eta, beta)) == weibull_log_likelihood(s, WeibullParams(eta, beta))


@given(records, st.floats(1, 300), st.floats(0.3, 6))
def test_w1_ll_matches_per_record_oracle(recs, eta, beta):
    s = LifetimeSample.from_records(recs)
    p = W1Params(eta, beta)
    ref = sum(
        (dist.w1_log_pmf(p, v) if e else -((v / eta) ** beta)) for v, e in s.records()
    )
    assert w1_log_likelihood(s, p) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_fit_w1_recovery():
    s = censored_w1(300, 2.3, 10_000, 0, 8)
    fit = fit_w1(s)
    assert fit.converged
    assert fit.params.eta == pytest.approx(300, rel=0.05)
    assert fit.params.beta == pytest.approx(2.3, rel=0.05)
    assert fit.residuals[0] < FitConfig().tol
    assert fit.log_likelihood >= fit.grid_log_likelihood


def test_fit_w1_censored_recovery_independent_censoring():
    s = censored_w1(50, 1, 10_000, 0.5, 9, mechanism="independent")
    assert abs(fit_w1(s).params.beta - 1) < 0.1


def test_fit_w1_uniform_censoring_is_informative():
    # censor values drawn uniformly below the lifetime bias the shape upward
    betas = [fit_w1(censored_w1(50, 1, 10_000, 0.5, seed)).params.beta for seed in range(3)]
    assert all(b > 1.05 for b in betas)


def test_fit_w1_degenerate():
    with pytest.raises(DegenerateSample):
        fit_w1(LifetimeSample.uncensored(np.full(50, 4)))
    with pytest.raises(AllCensored):
        fit_w1(LifetimeSample.from_records([(3, 0), (9, 0)]))


def test_fit_weibull_exponential_recovery():
    g = SeededStream(10).generator()
    s = LifetimeSample.uncensored(np.maximum(1, np.round(g.exponential(100, 10_000))).astype(int))
    fit = fit_weibull(s)
    assert abs(fit.params.beta - 1) < 0.05
    assert abs(fit.params.eta - 100) < 5


@pytest.mark.parametrize("eta,seed", [(300, 11), (1000, 12)])
def test_w1_and_weibull_fits_close_under_heavy_censoring(eta, seed):
    s = censored_w1(eta, 2.3, 1000, 0.75, seed)
    a, b = fit_w1(s).params, fit_weibull(s).params
    assert abs(b.eta - a.eta) / a.eta < 0.05
    assert abs(b.beta - a.beta) / a.beta < 0.05


def test_fit_weibull_single_failure():
    with pytest.raises(FitError):
        fit_weibull(LifetimeSample.from_records([(5, 1)]))


def test_fit_result_derived_recomputed():
    fit = fit_w1(censored_w1(300, 2.3, 500, 0, 13))
    d = fit.derived
    assert d["mttf"] == dist.w1_mttf(fit.params)
    assert d["q90"] == dist.weibull_quantile(fit.params, 0.9)
    assert set(d) == {"mttf", "q50", "q75", "q90", "q99"}


def test_consistency_drift():
    errors = []
    for size in (100, 1000, 10_000):
        errs = []
        for seed in range(8):
            p = fit_w1(censored_w1(300, 2.3, size, 0, 100 + seed)).params
            errs.append(abs(p.eta - 300) / 300 + abs(p.beta - 2.3) / 2.3)
        errors.append(np.mean(errs))
    assert errors[0] > errors[1] > errors[2]
    ipd_errors = []
    for size in (100, 1000, 10_000):
        errs = []
        for seed in range(8):
            p = fit_ipd(sample_ipd(IpdParams(0.05, 0.01), size, SeededStream(200 + seed))).params
            errs.append(abs(p.alpha - 0.05) / 0.05 + abs(p.zeta - 0.01) / 0.01)
        ipd_errors.append(np.mean(errs))
    assert ipd_errors[0] > ipd_errors[1] > ipd_errors[2]


# --- Kaplan-Meier ---------------------------------------------------------------


def test_kaplan_meier_examples():
    km = kaplan_meier(LifetimeSample.uncensored([1, 2, 3]))
    assert [s for _, s, _, _ in km.steps] == pytest.approx([2 / 3, 1 / 3, 0])
    km = kaplan_meier(LifetimeSample.from_records([(2, 1), (1, 0)]))
    assert km.steps == [(2, 0.0, 1, 1)]


def test_kaplan_meier_tie_convention():
    km = kaplan_meier(LifetimeSample.from_records([(2, 1), (2, 0), (3, 1)]))
    # the censor at 2 is still at risk at 2
    assert km.steps[0] == (2, pytest.approx(2 / 3), 3, 1)
    assert km.steps[1] == (3, 0.0, 1, 1)


@given(st.lists(st.integers(1, 30), min_size=1, max_size=50))
def test_kaplan_meier_uncensored_is_empirical(values):
    s = LifetimeSample.uncensored(values)
    km = kaplan_meier(s)
    arr = np.array(values)
    for t, surv, _, _ in km.steps:
        assert surv == pytest.approx(np.mean(arr > t), abs=1e-12)
    assert np.all(np.diff(km.survival) <= 0) and np.all(km.survival <= 1)


def test_kaplan_meier_close_to_truth():
    p = W1Params(300, 2.3)
    s = censored_w1(300, 2.3, 10_000, 0.25, 14, mechanism="independent")
    km = kaplan_meier(s)
    assert np.max(np.abs(km.survival - dist.w1_survival(p, km.times))) < 0.03
