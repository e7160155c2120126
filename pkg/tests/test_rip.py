"""Empirical restricted-isometry deviations and failure-probability curves."""
import numpy as np
import pytest

from varfun.basis import legendre_tensor_basis
from varfun.measure import DomainSpec, draw_samples, uniform_weight
from varfun.model import FullSpace, LinearSpan, Rank1Cone
from varfun.rip import (
    MC,
    SPECTRAL,
    rip_delta_linear,
    rip_delta_mc,
    rip_probability,
    wilson_interval,
)
from varfun.variation import optimal_weight, variation_exact, variation_norms

BASIS = legendre_tensor_basis((3,))

# exact one-sample failure probability for the singleton {b_1} at delta=0.1:
# the empirical norm is 3y^2, so success means y^2 in [0.3, 1.1/3]
P_FAIL_SINGLETON = 1.0 - (np.sqrt(1.1 / 3) - np.sqrt(0.9 / 3))


def test_spectral_delta_matches_manual_gram():
    span = FullSpace(BASIS)
    batch = draw_samples(DomainSpec(1), uniform_weight(1), 40, seed=0)
    report = rip_delta_linear(span, batch)
    design = BASIS.kernel_rows(batch.points)
    gram = design.T @ (batch.weights[:, None] * design) / batch.n
    eig = np.linalg.eigvalsh(gram)
    assert report.delta_hat == pytest.approx(
        max(1 - eig[0], eig[-1] - 1), abs=1e-13
    )
    assert report.method == SPECTRAL
    assert report.dim == 3


def test_spectral_delta_shrinks_with_more_samples():
    span = FullSpace(BASIS)
    small = rip_delta_linear(
        span, draw_samples(DomainSpec(1), uniform_weight(1), 30, seed=1)
    )
    large = rip_delta_linear(
        span, draw_samples(DomainSpec(1), uniform_weight(1), 30_000, seed=1)
    )
    assert large.delta_hat < small.delta_hat
    assert large.delta_hat < 0.05


def test_mc_delta_lower_bounds_spectral_and_grows_with_vectors():
    span = FullSpace(BASIS)
    batch = draw_samples(DomainSpec(1), uniform_weight(1), 50, seed=2)
    spectral = rip_delta_linear(span, batch).delta_hat
    prev = 0.0
    for num_test in (64, 512, 4096):
        mc = rip_delta_mc(span, batch, num_test, seed=0).delta_hat
        assert mc <= spectral + 1e-12
        assert mc >= prev - 1e-12
        prev = mc
    assert prev > 0.9 * spectral


def test_mc_delta_supports_nonlinear_classes():
    basis2 = legendre_tensor_basis((3, 3))
    batch = draw_samples(DomainSpec(2), uniform_weight(2), 100, seed=3)
    report = rip_delta_mc(Rank1Cone(basis2), batch, 512, seed=0)
    assert 0 < report.delta_hat < 1.5
    assert report.method == MC
    assert report.min_ratio <= 1 <= report.max_ratio or report.delta_hat > 0


def test_wilson_interval_frozen_values():
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(0.236593090512564, abs=1e-12)
    assert hi == pytest.approx(0.7634069094874361, abs=1e-12)


def test_wilson_interval_edge_cases():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert 0 < hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert 0.95 < lo < 1
    assert hi == pytest.approx(1.0, abs=1e-12)


def test_singleton_failure_rate_matches_exact_probability():
    singleton = LinearSpan(BASIS, ((1,),))
    k = variation_exact(singleton)
    sup = variation_norms(k).sup_norm
    est = rip_probability(
        singleton, uniform_weight(1), 1, 0.1, 10_000, seed=0, sup_norm_w=sup
    )
    se = np.sqrt(P_FAIL_SINGLETON * (1 - P_FAIL_SINGLETON) / 10_000)
    assert abs(est.rate - P_FAIL_SINGLETON) < 4 * se
    assert est.wilson_low < P_FAIL_SINGLETON < est.wilson_high


def test_hoeffding_exponent_formula():
    singleton = LinearSpan(BASIS, ((1,),))
    est = rip_probability(
        singleton, uniform_weight(1), 80, 0.3, 10, seed=0, sup_norm_w=3.0
    )
    assert est.hoeffding_exponent == pytest.approx(0.5 * 80 * (0.3 / 3.0) ** 2)


def test_probability_is_deterministic_across_threads():
    span = FullSpace(BASIS)
    sup = variation_norms(variation_exact(span)).sup_norm
    kwargs = dict(delta=0.4, trials=64, seed=9, sup_norm_w=sup)
    a = rip_probability(span, uniform_weight(1), 40, threads=1, **kwargs)
    b = rip_probability(span, uniform_weight(1), 40, threads=4, **kwargs)
    assert a.failures == b.failures
    assert a.rate == b.rate


def test_failure_rate_decreases_with_samples():
    span = FullSpace(BASIS)
    weight = optimal_weight(variation_exact(span))
    sup = variation_norms(variation_exact(span), weight).sup_norm
    rates = [
        rip_probability(
            span, weight, n, 0.5, 400, seed=1, sup_norm_w=sup
        ).rate
        for n in (10, 40, 160)
    ]
    assert rates[2] <= rates[0]
    assert rates[2] < 0.05


def test_mc_method_is_conservative():
    # the MC deviation understates the spectral one, so MC failure rates
    # cannot exceed spectral failure rates on the same draws
    span = FullSpace(BASIS)
    sup = variation_norms(variation_exact(span)).sup_norm
    kwargs = dict(delta=0.35, trials=200, seed=4, sup_norm_w=sup)
    spectral = rip_probability(
        span, uniform_weight(1), 25, method=SPECTRAL, **kwargs
    )
    mc = rip_probability(
        span, uniform_weight(1), 25, method=MC, num_test=512, **kwargs
    )
    assert mc.failures <= spectral.failures
