import math

import numpy as np
import pytest

from zoprox.analysis import (
    DissipativeCase,
    KappaOscCase,
    KappaOscThreshold,
    LipschitzCase,
    NonSmoothConvex,
    SmoothCase,
    SmoothConvex,
    convex_suboptimality_bound,
    convexification_threshold,
    convexity_certificate_1d,
    escape_probability_bound,
    escape_probability_log,
    poincare_bound,
    rate_bound,
    stability_bound,
    stability_bound_log,
)
from zoprox.core import GibbsProxParams, SeedSpec, generator
from zoprox.errors import InvalidEpsilon, InvalidRadius, LambdaTooLarge
from zoprox.oracles import covariance_quadrature_1d

from conftest import fd_gradient


class TestRateBound:
    def test_smooth_reference(self):
        p = GibbsProxParams(0.5, 1.0)
        r = rate_bound(SmoothCase(1.0), 1, p, 0.0)
        assert r.bound == pytest.approx(1.0, rel=1e-14)

    def test_smooth_lambda_too_large(self):
        with pytest.raises(LambdaTooLarge):
            rate_bound(SmoothCase(1.0), 1, GibbsProxParams(1.0, 1.0), 0.0)

    def test_kappa_osc_reference(self):
        p = GibbsProxParams(1.0, 1.0)
        r = rate_bound(KappaOscCase(kappa=1.0, osc=0.0, L=1.0), 1, p, 0.0)
        assert r.bound == pytest.approx(math.sqrt(0.5), rel=1e-14)

    def test_lipschitz_min_of_branches(self):
        p = GibbsProxParams(1.0, 1.0)
        r = rate_bound(LipschitzCase(L=1.0, G=0.0), 1, p, 0.0)
        # G=0 collapses both exponentials: min(sqrt(2), 2) = sqrt(2)
        assert r.bound == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_lipschitz_overflow_goes_inf_with_log(self):
        p = GibbsProxParams(10.0, 1e-3)
        r = rate_bound(LipschitzCase(L=1.0, G=10.0), 4, p, 0.1)
        assert r.bound == math.inf
        assert r.log_bound is not None and math.isfinite(r.log_bound)

    def test_gradient_factor_scales(self):
        p = GibbsProxParams(0.5, 1.0)
        r0 = rate_bound(SmoothCase(1.0), 1, p, 0.0)
        r1 = rate_bound(SmoothCase(1.0), 1, p, 2.0)
        assert r1.bound - r0.bound == pytest.approx((1 + 0.5) * 2.0, rel=1e-12)


class TestPoincareBound:
    def test_smooth_reference(self):
        assert poincare_bound(SmoothCase(1.0), GibbsProxParams(0.5, 1.0)).bound == pytest.approx(1.0)

    def test_lipschitz_g0(self):
        r = poincare_bound(LipschitzCase(L=0.0, G=0.0), GibbsProxParams(1.0, 1.0), d=1)
        assert r.bound == pytest.approx(2.0, rel=1e-12)

    def test_kappa_osc_reference(self):
        r = poincare_bound(KappaOscCase(kappa=1.0, osc=0.0), GibbsProxParams(1.0, 1.0))
        assert r.bound == pytest.approx(0.5, rel=1e-14)

    def test_smooth_requires_small_lambda(self):
        with pytest.raises(LambdaTooLarge):
            poincare_bound(SmoothCase(2.0), GibbsProxParams(0.5, 1.0))

    def test_exponent_constants_not_reconciled(self):
        # the printed factor is 2*sqrt(2d/pi) in the rate and 4*sqrt(2d/pi)
        # in the Poincare bound; both surface verbatim
        p = GibbsProxParams(1.0, 1.0)
        rr = rate_bound(LipschitzCase(L=1.0, G=1.0), 1, p, 0.0)
        pr = poincare_bound(LipschitzCase(L=1.0, G=1.0), p, d=1)
        a_rate = rr.inputs["log_branch_gaussian_tail"] - 0.5 * math.log(2 * 1 * 1.0 * 1.0)
        a_pc = pr.inputs["log_branch_gaussian_tail"] - math.log(2 * 1.0 * 1.0)
        assert a_pc == pytest.approx(2 * a_rate, rel=1e-12)

    def test_poincare_dominates_posterior_variance(self, wiggly, quad1d, abs_objective):
        # sigma2 <= d * C_P for each applicable case on the 1-D corpus
        p = GibbsProxParams(0.5, 1.0)
        cases = {
            "wiggly": (wiggly.objective, KappaOscCase(kappa=0.6, osc=3.0)),
            "abs": (abs_objective, LipschitzCase(L=0.0, G=1.0)),
            "quad": (quad1d.objective, SmoothCase(1.0)),
        }
        for name, (obj, case) in cases.items():
            bound = poincare_bound(case, p, d=1).bound
            for x in (-2.0, 0.0, 1.0):
                sigma2 = covariance_quadrature_1d(obj, x, p).sigma2
                assert sigma2 <= bound + 1e-9, (name, x)


class TestConvexificationThreshold:
    def test_zero_oscillation(self):
        assert convexification_threshold(KappaOscThreshold(1.0, 0.0), 1.0) == 0.0

    def test_wiggly_reference(self):
        thr = convexification_threshold(KappaOscThreshold(0.6, 3.0), 1.0)
        assert thr == pytest.approx((math.e**3 - 1) / 0.6, rel=1e-14)
        assert thr == pytest.approx(31.80, abs=0.01)

    def test_dissipative_degenerate_radius(self):
        assert convexification_threshold(DissipativeCase(m=1.0, b=0.0, R=0.0, d=1), 1.0) == pytest.approx(1.0)


class TestEscapeBound:
    def test_reference_value(self):
        p = GibbsProxParams(1.0, 1.0)
        R = 4.0 * 4 * p.sigma2  # alpha = 4, d = 4
        assert escape_probability_bound(1, 4, p, R) == pytest.approx(math.exp(-2.25), rel=1e-12)

    def test_clamped_near_boundary(self):
        p = GibbsProxParams(1.0, 1.0)
        R = 1.0000001 * 2 * p.sigma2  # alpha barely above 1, d=2
        assert escape_probability_bound(10, 2, p, R) == 1.0

    def test_doubling_n_doubles_preclamp(self):
        p = GibbsProxParams(1.0, 1.0)
        R = 4.0 * 4 * p.sigma2
        l1 = escape_probability_log(1, 4, p, R)
        l2 = escape_probability_log(2, 4, p, R)
        assert l2 - l1 == pytest.approx(math.log(2.0), rel=1e-12)

    def test_invalid_radius(self):
        p = GibbsProxParams(1.0, 1.0)
        with pytest.raises(InvalidRadius):
            escape_probability_bound(1, 4, p, 4 * p.sigma2)

    def test_one_sided_vs_empirical_quadratic_proposals(self):
        # empirical escape frequency never exceeds the bound
        p = GibbsProxParams(1.0, 1.0)
        d, alpha = 4, 4.0
        R = alpha * d * p.sigma2
        rng = generator(SeedSpec(12))
        sq = p.sigma2 * (rng.standard_normal((10_000, d)) ** 2).sum(axis=1)
        freq = float(np.mean(sq >= R))
        assert freq <= escape_probability_bound(1, d, p, R)


class TestStabilityBound:
    def test_vanishing_margin(self):
        assert stability_bound(100, 0.5, 0.499999999, 1.0) == pytest.approx(1.0, abs=1e-6)

    def test_no_samples(self):
        assert stability_bound(0, 0.5, 0.25, 1.0) == 1.0

    def test_log_form_reference(self):
        assert stability_bound_log(1000, 0.5, 0.25, 1.0) == pytest.approx(-125.0, rel=1e-14)
        assert stability_bound(1000, 0.5, 0.25, 1.0) == pytest.approx(math.exp(-125.0), rel=1e-12)

    def test_true_underflow_clamps_to_zero(self):
        assert stability_bound(100_000, 0.5, 0.25, 1.0) == 0.0
        assert stability_bound_log(100_000, 0.5, 0.25, 1.0) == pytest.approx(-12500.0)

    def test_invalid_epsilon(self):
        with pytest.raises(InvalidEpsilon):
            stability_bound(10, 0.5, 0.7, 1.0)


class TestConvexSuboptimality:
    def test_nonsmooth_floor(self):
        p = GibbsProxParams(1.0, 1.0)
        r = convex_suboptimality_bound(NonSmoothConvex(), 1, p, 0.0, 17.0)
        assert r.bound == pytest.approx(1.0)

    def test_smooth_reference(self):
        p = GibbsProxParams(1.0, 1.0)
        r = convex_suboptimality_bound(SmoothConvex(1.0), 1, p, 0.0, 1.0)
        assert r.bound == pytest.approx(1.0)
        assert r.inputs["gradient_bound"] == pytest.approx(1.0)

    def test_gd_rate_plugin(self):
        # dist^2/(2 lam k) with dist=1, lam=1, k=1
        assert 1.0**2 / (2 * 1.0 * 1) == 0.5


class TestConvexityCertificate:
    def test_quadratic_always_convex(self, quad1d):
        for lam in (0.1, 1.0, 10.0):
            cert = convexity_certificate_1d(
                quad1d.objective, GibbsProxParams(lam, 1.0), (-3.0, 3.0, 21)
            )
            assert cert.all_nonneg
            assert cert.min_hessian == pytest.approx(1.0 / (1.0 + lam), rel=1e-8)

    def test_wiggly_small_lambda_nonconvex(self, wiggly):
        cert = convexity_certificate_1d(
            wiggly.objective, GibbsProxParams(0.01, 1.0), (-2.0, 2.0, 41)
        )
        assert not cert.all_nonneg
        assert cert.min_hessian < -1.0

    def test_wiggly_monotone_in_lambda(self, wiggly):
        # once certified on the sweep, larger lambdas stay certified
        flags = []
        for lam in (0.01, 0.1, 1.0, 10.0, 35.0, 100.0):
            cert = convexity_certificate_1d(
                wiggly.objective, GibbsProxParams(lam, 1.0), (-5.0, 5.0, 41)
            )
            flags.append(cert.all_nonneg)
        first_true = flags.index(True) if True in flags else len(flags)
        assert all(flags[first_true:])


class TestRateDominance:
    def test_smooth_bound_dominates_fd_gradient(self, quad1d):
        # exact run on the quadratic with lam = 0.4/L
        from zoprox.algorithms import zoppa_run

        p = GibbsProxParams(0.4, 1.0)
        trace = zoppa_run(quad1d.objective, [3.0], p, max_iter=30, step_tol=0.0)
        for r in trace.records:
            fd = float(np.linalg.norm(fd_gradient(quad1d.objective, r.x)))
            bound = rate_bound(SmoothCase(1.0), 1, p, r.env_grad_norm).bound
            assert fd <= bound + 1e-6

    def test_kappa_osc_bound_dominates_on_wiggly(self, wiggly):
        from zoprox.algorithms import zoppa_run

        p = GibbsProxParams(1.0, 1.0)
        trace = zoppa_run(wiggly.objective, [3.0], p, max_iter=40, step_tol=0.0)
        case = KappaOscCase(kappa=0.6, osc=3.0, L=wiggly.declared_constants["L"])
        for r in trace.records[::4]:
            fd = float(np.linalg.norm(fd_gradient(wiggly.objective, r.x)))
            bound = rate_bound(case, 1, p, r.env_grad_norm).bound
            assert fd <= bound + 1e-6
