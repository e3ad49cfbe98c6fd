"""Corpus checks, error norms, studies, bounds, and resource formulas."""

import itertools
import math

import numpy as np
import pytest
import scipy.special

from qkorobov.analysis import (
    FACTORS,
    coefficient_bound_audit,
    convergence_study,
    corpus,
    corpus_function,
    depth_envelope_study,
    dual_oracle_gap,
    generic_point,
    lambert_w,
    lp_error,
    lp_error_mc,
    resource_estimate,
    separable_function,
)
from qkorobov.sparsegrid import GridIndex, surplus_coefficients


def boundary_sample(d, per_face=9):
    interior = np.linspace(0.05, 0.95, per_face)
    pts = []
    for j in range(d):
        for edge in (0.0, 1.0):
            for combo in itertools.product(interior, repeat=d - 1):
                p = list(combo)
                p.insert(j, edge)
                pts.append(p)
    return np.array(pts)


class TestCorpus:
    def test_members(self):
        names = {(fn.name, fn.d) for fn in corpus()}
        assert names == {
            ("prod-quad", 1), ("prod-quad", 2), ("prod-quad", 3),
            ("prod-sin", 1), ("prod-sin", 2), ("asym-cubic", 1),
        }

    def test_prod_quad_values(self):
        fn = corpus_function("prod-quad", 2)
        assert fn.f(np.array([[0.5, 0.5]]))[0] == pytest.approx(1 / 16)
        # mixed derivative (-2) * (-2)
        assert fn.mixed_derivative(np.array([[0.3, 0.9]]))[0] == pytest.approx(4.0)
        assert fn.seminorm_inf == pytest.approx(4.0)

    def test_sin_seminorm(self):
        fn = corpus_function("prod-sin", 1)
        assert fn.seminorm_inf == pytest.approx(np.pi ** 2)
        assert fn.seminorm_2 == pytest.approx(np.pi ** 2 / np.sqrt(2.0))

    def test_boundary_vanishing(self):
        for fn in corpus():
            vals = fn.f(boundary_sample(fn.d))
            assert np.abs(vals).max() <= 1e-12

    def test_seminorm_inf_dominates_dense_sample(self):
        for fn in corpus():
            axes = [np.linspace(0, 1, 41)] * fn.d
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
            assert fn.seminorm_inf >= np.abs(fn.mixed_derivative(pts)).max() - 1e-9

    def test_seminorm_2_matches_quadrature(self):
        base, w = np.polynomial.legendre.leggauss(48)
        pts = (base + 1.0) / 2.0
        w = w / 2.0
        for fn in corpus():
            if fn.d > 2:
                continue
            if fn.d == 1:
                vals = fn.mixed_derivative(pts[:, None]) ** 2
                norm = math.sqrt(float(vals @ w))
            else:
                mesh = np.meshgrid(pts, pts, indexing="ij")
                grid = np.stack([m.ravel() for m in mesh], axis=1)
                vals = (fn.mixed_derivative(grid) ** 2).reshape(48, 48)
                norm = math.sqrt(float(w @ vals @ w))
            assert norm == pytest.approx(fn.seminorm_2, rel=1e-10)

    def test_asym_cubic_shape(self):
        fn = corpus_function("asym-cubic", 1)
        x = np.array([[0.5]])
        assert fn.f(x)[0] == pytest.approx(0.5 ** 3 * 0.25)
        assert fn.seminorm_2 == pytest.approx(math.sqrt(12 / 35))

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            corpus_function("prod-quad", 5)


class TestLpError:
    def test_identical_functions(self):
        fn = corpus_function("prod-quad", 1)
        assert lp_error(fn.f, fn.f, "inf", 1, 3) == 0.0
        assert lp_error(fn.f, fn.f, 2, 1, 3) == 0.0

    def test_exact_interpolation_error_closed_form(self):
        fn = corpus_function("prod-quad", 1)
        for n in range(1, 6):
            smap = surplus_coefficients(fn.f, n, 1)
            err = lp_error(fn.f, smap.evaluate_batch, "inf", 1, n)
            assert err == pytest.approx(4.0 ** -(n + 1), abs=1e-10)

    def test_constant_difference_l2(self):
        c = 0.37
        f = lambda X: np.full(len(X), c)
        g = lambda X: np.zeros(len(X))
        assert lp_error(f, g, 2, 1, 3) == pytest.approx(c, abs=1e-12)
        assert lp_error(f, g, 2, 2, 3) == pytest.approx(c, abs=1e-12)

    def test_p4_between_p2_and_inf(self):
        fn = corpus_function("prod-sin", 1)
        smap = surplus_coefficients(fn.f, 3, 1)
        e2 = lp_error(fn.f, smap.evaluate_batch, 2, 1, 3)
        e4 = lp_error(fn.f, smap.evaluate_batch, 4, 1, 3)
        einf = lp_error(fn.f, smap.evaluate_batch, "inf", 1, 3)
        assert e2 <= e4 <= einf

    def test_monte_carlo_d3(self):
        fn = corpus_function("prod-quad", 3)
        g = lambda X: np.zeros(len(X))
        value, stderr = lp_error_mc(fn.f, g, 2.0, 3, seed=5)
        exact = (1.0 / 30.0) ** 1.5  # ||x(1-x)||_2^2 = 1/30 per factor
        assert stderr > 0
        assert value == pytest.approx(exact, rel=0.02)

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            lp_error(lambda X: X[:, 0], lambda X: X[:, 0], 1.5, 1, 2)


@pytest.fixture(scope="module")
def quad1_study():
    return convergence_study(corpus_function("prod-quad", 1), "inf", range(1, 11))


@pytest.fixture(scope="module")
def sin1_study():
    return convergence_study(corpus_function("prod-sin", 1), "inf", range(3, 11))


@pytest.fixture(scope="module")
def quad2_study():
    return convergence_study(
        corpus_function("prod-quad", 2), "inf", range(1, 9), norms=("inf",)
    )


@pytest.fixture(scope="module")
def sin2_study():
    return convergence_study(
        corpus_function("prod-sin", 2), "inf", range(1, 9), norms=("inf",)
    )


class TestConvergence:
    def test_rows_carry_exact_counts(self, quad1_study):
        for row in quad1_study.rows:
            assert row.N == 2 ** row.n - 1

    def test_d1_slope_over_n3_to_10(self):
        study = convergence_study(corpus_function("prod-quad", 1), "inf", range(3, 11))
        assert study.slope == pytest.approx(-2.0, abs=0.05)
        # exact errors 4^-(n+1) mean raw and corrected coincide at d=1
        assert study.raw_slope == study.slope

    def test_sin_slope_band(self, sin1_study):
        assert -2.3 <= sin1_study.slope <= -1.7

    def test_d2_slopes(self, quad2_study):
        rows = [r for r in quad2_study.rows if r.n >= 3]
        sub = convergence_study(
            corpus_function("prod-quad", 2), "inf", range(3, 8), norms=("inf",)
        )
        assert -2.2 <= sub.slope <= -1.4
        # the uncorrected fit sits well above the band: the log factor is real
        assert sub.raw_slope > -1.4

    def test_monotone_decrease_d1(self):
        for name in ("prod-quad", "prod-sin", "asym-cubic"):
            study = convergence_study(corpus_function(name, 1), "inf", range(1, 11))
            errs = [r.error_inf for r in study.rows]
            assert all(errs[k + 1] < errs[k] for k in range(len(errs) - 1))
            errs2 = [r.error_2 for r in study.rows]
            assert all(errs2[k + 1] < errs2[k] for k in range(len(errs2) - 1))

    def test_monotone_decrease_d2(self, quad2_study, sin2_study):
        for study in (quad2_study, sin2_study):
            errs = [r.error_inf for r in study.rows]
            assert all(errs[k + 1] < errs[k] for k in range(len(errs) - 1))

    def test_shape_bound_single_constant(self, quad2_study):
        c = quad2_study.shape_constant
        assert c is not None and c > 0
        for row in quad2_study.rows:
            if row.N >= 2:
                bound = c * row.N ** -2 * math.log2(row.N) ** 3
                assert row.error_inf <= bound * (1 + 1e-9)

    def test_zero_error_rows_excluded(self):
        from qkorobov.analysis import KorobovTestFunction

        null = KorobovTestFunction(
            name="null",
            d=1,
            f=lambda X: np.zeros(len(X)),
            mixed_derivative=lambda X: np.zeros(len(X)),
            seminorm_inf=0.0,
            seminorm_2=0.0,
        )
        study = convergence_study(null, "inf", range(1, 4))
        assert study.slope is None

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            convergence_study(corpus_function("prod-quad", 1), "inf", [])


class TestCoefficientAudit:
    def test_equality_witness(self):
        report = coefficient_bound_audit(corpus_function("prod-quad", 1), 2)
        by_index = {c.source: c for c in report.checks}
        assert by_index[GridIndex((1,), (1,))].ratio_inf == pytest.approx(1.0, abs=1e-12)
        # level 2: |v| = 1/16 vs 2^-5 * 2
        assert by_index[GridIndex((2,), (1,))].ratio_inf == pytest.approx(1.0, abs=1e-12)

    def test_corpus_passes(self):
        for fn in corpus():
            if fn.d > 2:
                continue
            for n in range(1, 5):
                report = coefficient_bound_audit(fn, n)
                assert report.passed, report.violations
                assert report.max_ratio_inf <= 1.0 + 1e-12
                assert report.max_ratio_2 <= 1.0 + 1e-12

    def test_scale_hook_fails(self):
        report = coefficient_bound_audit(corpus_function("prod-quad", 1), 2, scale=1.1)
        assert not report.passed
        assert any(g == GridIndex((1,), (1,)) for g, _, _ in report.violations)

    def test_zero_function_vacuous(self):
        from qkorobov.analysis import KorobovTestFunction

        zero = KorobovTestFunction(
            "zero", 1, lambda X: np.zeros(len(X)), lambda X: np.zeros(len(X)), 0.0, 0.0
        )
        report = coefficient_bound_audit(zero, 2)
        assert report.passed
        assert report.max_ratio_inf == 0.0


class TestDualOracle:
    def test_gaps_within_tolerance(self):
        for fn in corpus():
            if fn.d > 2:
                continue
            tol = 1e-8 if fn.d == 1 else 1e-6
            for n in range(1, 5):
                assert dual_oracle_gap(fn, n) <= tol


class TestLambertW:
    def test_fixed_points(self):
        assert lambert_w(0.0) == 0.0
        assert lambert_w(math.e) == pytest.approx(1.0, abs=1e-12)
        assert lambert_w(1.0) == pytest.approx(0.567143290410, abs=1e-9)

    def test_residual_sweep(self):
        for x in np.logspace(-6, 6, 1000):
            w = lambert_w(x)
            assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, x)

    def test_absolute_residual_moderate_range(self):
        for x in np.logspace(-6, 2, 1000):
            w = lambert_w(x)
            assert abs(w * math.exp(w) - x) <= 1e-12

    def test_against_scipy(self):
        for x in np.logspace(-6, 6, 200):
            assert lambert_w(x) == pytest.approx(
                float(scipy.special.lambertw(x).real), rel=1e-14, abs=1e-300
            )

    def test_domain_error(self):
        with pytest.raises(ValueError):
            lambert_w(-0.1)


class TestResourceEstimate:
    EPS_GRID = np.logspace(-4, np.log10(0.5), 10)

    def test_simplified_dominates_refined(self):
        for d in range(1, 6):
            for eps in self.EPS_GRID:
                for p in (2, "inf", 3, 5):
                    est = resource_estimate(eps, d, p)
                    assert est.simplified_depth_bound >= est.predicted_depth_bound - 1e-12
                    assert est.simplified_width_bound >= est.predicted_width_bound - 1e-12

    def test_depth_decreases_in_eps(self):
        for d in range(1, 6):
            depths = [resource_estimate(e, d, 2).predicted_depth_bound for e in self.EPS_GRID]
            assert all(a > b for a, b in zip(depths, depths[1:]))
        for d in range(2, 6):
            for p in (3, 5):
                depths = [resource_estimate(e, d, p).predicted_depth_bound for e in self.EPS_GRID]
                assert all(a > b for a, b in zip(depths, depths[1:]))

    def test_general_p_degenerates_at_d1(self):
        est = resource_estimate(0.01, 1, 3)
        assert est.beta == 0.0
        assert est.predicted_depth_bound == 0.0
        assert est.simplified_depth_bound == 0.0

    def test_alpha_limit(self):
        # (3p-1)/(2p-1) -> 3/2 from above
        alphas = [resource_estimate(0.1, 2, p).alpha for p in (3, 10, 100, 1e6)]
        assert all(a > 1.5 for a in alphas)
        assert all(a > b for a, b in zip(alphas, alphas[1:]))
        assert alphas[-1] == pytest.approx(1.5, abs=1e-5)

    def test_p2_inf_alpha_unset(self):
        est = resource_estimate(0.1, 2, "inf")
        assert est.alpha is None and est.beta is None
        assert est.formula == "p2-inf"

    def test_bridge_ratio_monotone_in_d(self):
        for eps in (0.01, 0.001):
            ratios = []
            for d in range(2, 7):
                both = (
                    resource_estimate(eps, d, 2, formula="general-p"),
                    resource_estimate(eps, d, 2, formula="p2-inf"),
                )
                ratios.append(both[0].predicted_depth_bound / both[1].predicted_depth_bound)
            assert all(a < b for a, b in zip(ratios, ratios[1:]))

    def test_epsilon_domain(self):
        with pytest.raises(ValueError):
            resource_estimate(0.0, 1, 2)
        with pytest.raises(ValueError):
            resource_estimate(1.0, 1, 2)

    def test_lambert_value_recorded(self):
        est = resource_estimate(0.01, 2, "inf")
        arg = 0.01 ** -0.5 / 2 * math.log2(100.0) ** 1.5
        assert est.lambert_w_value == pytest.approx(lambert_w(arg), rel=1e-12)


class TestDepthEnvelope:
    def test_ratio_stability(self):
        points = []
        for d in (1, 2):
            fn = corpus_function("prod-quad", d)
            pts, _ = depth_envelope_study(fn, range(1, 5))
            points.extend(pts)
        ratios = [p.ratio for p in points]
        fitted = (max(ratios) + min(ratios)) / 2.0
        assert all(abs(r - fitted) <= 0.2 * fitted for r in ratios)

    def test_generic_point_not_dyadic(self):
        x = generic_point(3)
        assert all(0 < v < 1 for v in x)
        for v in x:
            assert (v * 2 ** 12) % 1 != 0.0
