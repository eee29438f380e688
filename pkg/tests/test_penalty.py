import math

import numpy as np
import pytest

from saddleflow.penalty import (
    DualDomain,
    PenaltySpec,
    conjugate_bruteforce,
    conjugate_gradient,
    domain_contains,
    dual_domain,
    dual_euclidean_radius,
    eval_conjugate,
    eval_penalty,
    huber,
    huber_l2,
    penalty_from_dict,
    penalty_subgradient,
    penalty_to_dict,
    project_dual,
    scaled_norm,
    strong_convexity,
)

# the full catalog: three norms and huber, symmetric and positive-part
CATALOG = [
    scaled_norm(1, 1.5),
    scaled_norm(2, 0.8),
    scaled_norm(math.inf, 1.2),
    huber_l2(1.0, 1.0),
    huber_l2(0.7, 2.0),
    scaled_norm(1, 1.5, asymmetric=True),
    scaled_norm(2, 0.8, asymmetric=True),
    scaled_norm(math.inf, 1.2, asymmetric=True),
    huber_l2(1.0, 1.0, asymmetric=True),
]


def sample_in_domain(spec, m, rng):
    dom = dual_domain(spec)
    return project_dual(dom, rng.uniform(-1.0, 1.0, m) * 2.0 * max(dom.radius, 1.0))


class TestHuber:
    def test_values(self):
        assert huber(1, 1, 0) == 0.0
        assert huber(1, 1, 0.5) == pytest.approx(0.125, abs=1e-15)
        assert huber(2, 1, 5) == pytest.approx(8.0, abs=1e-15)

    def test_even_and_continuous_at_kink(self):
        for t in np.linspace(-3, 3, 41):
            assert huber(1.3, 0.7, t) == pytest.approx(huber(1.3, 0.7, -t), abs=1e-15)
        kink = 1.3 / 0.7
        below = huber(1.3, 0.7, kink - 1e-10)
        above = huber(1.3, 0.7, kink + 1e-10)
        assert abs(below - above) < 1e-8

    def test_derivative_matches_finite_differences(self):
        r, s = 1.4, 0.6
        h = 1e-6
        for t in np.linspace(-4, 4, 81):
            if abs(abs(t) - r / s) < 1e-2:
                continue  # away from the kink
            fd = (huber(r, s, t + h) - huber(r, s, t - h)) / (2 * h)
            expect = math.copysign(min(s * abs(t), r), t) if t else 0.0
            assert fd == pytest.approx(expect, abs=1e-6)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            huber(1.0, 0.0, 1.0)


class TestEvalPenalty:
    def test_norm_at_origin(self):
        assert eval_penalty(scaled_norm(2, 1.0), [0.0, 0.0]) == 0.0

    def test_positive_part_vanishes(self):
        assert eval_penalty(scaled_norm(2, 1.0, asymmetric=True), [-3.0, -4.0]) == 0.0

    def test_huber_hand_value(self):
        # H_{1,1}(||(2,0)||) = 0.5 * min(4, 1) + 1 * (2 - 1) = 1.5
        assert eval_penalty(huber_l2(1.0, 1.0), [2.0, 0.0]) == pytest.approx(1.5)

    def test_nonnegative_zero_at_origin(self):
        rng = np.random.default_rng(3)
        for spec in CATALOG:
            assert eval_penalty(spec, np.zeros(3)) == 0.0
            for _ in range(20):
                assert eval_penalty(spec, rng.standard_normal(3)) >= 0.0

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            eval_penalty(scaled_norm(2, 1.0), np.zeros((2, 2)))


class TestConjugate:
    def test_indicator_inside_ball(self):
        assert eval_conjugate(scaled_norm(2, 1.0), [0.3, 0.4]) == 0.0

    def test_outside_ball_is_infinite(self):
        assert eval_conjugate(scaled_norm(2, 1.0), [3.0, 4.0]) == math.inf

    def test_huber_quadratic(self):
        assert eval_conjugate(huber_l2(1.0, 2.0), [0.6, 0.8]) == pytest.approx(0.25)

    def test_asymmetric_requires_nonnegative(self):
        assert eval_conjugate(scaled_norm(2, 1.0, asymmetric=True), [-0.5, 0.1]) == math.inf
        assert eval_conjugate(scaled_norm(2, 1.0, asymmetric=True), [0.5, 0.1]) == 0.0

    def test_finite_exactly_on_domain(self):
        rng = np.random.default_rng(7)
        for spec in CATALOG:
            dom = dual_domain(spec)
            for _ in range(50):
                lam = rng.uniform(-2.0, 2.0, 2) * max(dom.radius, 1.0)
                finite = math.isfinite(eval_conjugate(spec, lam))
                assert finite == domain_contains(dom, lam)


class TestConjugateGradient:
    def test_indicator_gradient_is_zero(self):
        out = conjugate_gradient(scaled_norm(1, 5.0), [1.0, -2.0])
        assert np.array_equal(out, [0.0, 0.0])

    def test_huber_gradient(self):
        out = conjugate_gradient(huber_l2(1.0, 4.0), [0.4, 0.0])
        np.testing.assert_allclose(out, [0.1, 0.0])
        out = conjugate_gradient(huber_l2(1.0, 1.0), [0.0, 0.0])
        assert np.array_equal(out, [0.0, 0.0])

    def test_rejects_outside_domain(self):
        with pytest.raises(ValueError):
            conjugate_gradient(huber_l2(1.0, 1.0), [2.0, 2.0])


class TestSubgradient:
    def test_l1_sign_rule(self):
        out = penalty_subgradient(scaled_norm(1, 2.0), [1.0, -3.0, 0.0])
        np.testing.assert_allclose(out, [2.0, -2.0, 0.0])

    def test_zero_at_origin(self):
        for spec in CATALOG:
            assert np.array_equal(penalty_subgradient(spec, np.zeros(3)), np.zeros(3))

    def test_l2_radial(self):
        out = penalty_subgradient(scaled_norm(2, 1.0), [3.0, 4.0])
        np.testing.assert_allclose(out, [0.6, 0.8])

    def test_linf_lowest_index_tie(self):
        out = penalty_subgradient(scaled_norm(math.inf, 1.0), [2.0, -2.0, 1.0])
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0])

    def test_subgradient_inequality(self):
        # E(y) >= E(z) + g.(y - z) on sampled pairs, every catalog entry
        rng = np.random.default_rng(11)
        for spec in CATALOG:
            z = rng.standard_normal((1000, 3)) * 2.0
            y = rng.standard_normal((1000, 3)) * 2.0
            for zi, yi in zip(z, y):
                g = penalty_subgradient(spec, zi)
                lhs = eval_penalty(spec, yi)
                rhs = eval_penalty(spec, zi) + g @ (yi - zi)
                assert lhs >= rhs - 1e-12


class TestProjection:
    def test_radial_scaling(self):
        out = project_dual(DualDomain("l2", 1.0), [3.0, 4.0])
        np.testing.assert_allclose(out, [0.6, 0.8])

    def test_clip_then_scale(self):
        out = project_dual(DualDomain("l2", 1.0, nonneg=True), [-1.0, 2.0])
        np.testing.assert_allclose(out, [0.0, 1.0])

    def test_identity_inside(self):
        rng = np.random.default_rng(5)
        for spec in CATALOG:
            dom = dual_domain(spec)
            for _ in range(20):
                lam = sample_in_domain(spec, 2, rng) * 0.9
                np.testing.assert_allclose(project_dual(dom, lam), lam, atol=1e-15)

    def test_idempotent_and_nonexpansive(self):
        rng = np.random.default_rng(17)
        for spec in CATALOG:
            dom = dual_domain(spec)
            for _ in range(50):
                a = rng.standard_normal(3) * 3.0
                b = rng.standard_normal(3) * 3.0
                pa, pb = project_dual(dom, a), project_dual(dom, b)
                np.testing.assert_allclose(project_dual(dom, pa), pa, atol=1e-12)
                assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12

    def test_optimal_against_grid(self):
        # ||lam - proj(lam)|| <= ||lam - w|| for every grid point w in the domain
        rng = np.random.default_rng(23)
        grid_1d = np.linspace(-2.0, 2.0, 201)
        gx, gy = np.meshgrid(grid_1d, grid_1d, indexing="ij")
        grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
        for spec in CATALOG:
            dom = dual_domain(spec)
            scaled = grid * max(dom.radius, 1.0)
            members = scaled[[domain_contains(dom, w) for w in scaled]]
            for _ in range(100):
                lam = rng.standard_normal(2) * 2.0 * max(dom.radius, 1.0)
                p = project_dual(dom, lam)
                best = np.linalg.norm(members - lam, axis=1).min()
                assert np.linalg.norm(lam - p) <= best + 1e-9


class TestStrongConvexity:
    def test_values(self):
        assert strong_convexity(huber_l2(1.0, 2.0)) == pytest.approx(0.5)
        assert strong_convexity(scaled_norm(2, 1.0)) == 0.0
        assert strong_convexity(huber_l2(1.0, 1.0)) == pytest.approx(1.0)


class TestBruteForceConjugate:
    def test_huber_scalar(self):
        val = conjugate_bruteforce(huber_l2(1.0, 1.0), [0.5], 5.0, 10001)
        assert val == pytest.approx(0.125, abs=1e-3)

    def test_zero(self):
        assert conjugate_bruteforce(scaled_norm(2, 1.0), [0.0], 5.0, 1001) == 0.0

    def test_grows_outside_domain(self):
        near = conjugate_bruteforce(scaled_norm(2, 1.0), [2.0], 5.0, 1001)
        far = conjugate_bruteforce(scaled_norm(2, 1.0), [2.0], 10.0, 2001)
        assert near == pytest.approx(5.0, abs=1e-2)
        assert far > near + 4.0

    def test_rejects_large_dimension(self):
        with pytest.raises(ValueError):
            conjugate_bruteforce(scaled_norm(2, 1.0), np.zeros(4), 1.0, 11)

    @pytest.mark.parametrize("m", [1, 2])
    def test_matches_closed_form_on_domain(self, m):
        # conjugacy oracle: grid max of lam.z - E(z) reproduces E* inside
        # the dual domain for the full catalog
        rng = np.random.default_rng(29)
        pts = 401
        for spec in CATALOG:
            for _ in range(25):
                lam = sample_in_domain(spec, m, rng)
                approx = conjugate_bruteforce(spec, lam, 10.0, pts)
                assert abs(approx - eval_conjugate(spec, lam)) <= 5e-2

    def test_fenchel_young(self):
        rng = np.random.default_rng(31)
        for spec in CATALOG:
            for _ in range(100):
                lam = sample_in_domain(spec, 2, rng)
                z = rng.standard_normal(2) * 3.0
                assert lam @ z <= eval_penalty(spec, z) + eval_conjugate(spec, lam) + 1e-12


class TestDomains:
    def test_catalog_domains(self):
        assert dual_domain(scaled_norm(1, 2.0)) == DualDomain("box", 2.0)
        assert dual_domain(scaled_norm(2, 2.0)) == DualDomain("l2", 2.0)
        assert dual_domain(scaled_norm(math.inf, 2.0)) == DualDomain("l1", 2.0)
        assert dual_domain(huber_l2(2.0, 1.0)) == DualDomain("l2", 2.0)
        assert dual_domain(scaled_norm(1, 2.0, asymmetric=True)).nonneg

    def test_euclidean_radius(self):
        assert dual_euclidean_radius(scaled_norm(2, 2.0), 9) == 2.0
        assert dual_euclidean_radius(scaled_norm(1, 2.0), 9) == pytest.approx(6.0)
        assert dual_euclidean_radius(scaled_norm(math.inf, 2.0), 9) == 2.0


class TestSerialization:
    def test_round_trip(self):
        for spec in CATALOG:
            assert penalty_from_dict(penalty_to_dict(spec)) == spec

    def test_json_forms(self):
        spec = penalty_from_dict({"kind": "norm", "q": "inf", "r_lambda": 2.0})
        assert spec.q == math.inf
        spec = penalty_from_dict({"kind": "huber", "r_lambda": 1.0, "l": 0.5})
        assert spec.smoothness_l == 0.5

    @pytest.mark.parametrize(
        "bad",
        [
            {"kind": "cubic", "r_lambda": 1.0},
            {"kind": "norm", "q": 3, "r_lambda": 1.0},
            {"kind": "norm", "q": 2},
            {"kind": "huber", "r_lambda": 1.0},
            {"kind": "huber", "r_lambda": 1.0, "l": -1.0},
        ],
    )
    def test_rejects_bad_dicts(self, bad):
        with pytest.raises(ValueError):
            penalty_from_dict(bad)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            PenaltySpec("norm", -1.0)
        with pytest.raises(ValueError):
            PenaltySpec("norm", 1.0, q=3.0)
