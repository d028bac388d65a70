"""
Tests for the gradients of W_B, sphere ascent, the test families and the
threshold search.
"""

import logging
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import fourier_vectors
from strichartz import gradient_opt
from strichartz.functional import a_functional, strichartz_W
from strichartz.gradient_opt import (
    a_closed_w1,
    a_closed_w2,
    a_family_grid,
    ascend_from,
    canonical_params,
    canonicalize,
    family_vector,
    grad_W_quadrature,
    grad_W_spectral,
    map_ordered,
    maximize_A_family,
    maximize_W,
    project_sphere,
    random_start,
    solve_B0,
    sweep_family,
    tangent_component,
    threshold_B,
    threshold_scan,
    vanishing_sequence,
)
from strichartz.models import (
    AscentConfig,
    FamilyPoint,
    FourierVector,
    OptResult,
    ParameterError,
    QuadratureSpec,
    ThresholdNotFoundError,
)
from strichartz.spectral_core import (
    TWO_PI,
    add,
    l2_norm,
    mass_centroid,
    random_vector,
    real_inner,
)

B0 = 0.6958


def directional_derivative(u, h, B, step=1e-6):
    plus = strichartz_W(add(u, h, step), B)
    minus = strichartz_W(add(u, h, -step), B)
    return (plus - minus) / (2.0 * step)


class TestGradients:
    @pytest.mark.parametrize("B", [0.3, 1.0, 1.7, 2.7, 3.9])
    def test_spectral_matches_finite_differences(self, rng, B):
        for _ in range(10):
            u = random_vector(rng, 5, n_min=-2)
            g = grad_W_spectral(u, B)
            for k in range(10):
                h = random_vector(rng, 5, n_min=-2, real=k % 2 == 1)
                fd = directional_derivative(u, h, B)
                assert real_inner(g, h) == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_wider_window_sees_outside_directions(self, rng):
        u = random_vector(rng, 3, n_min=0)
        g = grad_W_spectral(u, 1.2, n_min=-2, width=7)
        assert g.n_min == -2 and g.width == 7
        h = FourierVector(-2, [1.0])
        assert real_inner(g, h) == pytest.approx(directional_derivative(u, h, 1.2), rel=1e-6, abs=1e-10)

    @pytest.mark.parametrize("B", [0.5, 1.0, 3.0])
    def test_spectral_matches_quadrature(self, rng, B):
        for width in (1, 3, 6):
            u = random_vector(rng, width, n_min=-1)
            q = QuadratureSpec.for_problem(B, width)
            exact = grad_W_spectral(u, B)
            approx = grad_W_quadrature(u, B, q)
            diff = l2_norm(add(exact, approx, -1.0))
            assert diff <= 1e-7 * l2_norm(exact)

    def test_quadrature_on_explicit_window(self, rng):
        u = random_vector(rng, 4, n_min=1)
        q = QuadratureSpec.for_problem(1.0, 8)
        exact = grad_W_spectral(u, 1.0, n_min=-3, width=8)
        approx = grad_W_quadrature(u, 1.0, q, n_min=-3, width=8)
        np.testing.assert_allclose(approx.coeffs, exact.coeffs, atol=1e-9)

    @given(fourier_vectors(max_width=5), st.floats(0.1, 4.0))
    def test_euler_identity(self, u, B):
        # W_B is homogeneous of degree 4
        assert real_inner(grad_W_spectral(u, B), u) == pytest.approx(
            4.0 * strichartz_W(u, B), rel=1e-10
        )

    def test_single_mode_gradient(self):
        c = 0.8
        g = grad_W_spectral(FourierVector(3, [c]), 2.0)
        # W = 2 pi B |c|^4, pairing carries a factor 2 pi
        assert g.coeffs[0] == pytest.approx(4.0 * 2.0 * c**3)

    @given(fourier_vectors(max_width=5))
    def test_tangent_component_is_orthogonal(self, u):
        g = grad_W_spectral(u, 1.0)
        assert real_inner(tangent_component(g, u), u) == pytest.approx(0.0, abs=1e-10 * l2_norm(g) * l2_norm(u))


class TestAscent:
    def test_project_sphere(self, rng):
        assert l2_norm(project_sphere(random_vector(rng, 4))) == pytest.approx(1.0, rel=1e-14)
        with pytest.raises(ParameterError):
            project_sphere(FourierVector.zeros(0, 2))

    def test_random_start_is_reproducible(self):
        a = random_start(3, 5, 2)
        b = random_start(3, 5, 2)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert a.n_min == -2 and a.width == 5
        assert l2_norm(a) == pytest.approx(1.0, rel=1e-14)
        assert not np.array_equal(random_start(3, 6, 2).coeffs, a.coeffs)

    def test_ascent_is_monotone_and_stays_on_sphere(self, rng):
        u0 = project_sphere(random_vector(rng, 5, n_min=-2))
        result = ascend_from(u0, 1.0, AscentConfig(max_iters=200))
        values = [v for _, v in result.trace]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert l2_norm(result.argmax) == pytest.approx(1.0, rel=1e-12)
        assert result.value >= strichartz_W(u0, 1.0)
        assert result.iterations == len(result.trace) - 1

    def test_zero_start_rejected(self):
        with pytest.raises(ParameterError):
            ascend_from(FourierVector.zeros(0, 3), 1.0, AscentConfig())

    def test_existence_regime(self, fast_cfg):
        result = maximize_W(1.0, 2, fast_cfg)
        assert result.value > 1.0 / math.pi + 1e-3

    def test_deterministic_across_workers(self):
        cfg = AscentConfig(restarts=3, seed=9, max_iters=300)
        serial = maximize_W(0.8, 1, cfg, workers=1)
        threaded = maximize_W(0.8, 1, cfg, workers=3)
        assert serial.value == threaded.value
        np.testing.assert_array_equal(serial.argmax.coeffs, threaded.argmax.coeffs)

    def test_nonexistence_regime(self, fast_cfg):
        values = [maximize_W(math.pi, h, fast_cfg).value for h in range(1, 5)]
        assert all(v <= 1.0 - 1e-6 for v in values)
        assert all(b > a for a, b in zip(values, values[1:]))
        for h, value in zip(range(1, 5), values):
            assert value == pytest.approx(1.0 - 1.0 / (2.0 * (2 * h + 1)), abs=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("B,halfwidth", [(0.5, 3), (1.0, 3), (2.0, 3), (math.pi, 13), (5.0, 24)])
    def test_reaches_vanishing_level(self, B, halfwidth):
        result = maximize_W(B, halfwidth, AscentConfig(restarts=2, seed=0))
        assert result.value >= B / math.pi - 0.02

    def test_invalid_halfwidth(self, fast_cfg):
        with pytest.raises(ParameterError):
            maximize_W(1.0, 0, fast_cfg)

    def test_map_ordered_keeps_order(self):
        assert map_ordered(lambda x: x * x, range(6), workers=3) == [0, 1, 4, 9, 16, 25]


class TestCanonicalForm:
    def test_canonicalize(self, rng):
        u = random_vector(rng, 5, n_min=4)
        v = canonicalize(u)
        assert mass_centroid(v) == 0
        anchor = v.coefficient(0)
        assert anchor.real > 0 and anchor.imag == pytest.approx(0.0, abs=1e-15)
        assert strichartz_W(v, 1.3) == pytest.approx(strichartz_W(u, 1.3), rel=1e-10)

    def test_vanishing_sequence(self):
        u = vanishing_sequence(3)
        assert u.n_min == -3 and u.width == 7
        assert l2_norm(u) == pytest.approx(1.0, rel=1e-14)
        with pytest.raises(ParameterError):
            vanishing_sequence(-1)


class TestFamilies:
    @settings(max_examples=30)
    @given(
        st.sampled_from([1, 2, 3, 4]),
        st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=2),
        st.floats(0.1, 4.0),
    )
    def test_batched_matches_scalar(self, family_id, params, B):
        arity = 1 if family_id == 1 else 2
        fp = FamilyPoint(family_id, tuple(params[:arity]))
        grid_value = a_family_grid(family_id, B, np.array(fp.params)[None, :])[0]
        assert grid_value == pytest.approx(a_functional(family_vector(fp), B), rel=1e-10, abs=1e-12)

    @given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0.1, 4.0))
    def test_closed_forms(self, r, s, B):
        w1 = a_family_grid(1, B, np.array([[r]]))[0]
        assert a_closed_w1(r, B) == pytest.approx(w1, rel=1e-10, abs=1e-10)
        w2 = a_family_grid(2, B, np.array([[r, s]]))[0]
        assert a_closed_w2(r, s, B) == pytest.approx(w2, rel=1e-10, abs=1e-10)

    @given(st.sampled_from([1, 2, 3]), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0.1, 4.0))
    def test_canonical_params_preserve_A(self, family_id, p, q, B):
        params = (p,) if family_id == 1 else (p, q)
        fp = FamilyPoint(family_id, params)
        canon = canonical_params(fp)
        assert canon.params[0] >= 0
        assert a_functional(family_vector(canon), B) == pytest.approx(
            a_functional(family_vector(fp), B), rel=1e-10, abs=1e-12
        )

    def test_wrong_arity(self):
        with pytest.raises(ParameterError):
            FamilyPoint(1, (0.1, 0.2))
        with pytest.raises(ParameterError):
            FamilyPoint(5, (0.1,))

    def test_family_one_maximum(self, fast_cfg):
        B = 0.5
        s = math.sin(2 * B) / (2 * B)
        result = maximize_A_family(1, B, fast_cfg)
        assert result.value == pytest.approx(2.0 * s * s - 1.0, abs=1e-9)
        assert result.argmax.params[0] == pytest.approx(math.sqrt(s), abs=1e-4)

    def test_solve_B0(self):
        B = solve_B0()
        assert B == pytest.approx(B0, abs=5e-4)
        assert math.sin(2 * B) / (2 * B) == pytest.approx(math.sqrt(2) / 2, abs=1e-9)

    def test_sweep_is_ordered_by_B(self, fast_cfg):
        rows = sweep_family(1, [0.6, 0.2, 0.4], fast_cfg, nm_starts=1, workers=2)
        assert [B for B, _ in rows] == [0.6, 0.2, 0.4]
        values = [r.value for _, r in rows]
        assert values[1] > values[2] > values[0]


class TestThresholds:
    def test_family_one(self, fast_cfg):
        assert threshold_B(1, fast_cfg, 0.05, nm_starts=2) == pytest.approx(B0, abs=5e-4)

    def test_scan_step_limit(self, fast_cfg):
        with pytest.raises(ParameterError):
            threshold_scan(1, fast_cfg, scan_step=0.1)

    def test_no_sign_change(self, fast_cfg):
        # the scan stops before family 1 turns negative
        with pytest.raises(ThresholdNotFoundError):
            threshold_B(1, fast_cfg, 0.05, scan_max=0.5, nm_starts=1)

    @pytest.mark.slow
    def test_family_two(self, fast_cfg):
        assert 0.918 <= threshold_B(2, fast_cfg, 0.05, nm_starts=4) <= 0.920

    @pytest.mark.slow
    def test_family_three(self, fast_cfg):
        B3 = threshold_B(3, fast_cfg, 0.05, nm_starts=4)
        assert 1.38 <= B3 <= 1.40
        point = maximize_A_family(3, B3, fast_cfg).argmax.params
        assert abs(point[0]) == pytest.approx(0.6, abs=0.1)
        assert abs(point[1]) == pytest.approx(0.5, abs=0.1)

    @pytest.mark.slow
    def test_family_four(self, fast_cfg):
        # the exact criterion turns nonpositive near 1.756, well below 2.60
        B4 = threshold_B(4, fast_cfg, 0.05, nm_starts=4)
        assert 1.70 <= B4 <= 1.81
        assert maximize_A_family(4, 2.60, fast_cfg, nm_starts=4).value < -0.5

    def test_first_downward_crossing_wins(self, fast_cfg, monkeypatch, caplog):
        # positive below 1.02, negative up to 2.02, positive again after
        def fake(family_id, B, cfg, *args, **kwargs):
            value = (1.02 - B) * (2.02 - B)
            return OptResult(FamilyPoint(1, (0.0,)), value, 1, True)

        monkeypatch.setattr(gradient_opt, "maximize_A_family", fake)
        with caplog.at_level(logging.WARNING, logger="strichartz.gradient_opt"):
            scan = threshold_scan(1, fast_cfg, 0.05, scan_max=3.0, bisection_width=1e-6)
        assert scan.threshold == pytest.approx(1.02, abs=1e-6)
        assert scan.anomalies and scan.anomalies[0] == pytest.approx(2.05)
        assert "positive again" in caplog.text
        assert len(scan.rows) == 60

    @pytest.mark.parametrize("B", [0.3, 0.9, 2.0, 3.5])
    def test_family_search_stays_in_box(self, fast_cfg, B):
        with warnings.catch_warnings():
            warnings.simplefilter("error", RuntimeWarning)
            result = maximize_A_family(2, B, fast_cfg, grid_limit=2.0, nm_starts=4)
        assert all(abs(p) <= 2.0 for p in result.argmax.params)
        assert math.isfinite(result.value)
