import math

import numpy as np
import pytest

from gradpath import (
    InputError,
    PklConstruction,
    StopRule,
    build_pkl_gd_instance,
    build_pkl_gf_instance,
    build_quad_lower,
    build_quad_random,
    check_gradient,
    construction_linconv_constants,
    gd_run,
    gf_integrate,
)


class TestPklConstruction:
    def test_parameters_for_six(self):
        kind = PklConstruction.build(6)
        assert kind.delta == pytest.approx(1 / 6)
        assert kind.gamma == pytest.approx(5 / 6 + 6 * math.log(3.0), rel=1e-12)
        assert kind.quad_coeff == pytest.approx(kind.delta / kind.gamma, rel=1e-15)
        assert kind.mu == pytest.approx(2.0 / 108.0, rel=1e-15)
        assert kind.L == 2.0

    def test_quadratic_cap_value(self):
        kind = PklConstruction.build(6)
        assert float(kind.g(0.5)) == pytest.approx(0.25, abs=1e-15)
        just_above = float(np.nextafter(0.5, math.inf))
        assert float(kind.g(just_above)) == pytest.approx(0.25, abs=1e-12)

    @pytest.mark.parametrize("d", [6, 20, 100, 1000])
    def test_branch_continuity(self, d):
        kind = PklConstruction.build(d)
        for b in kind.breakpoints:
            right = float(np.nextafter(b, math.inf))
            assert abs(float(kind.g(b)) - float(kind.g(right))) <= 1e-12
            assert abs(float(kind.g_deriv(b)) - float(kind.g_deriv(right))) <= 1e-12

    @pytest.mark.parametrize("d", [6, 20, 100, 1000])
    def test_grid_pl_ratio(self, d):
        kind = PklConstruction.build(d)
        xs = np.linspace(1e-9, kind.gamma, 5001)
        ratios = kind.g_deriv(xs) ** 2 / (2.0 * kind.g(xs))
        assert ratios.min() >= kind.mu * (1 - 1e-9)

    def test_tail_keeps_pl_beyond_gamma(self):
        kind = PklConstruction.build(8)
        xs = np.linspace(kind.gamma, 10 * kind.gamma, 500)
        ratios = kind.g_deriv(xs) ** 2 / (2.0 * kind.g(xs))
        assert ratios.min() >= kind.mu * (1 - 1e-9)

    def test_objective_gradient_consistent(self, rng):
        obj = PklConstruction.build(6).to_objective("pl-test")
        pts = [rng.uniform(0.03, 0.45, 6) for _ in range(10)]
        pts += [rng.uniform(0.55, 0.8, 6) for _ in range(5)]
        check_gradient(obj, pts, rel_tol=1e-5)

    def test_small_dimension_rejected(self):
        with pytest.raises(InputError, match=">= 6"):
            PklConstruction.build(5)


class TestFlowInstance:
    def test_staggered_start_for_six(self):
        inst = build_pkl_gf_instance(6)
        x0 = inst.x0
        assert x0[0] == pytest.approx(0.5)
        assert x0[1] == pytest.approx(5 / 6, rel=1e-14)
        assert x0[2] == pytest.approx(5 / 6 + math.log(3.0) / 6, rel=1e-12)
        assert x0[3] == pytest.approx(5 / 6 + 2 * math.log(3.0) / 6, rel=1e-12)
        assert np.all(x0 < inst.construction.gamma)

    def test_metadata(self):
        inst = build_pkl_gf_instance(6)
        obj = inst.objective
        assert obj.L == 2.0
        assert obj.mu == pytest.approx(2.0 / 108.0)
        assert obj.kappa == pytest.approx(108.0)
        assert obj.f_star == 0.0

    def test_distance_bound(self):
        for d in (6, 20, 63):
            inst = build_pkl_gf_instance(d)
            assert np.linalg.norm(inst.x0) <= math.sqrt(2 * d) * math.log(d)

    def test_flow_checkpoint_second_coordinate(self):
        inst = build_pkl_gf_instance(6)
        traj = gf_integrate(inst.objective, inst.x0, 1e-10, StopRule.horizon(inst.stage_time))
        assert traj.points[-1][1] == pytest.approx(0.5, abs=1e-6)

    def test_rejects_small_dimension(self):
        with pytest.raises(InputError, match=">= 6"):
            build_pkl_gf_instance(5)


class TestDescentInstance:
    def test_stage_selection_for_six(self):
        inst = build_pkl_gd_instance(6)
        assert inst.init.k1 == 2
        assert inst.eta == pytest.approx((math.sqrt(3.0) - 1.0) / 2.0, rel=1e-14)
        assert 0.25 <= inst.eta <= 0.5

    def test_stage_exactness_and_bound(self):
        for d in (6, 9, 17, 50, 148):
            inst = build_pkl_gd_instance(d)
            ratio = (1.0 + 2.0 * inst.eta) ** inst.init.k1
            assert abs(ratio - d / 2.0) <= 1e-10 * d
            assert inst.init.k1 <= 3 * math.log(d / 2.0)

    def test_staggered_start_values(self):
        inst = build_pkl_gd_instance(6)
        assert inst.x0[0] == pytest.approx(0.5)
        assert inst.x0[1] == pytest.approx(5 / 6, rel=1e-14)
        spacing = 2 * inst.eta * inst.init.k1 / 6
        assert spacing == pytest.approx(0.244017, abs=1e-6)
        assert inst.x0[2] == pytest.approx(5 / 6 + spacing, rel=1e-12)
        assert inst.x0[2] == pytest.approx(1.07735, abs=1e-5)

    def test_descent_checkpoint_exact(self):
        inst = build_pkl_gd_instance(6)
        traj = gd_run(inst.objective, inst.x0, inst.eta, StopRule.max_steps(inst.init.k1))
        assert abs(traj.points[-1][1] - 0.5) <= 1e-10

    def test_distance_bound(self):
        for d in (6, 20, 63):
            inst = build_pkl_gd_instance(d)
            assert np.linalg.norm(inst.x0) <= 4 * math.sqrt(d) * math.log(d)

    def test_rejects_small_dimension(self):
        with pytest.raises(InputError, match=">= 6"):
            build_pkl_gd_instance(5)


class TestTargetKappaReduction:
    def test_reduces_active_components(self):
        inst = build_pkl_gd_instance(50, target_kappa=216.0)
        # largest d' with 3 d'^2 <= 216 is 8
        assert inst.construction.d == 8
        assert inst.objective.dim == 50
        assert inst.objective.mu == pytest.approx(2.0 / (3 * 64))
        assert np.all(inst.x0[8:] == 0.0)
        assert inst.x0[0] == 0.5

    def test_no_reduction_when_budget_large(self):
        inst = build_pkl_gf_instance(10, target_kappa=1e9)
        assert inst.construction.d == 10

    def test_small_budget_rejected(self):
        with pytest.raises(InputError, match="216"):
            build_pkl_gf_instance(10, target_kappa=100.0)


class TestQuadLower:
    def test_geometric_spectrum(self):
        c = build_quad_lower(3, 11.0)
        assert np.allclose(c.spectrum, [121.0, 11.0, 1.0])
        assert c.kappa == pytest.approx(121.0)
        assert c.dist0 == pytest.approx(math.sqrt(3.0))
        assert c.eta == pytest.approx(1.0 / 242.0)

    def test_single_dimension(self):
        c = build_quad_lower(1, 7.0)
        assert c.spectrum.tolist() == [1.0]
        assert c.kappa == 1.0

    def test_log_kappa_for_large_instance(self):
        c = build_quad_lower(150, 2.0)
        assert c.log_kappa == pytest.approx(149 * math.log(2.0), rel=1e-14)
        assert c.kappa == pytest.approx(2.0**149, rel=1e-12)

    def test_integer_descent_checkpoints(self):
        for omega in (2.0, 3.0, 11.0):
            c = build_quad_lower(5, omega)
            ks = c.gd_checkpoints
            assert np.allclose(ks, 3.0 * omega ** np.arange(5), rtol=1e-12)
            assert np.allclose(ks, np.round(ks), atol=1e-6)

    def test_flow_checkpoints(self):
        c = build_quad_lower(4, 11.0)
        assert np.allclose(c.gf_checkpoints, math.log(1 / 0.07) / c.spectrum)

    def test_quadratic_evaluation(self):
        c = build_quad_lower(3, 11.0)
        obj = c.to_objective()
        # f(x) = 0.5 * (121 x1^2 + 11 x2^2 + x3^2)
        assert obj.value_at([1.0, 1.0, 1.0]) == pytest.approx(0.5 * 133.0)
        assert np.allclose(obj.gradient_at([1.0, 1.0, 1.0]), [121.0, 11.0, 1.0])

    def test_validation(self):
        with pytest.raises(InputError):
            build_quad_lower(0, 2.0)
        with pytest.raises(InputError):
            build_quad_lower(3, 1.0)


class TestQuadRandom:
    def test_two_dims_has_no_random_spectrum(self):
        inst = build_quad_random(2, 100.0, seed=5)
        assert inst.coefficients.tolist() == [1.0, 0.01]

    def test_deterministic_for_fixed_seed(self):
        a = build_quad_random(10, 1e4, seed=3)
        b = build_quad_random(10, 1e4, seed=3)
        assert np.array_equal(a.coefficients, b.coefficients)
        assert np.array_equal(a.x0, b.x0)
        c = build_quad_random(10, 1e4, seed=4)
        assert not np.array_equal(a.x0, c.x0)

    def test_sampled_ranges_and_normalisation(self):
        inst = build_quad_random(10, 100.0, seed=7)
        assert np.all(inst.coefficients >= 0.01 - 1e-15)
        assert np.all(inst.coefficients <= 1.0)
        assert np.linalg.norm(inst.x0) == pytest.approx(math.sqrt(10.0), abs=1e-12)

    def test_validation(self):
        with pytest.raises(InputError):
            build_quad_random(1, 100.0, 0)
        with pytest.raises(InputError):
            build_quad_random(5, 1.0, 0)


class TestLinConvConstants:
    def test_flow_value(self):
        a, c = construction_linconv_constants(6, "gf")
        assert a == 1.0
        assert c == pytest.approx(1.0 / (24 * math.log(6.0)), rel=1e-14)
        assert c == pytest.approx(0.023256, abs=1e-5)

    def test_descent_value(self):
        a, c = construction_linconv_constants(6, "gd")
        assert c == pytest.approx(1.0 / (96 * math.log(6.0)), rel=1e-14)
        assert c == pytest.approx(0.005814, abs=1e-5)

    def test_large_dimension(self):
        _, c = construction_linconv_constants(100, "gf")
        assert c == pytest.approx(1.0 / (400 * math.log(100.0)), rel=1e-14)

    def test_validation(self):
        with pytest.raises(InputError):
            construction_linconv_constants(5, "gf")
        with pytest.raises(InputError):
            construction_linconv_constants(6, "both")


def test_flow_instance_capture_progression():
    # after one stage the staggered coordinates have shifted down one slot
    inst = build_pkl_gf_instance(7)
    traj = gf_integrate(inst.objective, inst.x0, 1e-10, StopRule.horizon(inst.stage_time))
    final = traj.points[-1]
    assert final[0] == pytest.approx(inst.construction.delta, abs=1e-6)
    for i in range(1, 6):
        assert final[i + 1] == pytest.approx(inst.x0[i], abs=1e-6)


def test_descent_instance_capture_progression():
    inst = build_pkl_gd_instance(8)
    k1 = inst.init.k1
    traj = gd_run(inst.objective, inst.x0, inst.eta, StopRule.max_steps(k1))
    final = traj.points[-1]
    assert final[1] == pytest.approx(0.5, abs=1e-10)
    for i in range(1, 7):
        assert final[i + 1] == pytest.approx(inst.x0[i], abs=1e-9)
