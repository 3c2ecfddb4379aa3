import numpy as np
import pytest

from cfharm.geometry import ProjectivePoint, choose_barrier, fiber_over_x
from cfharm.harmonic import BoundaryField, ComponentField, period_a, \
    build_h, primitive_f
from cfharm.kernel import (pairwise_sum, build_tube, jacobian_halving_check,
                           kernel_det, compute_G, vandermonde_solve,
                           run_line_probe, KernelError)

SMALL_DIMS = (64, 8, 8)
SMALL_EPS = (0.04, 0.02)


def _barrier(pipeline, x_probe, seed=7):
    curve = pipeline.curve
    roots, _ = fiber_over_x(curve, x_probe)
    w = ProjectivePoint.from_chart(x_probe, roots[0]).sphere()
    return choose_barrier(curve, w, seed=seed, min_margin=0.2 * curve.radius)


def _moments(pipeline, S, dims=SMALL_DIMS, epsilons=SMALL_EPS, psi_offset=0.0,
             mode="cauchy", workers=1):
    tubes = [build_tube(pipeline.curve, pipeline.trace, e, dims,
                        psi_offset=psi_offset) for e in epsilons]
    return compute_G(pipeline.F, S, tubes, pipeline.trace, pipeline.hefer,
                     workers=workers, mode=mode)


class TestPairwiseSum:
    def test_matches_plain_sum(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
        assert abs(pairwise_sum(v) - np.sum(v)) < 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(777)
        assert pairwise_sum(v) == pairwise_sum(v.copy())


class TestTube:
    def test_node_constraints(self, conic_pipeline):
        tube = build_tube(conic_pipeline.curve, conic_pipeline.trace, 0.02,
                          SMALL_DIMS)
        assert tube.worst_residuals["sphere"] <= 1e-11
        assert tube.worst_residuals["rho"] <= 1e-11
        assert tube.worst_residuals["phase"] <= 1e-11 * 0.02

    def test_analytic_jacobian_matches_finite_differences(
            self, conic_pipeline):
        halving, analytic = jacobian_halving_check(
            conic_pipeline.curve, conic_pipeline.trace, 0.02, n_samples=8)
        assert analytic < 1e-4
        assert halving < 1e-3

    def test_epsilon_range_enforced(self, line_pipeline):
        with pytest.raises(KernelError):
            build_tube(line_pipeline.curve, line_pipeline.trace, 0.5)


class TestKernelDet:
    def test_barrier_column_scale_invariance(self, conic_pipeline):
        """The kernel is invariant under rescaling the barrier vector: the
        determinant is linear in the R column and F = R . zeta is too."""
        S = _barrier(conic_pipeline, 0.3 + 0.2j)
        tube = build_tube(conic_pipeline.curve, conic_pipeline.trace, 0.02,
                          SMALL_DIMS)
        zeta = tube.components[0].zeta[:8]
        zbar = tube.components[0].zeta_bar[:8]
        k1, _ = kernel_det(zeta, zbar, S.points[0], conic_pipeline.hefer,
                           S.R_vec, curve=conic_pipeline.curve)
        k2, _ = kernel_det(zeta, zbar, S.points[0], conic_pipeline.hefer,
                           (2.0 - 1.0j) * S.R_vec, curve=conic_pipeline.curve)
        assert float(np.max(np.abs(k1 - k2))) < 1e-12 * np.max(np.abs(k1))

    def test_unknown_mode_rejected(self, conic_pipeline):
        S = _barrier(conic_pipeline, 0.3 + 0.2j)
        tube = build_tube(conic_pipeline.curve, conic_pipeline.trace, 0.02,
                          SMALL_DIMS)
        comp = tube.components[0]
        with pytest.raises(KernelError):
            kernel_det(comp.zeta[:2], comp.zeta_bar[:2], S.points[0],
                       conic_pipeline.hefer, S.R_vec,
                       curve=conic_pipeline.curve, mode="nonsense")


class TestMoments:
    def test_hopf_phase_shift_invariance(self, conic_pipeline):
        S = _barrier(conic_pipeline, 0.3 + 0.2j)
        g0 = _moments(conic_pipeline, S).extrapolated
        g1 = _moments(conic_pipeline, S, psi_offset=0.37).extrapolated
        assert float(np.max(np.abs(g1 - g0))) <= 1e-8

    def test_zero_data_gives_zero_moments(self, line_pipeline):
        trace = line_pipeline.trace
        tc = trace.components[0]
        fld = BoundaryField(components=[ComponentField(
            u=np.zeros_like(tc.theta), p=np.zeros_like(tc.x))])
        a = period_a(fld, trace)
        H = build_h(line_pipeline.curve, trace, a, mode="paper")
        F = primitive_f(fld, H, trace)
        S = _barrier(line_pipeline, 0.3 + 0.1j)
        tubes = [build_tube(line_pipeline.curve, trace, e, SMALL_DIMS)
                 for e in SMALL_EPS]
        G = compute_G(F, S, tubes, trace, line_pipeline.hefer)
        assert float(np.max(np.abs(G.extrapolated))) < 1e-12

    def test_moments_linear_in_data(self, line_pipeline, line_scenario):
        """G is linear in the boundary data f."""
        trace = line_pipeline.trace
        curve = line_pipeline.curve
        S = _barrier(line_pipeline, 0.3 + 0.1j)
        tubes = [build_tube(curve, trace, e, SMALL_DIMS) for e in SMALL_EPS]

        def moments_for(holo, dholo):
            tc = trace.components[0]
            u = np.real(holo(tc.x))
            p = 0.5 * dholo(tc.x) * tc.tangent[..., 0]
            fld = BoundaryField(components=[ComponentField(u=u, p=p)])
            a = period_a(fld, trace)
            H = build_h(curve, trace, a, mode="paper")
            F = primitive_f(fld, H, trace)
            return compute_G(F, S, tubes, trace,
                             line_pipeline.hefer).extrapolated

        g1 = moments_for(lambda x: x, lambda x: np.ones_like(x))
        g2 = moments_for(lambda x: x**2, lambda x: 2 * x)
        g12 = moments_for(lambda x: x + x**2, lambda x: 1 + 2 * x)
        assert float(np.max(np.abs(g12 - g1 - g2))) < 1e-10

    def test_paper_mode_integrates_to_zero_for_unit_lift(self, line_pipeline):
        """Documented failure: with the unit-sphere lift every Hopf mode of
        the literal kernel is negative, so the moment vanishes identically
        while the default mode reproduces the data.  Needs the full
        periodic resolution: a coarse psi grid aliases the negative modes
        back onto zero."""
        S = _barrier(line_pipeline, 0.3 + 0.1j)
        g_paper = _moments(line_pipeline, S, dims=(64, 32, 32),
                           mode="paper").extrapolated
        g_cauchy = _moments(line_pipeline, S).extrapolated
        assert float(np.max(np.abs(g_paper))) < 1e-7
        assert float(np.max(np.abs(g_cauchy))) > 0.01

    def test_barrier_seed_insensitivity(self):
        u1, t1, _ = run_line_probe(0.3 + 0.1j, (lambda x: x**2, lambda x: 2 * x),
                                   dims=SMALL_DIMS, epsilons=SMALL_EPS, seed=11)
        u2, t2, _ = run_line_probe(0.3 + 0.1j, (lambda x: x**2, lambda x: 2 * x),
                                   dims=SMALL_DIMS, epsilons=SMALL_EPS, seed=23)
        assert t1 == t2
        assert abs(u1 - u2) <= 1e-8
        assert abs(u1 - t1) <= 1e-6

    def test_non_halving_schedule_rejected(self, line_pipeline):
        S = _barrier(line_pipeline, 0.3 + 0.1j)
        with pytest.raises(KernelError):
            _moments(line_pipeline, S, epsilons=(0.04, 0.03, 0.02))

    def test_worker_count_does_not_change_moments(self, conic_pipeline):
        S = _barrier(conic_pipeline, 0.3 + 0.2j)
        g1 = _moments(conic_pipeline, S, workers=1).extrapolated
        g4 = _moments(conic_pipeline, S, workers=4).extrapolated
        assert np.array_equal(g1, g4)


class TestVandermonde:
    def test_pinned_two_point_example(self):
        v = vandermonde_solve(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        assert np.allclose(v, [0.0, 1.0], atol=1e-14)

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        G = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        v = vandermonde_solve(x, G)
        A = np.vander(x, 6, increasing=True).T
        assert np.allclose(v, np.linalg.solve(A, G), atol=1e-9)

    def test_coincident_points_rejected(self):
        with pytest.raises(KernelError):
            vandermonde_solve(np.array([0.5, 0.5 + 1e-14]),
                              np.array([1.0, 2.0]))
