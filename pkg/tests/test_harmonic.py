import numpy as np
import pytest

from cfharm.harmonic import (period_a, build_h, primitive_f, lift_g,
                             h_component_periods, HolomorphizationError,
                             PERIOD_TOL)


class TestPeriods:
    def test_line_periods_vanish(self, line_pipeline):
        assert float(np.max(np.abs(line_pipeline.a))) < 1e-10

    def test_conic_periods(self, conic_pipeline, conic_scenario):
        a = np.real(conic_pipeline.a)
        expected = conic_scenario.expected_periods
        assert (np.allclose(a, expected, atol=1e-8)
                or np.allclose(a, -expected, atol=1e-8))

    def test_fermat_periods(self, fermat_pipeline, fermat_scenario):
        a = np.real(fermat_pipeline.a)
        expected = fermat_scenario.expected_periods
        assert (np.allclose(a, expected, atol=1e-8)
                or np.allclose(a, -expected, atol=1e-8))

    def test_periods_are_real(self, conic_pipeline):
        assert float(np.max(np.abs(np.imag(conic_pipeline.a)))) < 1e-8


class TestCorrectionH:
    def test_paper_mode_records_residual_on_conic(self, conic_pipeline):
        H = build_h(conic_pipeline.curve, conic_pipeline.trace,
                    conic_pipeline.a, mode="paper")
        assert H.mode == "paper"
        assert H.period_residual > 0.1  # the documented gap

    def test_auto_falls_back_to_robust_on_conic(self, conic_pipeline):
        assert conic_pipeline.H.mode == "robust"
        assert conic_pipeline.H.period_residual <= PERIOD_TOL

    def test_h_matches_component_periods(self, fermat_pipeline):
        got = h_component_periods(fermat_pipeline.H, fermat_pipeline.trace)
        want = np.real(fermat_pipeline.a)
        assert float(np.max(np.abs(got - want))) <= 1e-8

    def test_trivial_periods_give_empty_h(self, line_pipeline):
        assert line_pipeline.H.period_residual <= PERIOD_TOL
        x = np.array([0.3 + 0.1j])
        assert abs(line_pipeline.H.eval_chart(x, 0 * x)[0]) < 1e-12


class TestPrimitiveF:
    def test_closure_and_drift(self, conic_pipeline, fermat_pipeline):
        for pl in (conic_pipeline, fermat_pipeline):
            assert float(np.max(pl.F.closure_defects)) <= 1e-8
            assert pl.F.max_re_drift <= 1e-6

    def test_connector_two_path_independence(self, fermat_pipeline):
        assert fermat_pipeline.F.path_spread <= 1e-8

    def test_paper_h_aborts_on_conic(self, conic_pipeline):
        H_bad = build_h(conic_pipeline.curve, conic_pipeline.trace,
                        conic_pipeline.a, mode="paper")
        with pytest.raises(HolomorphizationError):
            primitive_f(conic_pipeline.fld, H_bad, conic_pipeline.trace)

    def test_re_f_matches_data_on_line(self, line_pipeline, line_scenario):
        tc = line_pipeline.trace.components[0]
        f_vals = line_pipeline.F.values[0]
        u = np.array([line_scenario.oracle.u_chart(x, y)
                      for x, y in zip(tc.x, tc.y)])
        assert float(np.max(np.abs(np.real(f_vals) - u))) <= 1e-8


class TestLiftG:
    def test_phase_equivariance(self, conic_pipeline):
        """g has homogeneity -1 along the Hopf fiber."""
        tc = conic_pipeline.trace.components[0]
        idx = np.arange(0, tc.theta.size, tc.theta.size // 8)
        zeta = tc.sphere[idx]
        seed = tc.theta[idx]
        g0 = lift_g(conic_pipeline.F, conic_pipeline.trace, 0, zeta, seed,
                    0.02)
        phase = np.exp(0.7j)
        g1 = lift_g(conic_pipeline.F, conic_pipeline.trace, 0, phase * zeta,
                    seed, 0.02)
        assert float(np.max(np.abs(g1 - g0 / phase))) < 1e-9

    def test_boundary_restriction_is_f_over_zeta0(self, conic_pipeline):
        tc = conic_pipeline.trace.components[0]
        idx = np.arange(0, tc.theta.size, tc.theta.size // 8)
        zeta = tc.sphere[idx]
        seed = tc.theta[idx]
        g = lift_g(conic_pipeline.F, conic_pipeline.trace, 0, zeta, seed,
                   0.02)
        f = conic_pipeline.F.values[0][idx]
        assert float(np.max(np.abs(g * zeta[:, 0] - f))) < 1e-9
