import numpy as np
import pytest

from cfharm.algebra import (HomPoly3, hefer_decompose,
                            hefer_identity_residual, PolynomialError)


def _rand_pairs(n, seed=0):
    rng = np.random.default_rng(seed)
    zeta = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    z = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    return zeta, z


LINE = HomPoly3.from_terms([((0, 0, 1), 1)])
CONIC = HomPoly3.from_terms([((0, 2, 0), 1), ((0, 0, 2), 1), ((2, 0, 0), -1)])
FERMAT = HomPoly3.from_terms([((0, 3, 0), 1), ((0, 0, 3), 1), ((3, 0, 0), -1)])


class TestHomPoly3:
    def test_duplicate_exponent_rejected(self):
        with pytest.raises(PolynomialError):
            HomPoly3.from_terms([((0, 0, 1), 1), ((0, 0, 1), 2)])

    def test_inhomogeneous_rejected(self):
        with pytest.raises(PolynomialError):
            HomPoly3.from_terms([((0, 0, 1), 1), ((0, 2, 0), 1)])

    def test_eval_homogeneity(self):
        z = np.array([0.3 + 0.1j, -1.2 + 0.4j, 0.7 - 0.9j])
        lam = 1.3 - 0.8j
        for p in (LINE, CONIC, FERMAT):
            assert abs(p.eval(lam * z) - lam**p.degree * p.eval(z)) < 1e-12

    def test_grad_matches_finite_differences(self):
        z = np.array([0.3 + 0.1j, -1.2 + 0.4j, 0.7 - 0.9j])
        h = 1e-6
        for p in (CONIC, FERMAT):
            g = p.grad(z)
            for i in range(3):
                e = np.zeros(3, complex)
                e[i] = h
                fd = (p.eval(z + e) - p.eval(z - e)) / (2 * h)
                assert abs(fd - g[i]) < 1e-6


class TestHeferDecomposition:
    def test_line_coefficients_pinned(self):
        t = hefer_decompose(LINE)
        assert t.q[0] == {}
        assert t.q[1] == {}
        assert t.q[2] == {(0, 0, 0, 0, 0, 0): 1}

    def test_conic_coefficients_pinned(self):
        # telescoping in variable order (0, 1, 2):
        # Q^0 = -(zeta0 + z0), Q^1 = zeta1 + z1, Q^2 = zeta2 + z2
        t = hefer_decompose(CONIC)
        assert t.q[0] == {(1, 0, 0, 0, 0, 0): -1, (0, 0, 0, 1, 0, 0): -1}
        assert t.q[1] == {(0, 1, 0, 0, 0, 0): 1, (0, 0, 0, 0, 1, 0): 1}
        assert t.q[2] == {(0, 0, 1, 0, 0, 0): 1, (0, 0, 0, 0, 0, 1): 1}

    def test_fermat_coefficients_pinned(self):
        # Q^1 = zeta1^2 + zeta1 z1 + z1^2, and so on
        t = hefer_decompose(FERMAT)
        assert t.q[1] == {(0, 2, 0, 0, 0, 0): 1, (0, 1, 0, 0, 1, 0): 1,
                          (0, 0, 0, 0, 2, 0): 1}
        assert t.q[0] == {(2, 0, 0, 0, 0, 0): -1, (1, 0, 0, 1, 0, 0): -1,
                          (0, 0, 0, 2, 0, 0): -1}

    @pytest.mark.parametrize("p", [LINE, CONIC, FERMAT],
                             ids=["line", "conic", "fermat"])
    def test_identity_on_random_pairs(self, p):
        t = hefer_decompose(p)
        zeta, z = _rand_pairs(2000, seed=p.degree)
        scale = np.maximum(np.abs(p.eval(zeta)) + np.abs(p.eval(z)), 1.0)
        res = hefer_identity_residual(p, t, zeta, z) / scale
        assert float(np.max(res)) <= 1e-12

    @pytest.mark.parametrize("p", [CONIC, FERMAT], ids=["conic", "fermat"])
    def test_joint_homogeneity(self, p):
        t = hefer_decompose(p)
        zeta, z = _rand_pairs(200, seed=11)
        lam = 0.7 + 1.1j
        q1 = t.eval(zeta, z)
        q2 = t.eval(lam * zeta, lam * z)
        res = np.abs(q2 - lam ** (p.degree - 1) * q1)
        assert float(np.max(res / np.maximum(np.abs(q1), 1.0))) <= 1e-12

    def test_zero_polynomial_rejected(self):
        with pytest.raises(PolynomialError):
            hefer_decompose(HomPoly3(degree=2, coeffs={}))
