"""Homogeneous polynomials in three complex variables and their Hefer split.

Coefficients are stored sparsely by exponent triple.  The telescoping
division below is division-free (it only copies coefficients), so integer
or rational curve coefficients stay exact until numeric evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DEGREE = 8


class PolynomialError(ValueError):
    pass


def _as_complex(c):
    return complex(c)


@dataclass(frozen=True)
class HomPoly3:
    """Homogeneous polynomial sum c_{ijk} z0^i z1^j z2^k with i+j+k = degree."""

    degree: int
    coeffs: dict

    def __post_init__(self):
        if self.degree < 0:
            raise PolynomialError("degree must be nonnegative")
        if self.degree > MAX_DEGREE:
            raise PolynomialError(
                f"degree {self.degree} exceeds supported cap {MAX_DEGREE}")
        for expo in self.coeffs:
            if len(expo) != 3 or any(e < 0 for e in expo):
                raise PolynomialError(f"bad exponent triple {expo}")
            if sum(expo) != self.degree:
                raise PolynomialError(
                    f"exponent {expo} does not sum to degree {self.degree}")

    @classmethod
    def from_terms(cls, terms):
        """Build from an iterable of ((i,j,k), coeff); degree is inferred.

        Duplicate exponent triples are rejected so that config-level typos
        surface instead of silently accumulating.
        """
        coeffs = {}
        for expo, c in terms:
            expo = tuple(int(e) for e in expo)
            if expo in coeffs:
                raise PolynomialError(f"duplicate exponent triple {expo}")
            c = _as_complex(c)
            if c != 0:
                coeffs[expo] = c
        if not coeffs:
            raise PolynomialError("polynomial has no nonzero terms")
        degrees = {sum(e) for e in coeffs}
        if len(degrees) != 1:
            raise PolynomialError(f"mixed total degrees {sorted(degrees)}")
        return cls(degree=degrees.pop(), coeffs=coeffs)

    def eval(self, z):
        """Evaluate at z = (z0, z1, z2); each entry may be a numpy array."""
        z0, z1, z2 = z[..., 0], z[..., 1], z[..., 2]
        total = 0
        for (i, j, k), c in self.coeffs.items():
            total = total + c * z0**i * z1**j * z2**k
        return total

    def grad(self, z):
        """Gradient (d/dz0, d/dz1, d/dz2) at z; broadcasts like eval."""
        z0, z1, z2 = z[..., 0], z[..., 1], z[..., 2]
        g0 = g1 = g2 = 0
        for (i, j, k), c in self.coeffs.items():
            if i:
                g0 = g0 + c * i * z0**(i - 1) * z1**j * z2**k
            if j:
                g1 = g1 + c * j * z0**i * z1**(j - 1) * z2**k
            if k:
                g2 = g2 + c * k * z0**i * z1**j * z2**(k - 1)
        return np.stack(np.broadcast_arrays(
            np.asarray(g0, dtype=complex),
            np.asarray(g1, dtype=complex),
            np.asarray(g2, dtype=complex)), axis=-1)

    def scale(self, factor):
        return HomPoly3(self.degree,
                        {e: factor * c for e, c in self.coeffs.items()})


def poly_eval(p: HomPoly3, z):
    return p.eval(np.asarray(z, dtype=complex))


def poly_grad(p: HomPoly3, z):
    return p.grad(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class HeferTriple:
    """Polynomials Q^0,Q^1,Q^2 in (zeta0,zeta1,zeta2,z0,z1,z2) with

        P(zeta) - P(z) = sum_i Q^i(zeta, z) (zeta_i - z_i)

    and joint homogeneity d-1.  Stored as exponent-6-tuple -> coefficient.
    """

    degree: int  # joint degree d-1
    q: tuple     # three dicts

    def eval(self, zeta, z):
        """Values (Q^0, Q^1, Q^2); zeta may be an array of shape (..., 3)."""
        zeta = np.asarray(zeta, dtype=complex)
        z = np.asarray(z, dtype=complex)
        out = []
        for qi in self.q:
            total = 0
            for (a0, a1, a2, b0, b1, b2), c in qi.items():
                total = total + (
                    c
                    * zeta[..., 0]**a0 * zeta[..., 1]**a1 * zeta[..., 2]**a2
                    * z[..., 0]**b0 * z[..., 1]**b1 * z[..., 2]**b2)
            out.append(np.asarray(total, dtype=complex))
        return np.stack(np.broadcast_arrays(*out), axis=-1)


def hefer_decompose(p: HomPoly3) -> HeferTriple:
    """Telescoping Hefer decomposition of p, variable order (0, 1, 2).

    Q^0 = (P(s0,s1,s2) - P(z0,s1,s2)) / (s0 - z0), and so on down the
    chain; each quotient is exact via (x^a - y^a)/(x - y) = sum x^i y^(a-1-i).
    """
    if not p.coeffs:
        raise PolynomialError("cannot decompose the zero polynomial")
    q0, q1, q2 = {}, {}, {}

    def add(d, key, c):
        d[key] = d.get(key, 0) + c

    for (i, j, k), c in p.coeffs.items():
        # (zeta0^i - z0^i) zeta1^j zeta2^k / (zeta0 - z0)
        for a in range(i):
            add(q0, (a, j, k, i - 1 - a, 0, 0), c)
        # z0^i (zeta1^j - z1^j) zeta2^k / (zeta1 - z1)
        for a in range(j):
            add(q1, (0, a, k, i, j - 1 - a, 0), c)
        # z0^i z1^j (zeta2^k - z2^k) / (zeta2 - z2)
        for a in range(k):
            add(q2, (0, 0, a, i, j, k - 1 - a), c)

    clean = tuple({e: c for e, c in qi.items() if c != 0}
                  for qi in (q0, q1, q2))
    return HeferTriple(degree=p.degree - 1, q=clean)


def hefer_eval(h: HeferTriple, zeta, z):
    return h.eval(np.asarray(zeta, dtype=complex), np.asarray(z, dtype=complex))


def hefer_identity_residual(p: HomPoly3, h: HeferTriple, zeta, z):
    """|P(zeta) - P(z) - sum Q^i (zeta_i - z_i)|, broadcast over samples."""
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    q = h.eval(zeta, z)
    lhs = p.eval(zeta) - p.eval(z)
    rhs = np.sum(q * (zeta - z), axis=-1)
    return np.abs(lhs - rhs)
