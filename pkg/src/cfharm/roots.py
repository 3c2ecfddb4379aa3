"""Simultaneous root finding for low-degree complex polynomials.

Durand-Kerner iteration from perturbed-circle starts, one Newton polish per
root at the end.  Degrees here never exceed the curve-degree cap, so no
companion-matrix machinery is needed and runs are deterministic.
"""
from __future__ import annotations

import numpy as np


class RootError(RuntimeError):
    pass


def _polyval(coeffs, x):
    # coeffs: highest degree first
    r = np.zeros_like(x) + coeffs[0]
    for c in coeffs[1:]:
        r = r * x + c
    return r


def all_roots(coeffs, tol=1e-14, max_iter=200):
    """All roots of the polynomial with the given coefficients.

    coeffs is highest-degree-first, leading coefficient nonzero.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim != 1 or coeffs.size < 1:
        raise RootError("need a nonempty 1-d coefficient array")
    if coeffs[0] == 0:
        raise RootError("leading coefficient vanishes")
    n = coeffs.size - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    monic = coeffs / coeffs[0]
    if n == 1:
        return np.array([-monic[1]], dtype=complex)

    # Cauchy bound, perturbed-circle starts (irrational angle offset breaks
    # symmetric stalls)
    radius = 1.0 + np.max(np.abs(monic[1:]))
    ang = 2 * np.pi * (np.arange(n) / n + 0.5 / np.pi)
    x = radius * np.exp(1j * ang)

    scale = max(1.0, radius)
    for _ in range(max_iter):
        p = _polyval(monic, x)
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = np.prod(diff, axis=1)
        step = p / denom
        x = x - step
        if np.max(np.abs(step)) < tol * scale:
            break
    # multiple roots stall near sqrt(eps); callers validate residuals and
    # separation, so no hard failure here

    # one Newton polish per root
    dcoeffs = monic[:-1] * np.arange(n, 0, -1)
    for _ in range(2):
        dp = _polyval(dcoeffs, x)
        ok = np.abs(dp) > 1e-300
        x = np.where(ok, x - _polyval(monic, x) / np.where(ok, dp, 1.0), x)
    return x


def min_separation(roots):
    roots = np.asarray(roots)
    if roots.size < 2:
        return np.inf
    diff = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(diff.min())
