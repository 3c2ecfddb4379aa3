"""From boundary data to a holomorphic lift.

Pipeline: component periods of the boundary 1-form, a correction h built
from log|linear form|^2 terms that kills those periods, the primitive
f = 2 * integral of d(u - h) along the boundary (spectrally integrated),
and the homogeneity-(-1) extension used on the residue tube.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import CurveDomain, BoundaryTrace, GeometryError
from .paths import ConnectorPath, build_connectors

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi

PERIOD_TOL = 1e-8
REF_TOL = 1e-6


class HolomorphizationError(RuntimeError):
    """The boundary data does not holomorphize; carries period diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# boundary data


@dataclass
class ComponentField:
    u: np.ndarray   # real boundary values on the component's theta grid
    p: np.ndarray   # pullback of the (1,0)-part of du, per dtheta


@dataclass
class ConnectorField:
    path: ConnectorPath
    pu: np.ndarray  # pullback of the (1,0)-part of du at path nodes, per dt


@dataclass
class BoundaryField:
    """Boundary measurements (u, du) plus connector data for the offsets."""

    components: list
    connectors: dict = field(default_factory=dict)  # comp index -> variants
    provenance: str = "analytic"

    def validate(self, trace: BoundaryTrace):
        if len(self.components) != len(trace.components):
            raise ValueError("field/trace component count mismatch")
        raw = []
        for cf, tc in zip(self.components, trace.components):
            if cf.u.shape != tc.theta.shape or cf.p.shape != tc.theta.shape:
                raise ValueError("field sample counts do not match the trace")
            dtheta = tc.dtheta
            # single-valuedness: the closed integral of du vanishes
            du_loop = 2 * np.sum(cf.p.real) * dtheta
            scale = max(1.0, float(np.max(np.abs(cf.u))))
            if abs(du_loop) > 1e-8 * scale:
                raise ValueError(
                    f"boundary u is not single-valued (loop du = {du_loop:.2e})")
            raw.append(np.sum(cf.p) * dtheta)
        total = sum(raw) / (2j * np.pi)
        if abs(total) > 1e-8:
            raise ValueError(
                f"boundary periods violate Stokes consistency (sum = {total:.2e})")
        return self


# ---------------------------------------------------------------------------
# periods


def period_a(fld: BoundaryField, trace: BoundaryTrace):
    """Component periods a_r = (1/2*pi*i) * loop integral of the boundary
    form; real for real harmonic data (asserted on the raw integral)."""
    a = []
    for cf, tc in zip(fld.components, trace.components):
        raw = np.sum(cf.p) * tc.dtheta
        scale = max(1.0, float(np.max(np.abs(cf.p))) * TWO_PI)
        if abs(raw.real) > 1e-8 * scale:
            raise ValueError(
                f"raw period has a nonvanishing real part ({raw.real:.2e}); "
                "boundary data is not from a single-valued harmonic function")
        a.append(raw / (2j * np.pi))
    a = np.array(a)
    if np.max(np.abs(a.imag)) > 1e-9 * max(1.0, float(np.max(np.abs(a)))):
        log.warning("period coefficients carry imaginary parts: %s", a)
    return a


# ---------------------------------------------------------------------------
# the log correction h


@dataclass
class CorrectionH:
    """h = sum_s c_s log|ell_s(z)/z0|^2 with real c_s and linear forms ell_s."""

    terms: list            # (c_s, ell_s) with ell_s a length-3 complex array
    mode: str              # 'paper' or 'robust'
    period_residual: float
    component_residuals: np.ndarray | None = None

    def eval_chart(self, x, y):
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        h = np.zeros(np.broadcast(x, y).shape, dtype=float)
        for c, ell in self.terms:
            s = ell[0] + ell[1] * x + ell[2] * y
            h = h + c * np.log(np.abs(s) ** 2)
        return h

    def eval_point(self, rep):
        rep = np.asarray(rep, dtype=complex)
        if abs(rep[0]) < 1e-300:
            raise GeometryError("h is evaluated in the z0 != 0 chart")
        return float(self.eval_chart(rep[1] / rep[0], rep[2] / rep[0]))

    def dh_pullback(self, x, y, dx, dy):
        """Pullback of the (1,0)-part of dh along chart tangents (dx, dy)."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        out = np.zeros(np.broadcast(x, y, dx, dy).shape, dtype=complex)
        for c, ell in self.terms:
            s = ell[0] + ell[1] * x + ell[2] * y
            if np.any(np.abs(s) < 1e-12):
                raise GeometryError("dh evaluated at a singular point of h")
            out = out + c * (ell[1] * dx + ell[2] * dy) / s
        return out


def eval_h(H: CorrectionH, point):
    return H.eval_point(point.rep if hasattr(point, "rep") else point)


def eval_dh(H: CorrectionH, point, tangent):
    rep = np.asarray(point.rep if hasattr(point, "rep") else point,
                     dtype=complex)
    x, y = rep[1] / rep[0], rep[2] / rep[0]
    return complex(H.dh_pullback(x, y, tangent[0], tangent[1]))


def _winding(values):
    """Total winding number of a closed complex sample loop, in turns."""
    ratios = values / np.roll(values, 1)
    return float(np.sum(np.angle(ratios)) / TWO_PI)


def h_component_periods(H: CorrectionH, trace: BoundaryTrace):
    """(1/2*pi*i) * loop integrals of the (1,0)-part of dh per component;
    integer windings, computed by phase accumulation."""
    out = []
    for tc in trace.components:
        total = 0.0
        for c, ell in H.terms:
            s = ell[0] + ell[1] * tc.x + ell[2] * tc.y
            total += c * _winding(s)
        out.append(total)
    return np.array(out)


def _line_through(curve, p1, p2):
    """Homogeneous linear form vanishing on the chart points p1, p2."""
    a = np.array([1.0, p1[0], p1[1]], dtype=complex)
    b = np.array([1.0, p2[0], p2[1]], dtype=complex)
    ell = np.cross(a, b)
    return ell / np.linalg.norm(ell)


def _candidate_forms(curve: CurveDomain, trace: BoundaryTrace):
    """Pool of linear forms with all curve zeros in the removed regions.

    Per boundary component: lines through two outward continuations of the
    component's sheet, which concentrates zeros in one removed region and
    makes the winding matrix useful; plus the x - c family as a fallback.
    """
    from .geometry import continue_fiber

    R = curve.radius
    pool = []
    m = len(trace.components)
    for r, comp in enumerate(trace.components):
        for (f1, a1, f2, a2) in ((1.7, 0.0, 2.3, 0.9), (1.6, 2.1, 2.4, 3.0)):
            base = TWO_PI * r / m
            pts = []
            ok = True
            for fac, da in ((f1, a1), (f2, a2)):
                ang = base + da
                n_arc = max(16, trace.n_theta // 4)
                arc = R * np.exp(1j * np.linspace(0.0, ang, n_arc))
                ray = np.linspace(R, fac * R, 48) * np.exp(1j * ang)
                path = np.concatenate([arc, ray[1:]])
                try:
                    yf = continue_fiber(curve, path, trace.fiber_start)
                except GeometryError:
                    ok = False
                    break
                sheet = comp.cycle[0]
                pts.append((fac * R * np.exp(1j * ang), yf[sheet]))
            if not ok:
                continue
            ell = _line_through(curve, pts[0], pts[1])
            if _zeros_outside(curve, ell, margin=1.05):
                pool.append(ell)
    for c_fac in (1.9, 2.6):
        for r in range(m):
            c = c_fac * R * np.exp(1j * (TWO_PI * r / m + 0.5))
            pool.append(np.array([-c, 1.0, 0.0], dtype=complex))
    return pool


def _zeros_outside(curve: CurveDomain, ell, margin=1.05):
    """Check every curve intersection of the line ell sits beyond |x| = R."""
    from .roots import all_roots

    # parametrize the line ell . z = 0 by two kernel vectors
    idx = int(np.argmax(np.abs(ell)))
    basis = []
    for j in range(3):
        if j == idx:
            continue
        v = np.zeros(3, dtype=complex)
        v[j] = 1.0
        v[idx] = -ell[j] / ell[idx]
        basis.append(v)
    b0, b1 = basis
    d = curve.degree
    nodes = np.exp(2j * np.pi * np.arange(d + 1) / (d + 1))
    vals = curve.P.eval(b0[None, :] + nodes[:, None] * b1[None, :])
    coeffs = (np.fft.fft(vals) / (d + 1))[::-1]
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)
    work = coeffs.copy()
    while work.size > 1 and abs(work[0]) <= 1e-10 * scale:
        work = work[1:]
    if work.size <= 1:
        return False
    for t in all_roots(work):
        z = b0 + t * b1
        if abs(z[0]) < 1e-9 * np.linalg.norm(z):
            continue  # zero at infinity: removed by construction
        if abs(z[1] / z[0]) <= margin * curve.radius:
            return False
    return True


def build_h(curve: CurveDomain, trace: BoundaryTrace, a, mode="auto"):
    """Correction h with the periods of a.

    'paper' emits h = sum_r a_r log|x - x(z^(r))|^2 verbatim and records its
    (possibly large) period residual without failing; 'robust' matches the
    periods with a least-norm combination over a pool of admissible log
    terms; 'auto' tries paper first and falls back with a loud report.
    """
    a = np.asarray(a, dtype=complex)
    if mode not in ("paper", "robust", "auto"):
        raise ValueError(f"unknown h mode {mode!r}")

    def _paper():
        if not curve.reference_points:
            raise GeometryError("reference points required for paper-mode h")
        terms = []
        for ar, zr in zip(a, curve.reference_points):
            xr = zr.x
            terms.append((float(ar.real),
                          np.array([-xr, 1.0, 0.0], dtype=complex)))
        H = CorrectionH(terms=terms, mode="paper", period_residual=np.nan)
        got = h_component_periods(H, trace)
        res = np.abs(a.real - got)
        H.period_residual = float(np.max(res))
        H.component_residuals = res
        return H

    def _robust():
        pool = _candidate_forms(curve, trace)
        if not pool:
            raise GeometryError("empty robust pool of correction terms")
        probe = CorrectionH(terms=[(1.0, ell) for ell in pool], mode="robust",
                            period_residual=np.nan)
        M = np.zeros((len(trace.components), len(pool)))
        for s, ell in enumerate(pool):
            single = CorrectionH(terms=[(1.0, ell)], mode="robust",
                                 period_residual=np.nan)
            M[:, s] = h_component_periods(single, trace)
        c, *_ = np.linalg.lstsq(M, a.real, rcond=None)
        terms = [(float(cs), ell) for cs, ell in zip(c, pool)
                 if abs(cs) > 1e-13]
        H = CorrectionH(terms=terms, mode="robust", period_residual=np.nan)
        got = h_component_periods(H, trace)
        res = np.abs(a.real - got)
        H.period_residual = float(np.max(res))
        H.component_residuals = res
        if H.period_residual > PERIOD_TOL:
            raise HolomorphizationError(
                f"robust correction could not match the periods "
                f"(residual {H.period_residual:.2e}); pool rank insufficient",
                {"period_residuals": res.tolist()})
        return H

    if np.max(np.abs(a)) < PERIOD_TOL:
        return CorrectionH(terms=[], mode=mode if mode != "auto" else "paper",
                           period_residual=float(np.max(np.abs(a))),
                           component_residuals=np.abs(a))
    if mode == "paper":
        return _paper()
    if mode == "robust":
        return _robust()
    H = _paper()
    if H.period_residual <= PERIOD_TOL:
        return H
    log.warning(
        "paper-mode correction h missed the component periods "
        "(residual %.3e, per component %s); falling back to the robust "
        "log basis", H.period_residual, H.component_residuals)
    return _robust()


# ---------------------------------------------------------------------------
# the holomorphic primitive f


def _fft_antiderivative(q, length):
    """Antiderivative on a uniform periodic grid; returns (values, mean).

    values[0] = 0; the linear mean term is included so a nonzero mean shows
    up as a closure defect rather than being silently dropped.
    """
    n = q.size
    qh = np.fft.fft(q)
    freq = np.fft.fftfreq(n, d=length / n)  # cycles per unit theta
    fac = np.zeros(n, dtype=complex)
    fac[1:] = 1.0 / (2j * np.pi * freq[1:])
    anti = np.fft.ifft(qh * fac)
    mean = qh[0].real / n + 1j * qh[0].imag / n
    theta = length * np.arange(n) / n
    vals = anti - anti[0] + mean * theta
    return vals, mean


@dataclass
class PrimitiveF:
    """f = 2 * integral of the corrected boundary form, anchored so that
    Re f equals u - h on the boundary."""

    anchor: complex                 # f at the first sample of component 0
    values: list                    # f(theta) arrays per component
    offsets: np.ndarray             # additive constant per component
    closure_defects: np.ndarray
    max_re_drift: float
    path_spread: float              # two-connector offset disagreement
    _f_splines: list = None
    _y_splines: list = None

    def interpolator(self, comp_idx):
        return self._f_splines[comp_idx]

    def boundary_point(self, comp_idx, theta):
        return self._y_splines[comp_idx](theta)


def primitive_f(fld: BoundaryField, H: CorrectionH,
                trace: BoundaryTrace) -> PrimitiveF:
    """Integrate 2 * (boundary form - dh) spectrally along each component and
    fix cross-component constants by connector integration.

    Aborts with period diagnostics when the corrected form fails to close:
    that is the gate protecting the kernel stage from a multivalued f.
    """
    fld.validate(trace)
    values, means, defects = [], [], []
    scale = max(1.0, max(float(np.max(np.abs(cf.u))) for cf in fld.components))
    for cf, tc in zip(fld.components, trace.components):
        ph = H.dh_pullback(tc.x, tc.y, tc.tangent[..., 0], tc.tangent[..., 1])
        q = 2.0 * (cf.p - ph)
        length = TWO_PI * tc.n_r
        vals, mean = _fft_antiderivative(q, length)
        values.append(vals)
        means.append(mean)
        defects.append(abs(mean * length))
    defects = np.array(defects)
    if np.max(defects) > 1e-7 * scale:
        raise HolomorphizationError(
            "holomorphic primitive does not close around the boundary "
            f"(max defect {np.max(defects):.2e}); the correction h missed "
            "the component periods",
            {"closure_defects": defects.tolist(),
             "h_period_residual": H.period_residual,
             "h_mode": H.mode})

    h0 = H.eval_chart(trace.components[0].x, trace.components[0].y)
    anchor = complex(fld.components[0].u[0] - h0[0])

    offsets = np.zeros(len(values), dtype=complex)
    offsets[0] = anchor
    path_spread = 0.0
    for r in range(1, len(values)):
        variants = fld.connectors.get(r)
        if not variants:
            raise HolomorphizationError(
                f"no connector data for boundary component {r}")
        cand = []
        for cfd in variants:
            path = cfd.path
            ph = H.dh_pullback(path.x, path.y, path.dx, path.dy)
            cand.append(anchor + np.sum(2.0 * (cfd.pu - ph) * path.weights))
        offsets[r] = cand[0]
        if len(cand) > 1:
            spread = max(abs(c - cand[0]) for c in cand[1:])
            path_spread = max(path_spread, spread)
            if spread > 1e-7 * scale:
                raise HolomorphizationError(
                    f"connector offsets are path dependent "
                    f"(spread {spread:.2e}): handle periods do not vanish",
                    {"offsets": [complex(c) for c in cand]})

    f_arrays, re_drifts = [], []
    for r, (vals, cf, tc) in enumerate(zip(values, fld.components,
                                           trace.components)):
        f = vals + offsets[r]
        hvals = H.eval_chart(tc.x, tc.y)
        re_drifts.append(float(np.max(np.abs(f.real - (cf.u - hvals)))))
        f_arrays.append(f)
    max_drift = max(re_drifts)
    if max_drift > 1e-6 * scale:
        raise HolomorphizationError(
            f"Re f deviates from u - h along the boundary "
            f"(max {max_drift:.2e}); holomorphization rejected",
            {"re_drifts": re_drifts, "h_period_residual": H.period_residual,
             "closure_defects": defects.tolist(), "h_mode": H.mode})

    f_splines, y_splines = [], []
    for f, tc in zip(f_arrays, trace.components):
        length = TWO_PI * tc.n_r
        th = np.concatenate([tc.theta, [length]])
        f_ext = np.concatenate([f, [f[0]]])
        y_ext = np.concatenate([tc.y, [tc.y[0]]])
        f_splines.append(_periodic_spline(th, f_ext))
        y_splines.append(_periodic_spline(th, y_ext))

    return PrimitiveF(anchor=anchor, values=f_arrays, offsets=offsets,
                      closure_defects=defects, max_re_drift=max_drift,
                      path_spread=path_spread,
                      _f_splines=f_splines, _y_splines=y_splines)


def _periodic_spline(theta, vals):
    # closure gap is within quadrature tolerance; make it exact for the
    # periodic spline constructor
    vals = vals.copy()
    vals[-1] = vals[0]
    re = CubicSpline(theta, vals.real, bc_type="periodic")
    im = CubicSpline(theta, vals.imag, bc_type="periodic")
    length = theta[-1]

    def spline(t):
        t = np.mod(t, length)
        return re(t) + 1j * im(t)

    return spline


# ---------------------------------------------------------------------------
# homogeneity-(-1) lift on the tube


def lift_g(F: PrimitiveF, trace: BoundaryTrace, comp_idx, zeta, theta_seed,
           eps):
    """g(zeta) = f(projected boundary point) / zeta_0 on tube nodes.

    The projection is fiber-constant: the node's chart point is matched to
    the boundary parameter by x-argument, and f is evaluated there by
    periodic cubic interpolation.  Exact homogeneity -1 in the node phase.
    """
    zeta = np.asarray(zeta, dtype=complex)
    tc = trace.components[comp_idx]
    R = trace.curve.radius
    x_node = zeta[..., 1] / zeta[..., 0]
    theta = theta_seed + np.angle(x_node * np.exp(-1j * theta_seed))
    fvals = F.interpolator(comp_idx)(theta)
    y_proj = F.boundary_point(comp_idx, theta)
    dist = np.hypot(np.abs(x_node - R * np.exp(1j * theta)),
                    np.abs(zeta[..., 2] / zeta[..., 0] - y_proj))
    if np.max(dist) > 10 * eps * max(1.0, R):
        raise GeometryError(
            f"tube node too far from the boundary (distance "
            f"{float(np.max(dist)):.2e} at eps={eps})")
    return fvals / zeta[..., 0]


def default_connectors(curve: CurveDomain, trace: BoundaryTrace):
    """Connector geometry (two variants per component r >= 1)."""
    out = {}
    for r in range(1, len(trace.components)):
        out[r] = build_connectors(curve, trace, r, variants=(0, 1))
    return out
