"""Curve-domain geometry: charts and lifts, boundary tracing with monodromy,
barrier-line intersections, and connector paths between boundary components.

The domain cut is the fixed one-parameter family
    rho(z) = (|z1|^2 - R^2 |z0|^2) / |z|^2,
so the boundary is the fiber of the chart coordinate x = z1/z0 over the
circle |x| = R and tracing reduces to root continuation around that circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .algebra import HomPoly3, PolynomialError
from .roots import all_roots, min_separation

TWO_PI = 2 * np.pi


class GeometryError(ValueError):
    pass


class TransversalityError(GeometryError):
    pass


# ---------------------------------------------------------------------------
# projective points


@dataclass(frozen=True)
class ProjectivePoint:
    """A nonzero representative in C^3 with a normalization tag.

    tags: 'chart' (z0 == 1), 'sphere' (|z| == 1), 'plane' (barrier-plane
    normalized, no pointwise constraint checked here).
    """

    rep: np.ndarray
    tag: str = "chart"

    def __post_init__(self):
        rep = np.asarray(self.rep, dtype=complex).reshape(3)
        object.__setattr__(self, "rep", rep)
        if not np.any(rep):
            raise GeometryError("projective point needs a nonzero representative")
        if self.tag == "chart" and rep[0] != 1:
            raise GeometryError("chart tag requires z0 == 1")
        if self.tag == "sphere" and abs(np.linalg.norm(rep) - 1) > 1e-12:
            raise GeometryError("sphere tag requires |z| == 1")
        if self.tag not in ("chart", "sphere", "plane"):
            raise GeometryError(f"unknown tag {self.tag!r}")

    @classmethod
    def from_chart(cls, x, y):
        return cls(np.array([1.0, x, y], dtype=complex), "chart")

    @property
    def x(self):
        if self.rep[0] == 0:
            raise GeometryError("chart coordinate undefined at infinity")
        return self.rep[1] / self.rep[0]

    @property
    def y(self):
        if self.rep[0] == 0:
            raise GeometryError("chart coordinate undefined at infinity")
        return self.rep[2] / self.rep[0]

    def sphere(self):
        """Unit-norm lift with positive real scaling (phase preserved)."""
        return ProjectivePoint(self.rep / np.linalg.norm(self.rep), "sphere")


def sphere_lift_from_chart(x, y):
    """Unit lift of the chart point (1, x, y) with z0 real positive.

    Vectorized over x, y.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    ones = np.ones_like(x)
    v = np.stack(np.broadcast_arrays(ones, x, y), axis=-1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# curve domain


@dataclass
class CurveDomain:
    """Smooth projective curve P = 0 with the chart-radius cut |x| < R."""

    P: HomPoly3
    radius: float
    orientation: int = 1
    infinity_points: list = field(default_factory=list)
    reference_points: list = field(default_factory=list)
    _branch_points: np.ndarray | None = None

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("cut radius must be positive")
        if not self.infinity_points:
            self.infinity_points = infinity_points(self.P)

    @property
    def degree(self):
        return self.P.degree

    def rho(self, z):
        """Homogeneity-0 cut function; negative inside the domain."""
        z = np.asarray(z, dtype=complex)
        n2 = np.sum(np.abs(z) ** 2, axis=-1)
        return (np.abs(z[..., 1]) ** 2
                - self.radius**2 * np.abs(z[..., 0]) ** 2) / n2

    def y_poly_coeffs(self, x):
        """Coefficients (highest first) of y -> P(1, x, y), vectorized in x."""
        x = np.asarray(x, dtype=complex)
        d = self.degree
        coeffs = np.zeros((d + 1,) + x.shape, dtype=complex)
        for (i, j, k), c in self.P.coeffs.items():
            coeffs[d - k] += c * x**j
        return coeffs

    def branch_points(self):
        """x locations where the fiber of the chart projection degenerates."""
        if self._branch_points is None:
            self._branch_points = _compute_branch_points(self.P)
        return self._branch_points


def infinity_points(p: HomPoly3):
    """Curve points on the line z0 = 0, with multiplicity; total = degree."""
    d = p.degree
    # binary form P(0, z1, z2) = sum b_k z1^(d-k) z2^k
    b = np.zeros(d + 1, dtype=complex)
    for (i, j, k), c in p.coeffs.items():
        if i == 0:
            b[k] += c
    scale = max(np.max(np.abs(b)), 1e-300)
    if scale < 1e-200:
        raise GeometryError("curve contains the line z0 = 0")
    # roots in t = z2/z1; leading-coefficient drops give [0:0:1]
    pts = []
    coeffs = b[::-1].copy()  # highest power of t first
    n_drop = 0
    while coeffs.size > 1 and abs(coeffs[0]) <= 1e-14 * scale:
        coeffs = coeffs[1:]
        n_drop += 1
    for _ in range(n_drop):
        pts.append(ProjectivePoint(np.array([0, 0, 1], dtype=complex), "plane"))
    if coeffs.size > 1:
        for t in all_roots(coeffs):
            pts.append(ProjectivePoint(np.array([0, 1, t], dtype=complex), "plane"))
    if len(pts) != d:
        raise GeometryError("points at infinity do not count to the degree")
    return pts


def _compute_branch_points(p: HomPoly3):
    """Roots of the y-discriminant of P(1, x, y); exact via sympy resultant."""
    import sympy

    x, y = sympy.symbols("x y")
    expr = 0
    for (i, j, k), c in p.coeffs.items():
        cc = sympy.nsimplify(c.real) + sympy.I * sympy.nsimplify(c.imag)
        expr += cc * x**j * y**k
    poly_y = sympy.Poly(expr, y)
    if poly_y.degree() < 2:
        return np.zeros(0, dtype=complex)
    disc = sympy.discriminant(poly_y.as_expr(), y)
    disc_poly = sympy.Poly(sympy.expand(disc), x)
    if disc_poly.degree() < 1:
        return np.zeros(0, dtype=complex)
    disc_poly = disc_poly.sqf_part()  # exact dedupe of multiple roots
    coeffs = np.array([complex(c) for c in disc_poly.all_coeffs()], dtype=complex)
    nz = np.abs(coeffs) > 1e-14 * np.max(np.abs(coeffs))
    first = int(np.argmax(nz))
    coeffs = coeffs[first:]
    if coeffs.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.unique(np.round(all_roots(coeffs), 12))


# ---------------------------------------------------------------------------
# fibers and continuation


def fiber_over_x(curve: CurveDomain, x):
    """All y with P(1, x, y) = 0, plus a degeneracy/branch report.

    Returns (roots, info) with info carrying 'degenerate' (leading
    coefficient vanished, reduced count) and 'separation'.
    """
    coeffs = curve.y_poly_coeffs(complex(x))
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)
    degenerate = False
    while coeffs.size > 1 and abs(coeffs[0]) <= 1e-13 * scale:
        coeffs = coeffs[1:]
        degenerate = True
    if coeffs.size <= 1:
        raise GeometryError(f"fiber over x={x} is empty or the whole line")
    roots = all_roots(coeffs)
    roots = roots[np.lexsort((np.round(roots.imag, 9), np.round(roots.real, 9)))]
    info = {
        "degenerate": degenerate,
        "separation": min_separation(roots),
        "residual": float(np.max(np.abs(_polyval_vec(coeffs, roots)))) / scale,
    }
    return roots, info


def _polyval_vec(coeffs, x):
    r = np.zeros_like(x) + coeffs[0]
    for c in coeffs[1:]:
        r = r * x + c
    return r


def _fiber_raw(curve, x):
    coeffs = curve.y_poly_coeffs(complex(x))
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)
    if abs(coeffs[0]) <= 1e-13 * scale:
        raise GeometryError(f"degenerate fiber during continuation at x={x}")
    return all_roots(coeffs)


def _match(prev, cand):
    cost = np.abs(prev[:, None] - cand[None, :])
    _, col = linear_sum_assignment(cost)
    return cand[col]


def _continue_step(curve, y, x0, x1, depth=24):
    """One continuation step of the full fiber, bisecting on ambiguity."""
    cand = _fiber_raw(curve, x1)
    matched = _match(y, cand)
    move = float(np.max(np.abs(matched - y)))
    sep = min_separation(cand)
    if y.size > 1 and sep < 10 * move:
        if depth <= 0:
            raise GeometryError(
                f"continuation ambiguity near x={x1} (separation {sep:.3e})")
        xm = 0.5 * (x0 + x1)
        y = _continue_step(curve, y, x0, xm, depth - 1)
        return _continue_step(curve, y, xm, x1, depth - 1)
    return matched


def continue_fiber(curve: CurveDomain, x_path, y_start):
    """Continue the full ordered fiber along a sampled x path."""
    y = np.asarray(y_start, dtype=complex).copy()
    for x0, x1 in zip(x_path[:-1], x_path[1:]):
        y = _continue_step(curve, y, x0, x1)
    return y


def continue_fiber_collect(curve: CurveDomain, x_path, y_start):
    """Like continue_fiber but returns the fiber at every path sample."""
    y = np.asarray(y_start, dtype=complex).copy()
    out = [y.copy()]
    for x0, x1 in zip(x_path[:-1], x_path[1:]):
        y = _continue_step(curve, y, x0, x1)
        out.append(y.copy())
    return np.array(out)


# ---------------------------------------------------------------------------
# boundary tracing


@dataclass
class TraceComponent:
    n_r: int
    theta: np.ndarray        # uniform grid on [0, 2*pi*n_r)
    x: np.ndarray            # R * exp(i*theta)
    y: np.ndarray
    sphere: np.ndarray       # (N, 3) unit lifts, z0 real positive
    tangent: np.ndarray      # (N, 2): d(x, y)/dtheta in the chart
    weight: np.ndarray       # arclength weights |tangent| * dtheta
    cycle: tuple             # sheet indices visited, starting sheet first

    @property
    def dtheta(self):
        return TWO_PI * self.n_r / self.theta.size


@dataclass
class BoundaryTrace:
    curve: CurveDomain
    n_theta: int             # samples per covering of the circle
    components: list
    permutation: tuple       # monodromy of the full circle
    fiber_start: np.ndarray  # ordered fiber over x = R

    @property
    def total_covering(self):
        return sum(c.n_r for c in self.components)


def _cycles(perm):
    seen = set()
    cycles = []
    for s in range(len(perm)):
        if s in seen:
            continue
        cyc = [s]
        seen.add(s)
        t = perm[s]
        while t != s:
            cyc.append(t)
            seen.add(t)
            t = perm[t]
        cycles.append(tuple(cyc))
    cycles.sort(key=lambda c: c[0])
    return cycles


def trace_boundary(curve: CurveDomain, n_theta: int) -> BoundaryTrace:
    """Continue the chart fiber around |x| = R and split it into components.

    The monodromy permutation is composed at theta = 2*pi; its cycles are
    the boundary components, each parametrized over [0, 2*pi*n_r).
    """
    R = curve.radius
    d = curve.degree

    bp = curve.branch_points()
    if bp.size:
        dist = np.abs(np.abs(bp) - R)
        if np.min(dist) < 1e-3 * R:
            worst = bp[int(np.argmin(dist))]
            raise GeometryError(
                f"branch point {worst} too close to the circle |x|={R}; "
                f"perturb the radius by ~{2e-3 * R:.2e}")

    theta = TWO_PI * np.arange(n_theta) / n_theta
    x_ring = R * np.exp(1j * theta)

    y0 = _fiber_raw(curve, x_ring[0])
    y0 = y0[np.lexsort((np.round(y0.imag, 9), np.round(y0.real, 9)))]

    # march around the circle, keeping the fiber at every grid angle
    rows = [y0.copy()]
    y = y0.copy()
    for k in range(n_theta):
        x_next = x_ring[(k + 1) % n_theta] if k + 1 < n_theta else x_ring[0]
        y = _continue_step(curve, y, x_ring[k], x_next)
        rows.append(y.copy())
    y_grid = np.array(rows[:-1])           # (n_theta, d) fiber on the grid
    y_loop = rows[-1]                      # continued fiber back at theta=0

    cost = np.abs(y_loop[:, None] - y0[None, :])
    _, col = linear_sum_assignment(cost)
    if np.max(cost[np.arange(d), col]) > 1e-8 * max(1.0, float(np.max(np.abs(y0)))):
        raise GeometryError("monodromy loop did not close onto the start fiber")
    perm = tuple(int(c) for c in col)

    grad = curve.P.grad  # for tangents and the smoothness check
    components = []
    for cyc in _cycles(perm):
        n_r = len(cyc)
        th = TWO_PI * np.arange(n_r * n_theta) / n_theta
        xs = R * np.exp(1j * th)
        ys = np.concatenate([y_grid[:, s] for s in cyc])
        pts = np.stack([np.ones_like(xs), xs, ys], axis=-1)
        g = grad(pts)
        gnorm = np.linalg.norm(g, axis=-1)
        if np.min(gnorm) < 1e-8:
            raise GeometryError("curve is singular along the traced boundary")
        py = g[..., 2]
        if np.min(np.abs(py)) < 1e-10:
            raise GeometryError("chart projection degenerates on the boundary")
        dx = 1j * xs
        dy = -g[..., 1] / py * dx
        tangent = np.stack([dx, dy], axis=-1)
        dtheta = TWO_PI / n_theta
        weight = np.abs(np.linalg.norm(tangent, axis=-1)) * dtheta
        sph = sphere_lift_from_chart(xs, ys)
        comp = TraceComponent(n_r=n_r, theta=th, x=xs, y=ys, sphere=sph,
                              tangent=tangent, weight=weight, cycle=cyc)
        _validate_component(curve, comp)
        components.append(comp)

    return BoundaryTrace(curve=curve, n_theta=n_theta, components=components,
                         permutation=perm, fiber_start=y0)


def _validate_component(curve, comp):
    pts = np.stack([np.ones_like(comp.x), comp.x, comp.y], axis=-1)
    scale = max(1.0, float(np.max(np.abs(pts))) ** curve.degree)
    pres = np.max(np.abs(curve.P.eval(pts))) / scale
    if pres > 1e-11:
        raise GeometryError(f"traced samples off the curve (|P| ~ {pres:.2e})")
    rres = np.max(np.abs(curve.rho(pts)))
    if rres > 1e-11:
        raise GeometryError(f"traced samples off the cut circle (|rho| ~ {rres:.2e})")
    sres = np.max(np.abs(curve.rho(comp.sphere) - curve.rho(pts)))
    if sres > 1e-12:
        raise GeometryError("sphere lifts disagree with chart points under rho")


# ---------------------------------------------------------------------------
# reference points in the removed regions


def attach_reference_points(curve: CurveDomain, trace: BoundaryTrace,
                            factor: float = 2.0):
    """Default reference point per component: continue the component's start
    sheet outward to |x| = factor*R at a component-specific angle."""
    R = curve.radius
    m = len(trace.components)
    refs = []
    bp = curve.branch_points()
    for r, comp in enumerate(trace.components):
        alpha = TWO_PI * r / m
        # outward path: along the boundary to angle alpha, then radially out
        n_arc = max(16, trace.n_theta // 4)
        arc = R * np.exp(1j * np.linspace(0.0, alpha, n_arc))
        ray = np.linspace(R, factor * R, 64) * np.exp(1j * alpha)
        path = np.concatenate([arc, ray[1:]])
        if bp.size and np.min(np.abs(np.abs(bp) - R)) > 0:
            outside = bp[np.abs(bp) > R]
            if outside.size:
                dmin = min(_path_clearance(path, b) for b in outside)
                if dmin < 0.05 * R:
                    raise GeometryError(
                        "default reference-point ray passes a branch point; "
                        "supply reference points explicitly")
        y = continue_fiber(curve, path, trace.fiber_start)
        yr = y[comp.cycle[0]]
        p = ProjectivePoint.from_chart(factor * R * np.exp(1j * alpha), yr)
        if curve.rho(p.rep) <= 0 or abs(p.x) <= R:
            raise GeometryError("reference point landed inside the domain")
        refs.append(p)
    curve.reference_points = refs
    return refs


def _path_clearance(path, point):
    return float(np.min(np.abs(np.asarray(path) - point)))


# ---------------------------------------------------------------------------
# barrier lines and intersection sets


@dataclass
class IntersectionSet:
    """The d points cut out of the curve by a barrier line through w.

    Lifts are plane-normalized: every point is w + tau*v with R_vec . v = 0
    and R_vec . w = 0, so the barrier linear form F(w, zeta) = R_vec . zeta
    is shared by all members.
    """

    w: ProjectivePoint
    R_vec: np.ndarray
    direction: np.ndarray
    taus: np.ndarray
    points: np.ndarray        # (d, 3) plane-normalized lifts, w first
    x_values: np.ndarray
    min_root_separation: float
    min_x_separation: float
    inside_margin: float
    degree_drop: bool
    residual: float

    @property
    def d(self):
        return self.points.shape[0]


def intersect_line(curve: CurveDomain, w: ProjectivePoint,
                   R_vec) -> IntersectionSet:
    """Intersect the projective line {R_vec . zeta = 0} through w with the
    curve; requires R_vec . w = 0."""
    R_vec = np.asarray(R_vec, dtype=complex).reshape(3)
    wrep = w.rep
    if abs(R_vec @ wrep) > 1e-10 * np.linalg.norm(R_vec) * np.linalg.norm(wrep):
        raise GeometryError("barrier vector must annihilate w (R . w = 0)")
    v = np.cross(R_vec, wrep)
    nv = np.linalg.norm(v)
    if nv < 1e-12 * np.linalg.norm(R_vec) * np.linalg.norm(wrep):
        raise GeometryError("barrier vector parallel to w; no line direction")
    v = v / nv

    d = curve.degree
    # coefficients of tau -> P(w + tau v) by FFT interpolation on d+1 nodes
    nodes = np.exp(2j * np.pi * np.arange(d + 1) / (d + 1))
    vals = curve.P.eval(wrep[None, :] + nodes[:, None] * v[None, :])
    coeffs = (np.fft.fft(vals) / (d + 1))[::-1]  # highest power first
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)

    degree_drop = abs(coeffs[0]) <= 1e-10 * scale
    work = coeffs.copy()
    while work.size > 1 and abs(work[0]) <= 1e-10 * scale:
        work = work[1:]
    if abs(work[-1]) > 1e-9 * scale:
        raise GeometryError("w is not on the curve (P(w) != 0)")
    taus_other = all_roots(work[:-1]) if work.size > 2 else np.zeros(0, complex)

    # Newton polish along the line (keeps the plane normalization exact)
    for _ in range(3):
        pts = wrep[None, :] + taus_other[:, None] * v[None, :]
        pv = curve.P.eval(pts)
        gv = curve.P.grad(pts)
        dpv = np.sum(gv * v[None, :], axis=-1)
        ok = np.abs(dpv) > 1e-300
        taus_other = np.where(ok, taus_other - pv / np.where(ok, dpv, 1.0),
                              taus_other)
    order = np.lexsort((np.round(taus_other.imag, 9),
                        np.round(taus_other.real, 9)))
    taus = np.concatenate([[0.0 + 0.0j], taus_other[order]])
    points = wrep[None, :] + taus[:, None] * v[None, :]

    pscale = max(np.max(np.abs(curve.P.eval(points))), 0.0)
    lift_scale = float(np.max(np.linalg.norm(points, axis=-1))) ** d
    residual = float(np.max(np.abs(curve.P.eval(points)))) / max(1.0, lift_scale)

    if np.min(np.abs(points[:, 0])) < 1e-12:
        raise GeometryError("intersection point at infinity of the chart")
    x_values = points[:, 1] / points[:, 0]
    min_root_sep = min_separation(taus) if taus.size > 1 else np.inf
    min_x_sep = min_separation(x_values) if taus.size > 1 else np.inf
    inside_margin = float(np.min(-curve.rho(points)))

    return IntersectionSet(
        w=w, R_vec=R_vec, direction=v, taus=taus, points=points,
        x_values=x_values,
        min_root_separation=float(min_root_sep) if np.isfinite(min_root_sep) else np.inf,
        min_x_separation=float(min_x_sep) if np.isfinite(min_x_sep) else np.inf,
        inside_margin=inside_margin, degree_drop=degree_drop,
        residual=residual)


def choose_barrier(curve: CurveDomain, w: ProjectivePoint, seed: int,
                   min_margin: float = 1e-3, min_separation_tol: float = 1e-3,
                   max_retries: int = 64) -> IntersectionSet:
    """Draw random barrier lines through w until all admissibility conditions
    hold; reports which condition failed most often on exhaustion."""
    if curve.rho(w.rep) >= -min_margin:
        raise GeometryError("probe point is not safely inside the domain")
    failures = {"degree_drop": 0, "root_separation": 0, "x_separation": 0,
                "inside_margin": 0, "residual": 0}
    for attempt in range(max_retries):
        rng = np.random.default_rng((seed, attempt))
        vdraw = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        R_vec = np.cross(w.rep, vdraw)
        nr = np.linalg.norm(R_vec)
        if nr < 1e-8:
            continue
        R_vec = R_vec / nr
        try:
            s = intersect_line(curve, w, R_vec)
        except GeometryError:
            failures["residual"] += 1
            continue
        if s.degree_drop:
            failures["degree_drop"] += 1
        elif s.min_root_separation < min_separation_tol:
            failures["root_separation"] += 1
        elif s.min_x_separation < min_separation_tol:
            failures["x_separation"] += 1
        elif s.inside_margin < min_margin:
            failures["inside_margin"] += 1
        elif s.residual > 1e-10:
            failures["residual"] += 1
        else:
            return s
    raise TransversalityError(
        f"no admissible barrier line after {max_retries} draws; "
        f"failure counts: {failures}")
