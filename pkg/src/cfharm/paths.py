"""Interior connector paths between boundary components.

A connector runs from the first sample of boundary component 0 to the first
sample of component r, staying inside the domain.  Sheets over the chart
disc only communicate around branch points, so the path is assembled from a
hub entry plus a word of elementary loops whose monodromy moves the start
sheet to the target sheet.  Nodes are Gauss-Legendre per analytic piece,
which keeps connector line integrals accurate to ~1e-12.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import (CurveDomain, BoundaryTrace, GeometryError,
                       continue_fiber, _continue_step)

TWO_PI = 2 * np.pi
GAUSS_N = 32


@dataclass(frozen=True)
class Piece:
    """One analytic piece of an x-plane path, parametrized over t in [0,1]."""

    kind: str      # 'seg' or 'arc'
    a: complex     # seg: start point; arc: center
    b: complex     # seg: end point; arc: unused
    radius: float = 0.0
    ang0: float = 0.0
    ang1: float = 0.0

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "seg":
            x = self.a + (self.b - self.a) * t
            dx = np.full_like(t, self.b - self.a, dtype=complex)
        else:
            ang = self.ang0 + (self.ang1 - self.ang0) * t
            x = self.a + self.radius * np.exp(1j * ang)
            dx = 1j * self.radius * (self.ang1 - self.ang0) * np.exp(1j * ang)
        return x, dx

    def reversed(self):
        if self.kind == "seg":
            return Piece("seg", self.b, self.a)
        return Piece("arc", self.a, self.b, self.radius, self.ang1, self.ang0)


def _seg(a, b):
    return Piece("seg", complex(a), complex(b))


def _arcs(center, radius, ang0, ang1):
    """Arc split into sub-pieces no longer than pi/2."""
    n = max(1, int(np.ceil(abs(ang1 - ang0) / (np.pi / 2))))
    cuts = np.linspace(ang0, ang1, n + 1)
    return [Piece("arc", complex(center), 0j, float(radius),
                  float(c0), float(c1)) for c0, c1 in zip(cuts[:-1], cuts[1:])]


def _piece_clearance(piece, points):
    if points.size == 0:
        return np.inf
    x, _ = piece.eval(np.linspace(0, 1, 64))
    return float(np.min(np.abs(x[:, None] - points[None, :])))


def _path_clearance(pieces, points):
    return min((_piece_clearance(p, points) for p in pieces), default=np.inf)


@dataclass
class ConnectorPath:
    """Sampled connector with quadrature nodes ready for line integrals."""

    component: int
    variant: int
    pieces: list
    x: np.ndarray        # chart x at nodes
    y: np.ndarray        # continued sheet value at nodes
    dx: np.ndarray       # dx/dt at nodes (piece parametrization)
    dy: np.ndarray       # dy/dt at nodes
    weights: np.ndarray  # Gauss weights in t, one block per piece
    start_sheet: int
    end_sheet: int

    def integrate(self, form):
        """Integral of a 1-form; form(x, y, dx, dy) -> integrand density."""
        return np.sum(form(self.x, self.y, self.dx, self.dy) * self.weights)


class _LoopSystem:
    """Hub point, elementary loops around interior branch points, and their
    sheet permutations, shared by all connectors of one trace."""

    def __init__(self, curve: CurveDomain, trace: BoundaryTrace):
        self.curve = curve
        self.trace = trace
        R = curve.radius
        bp = curve.branch_points()
        self.bp_in = bp[np.abs(bp) < R] if bp.size else np.zeros(0, complex)

        # hub choice: maximize clearance of the entry (radial + hub arc span)
        best = None
        for rh_fac in (0.75, 0.6, 0.85, 0.5, 0.7):
            rh = rh_fac * R
            entry_clear = min(
                _piece_clearance(_seg(R, rh), self.bp_in),
                min((_piece_clearance(p, self.bp_in)
                     for p in _arcs(0, rh, 0, TWO_PI)), default=np.inf))
            if best is None or entry_clear > best[0]:
                best = (entry_clear, rh)
        clear, self.r_hub = best
        if self.bp_in.size and clear < 0.02 * R:
            raise GeometryError("no clear hub circle for connector paths")

        angs = TWO_PI * np.arange(16) / 16
        scores = [min((float(np.min(np.abs(self.r_hub * np.exp(1j * a)
                                            - self.bp_in)))
                       if self.bp_in.size else np.inf), np.inf)
                  for a in angs]
        self.alpha_hub = float(angs[int(np.argmax(scores))])
        self.x_hub = self.r_hub * np.exp(1j * self.alpha_hub)

        self.entry = [_seg(R, self.r_hub)] + _arcs(0, self.r_hub, 0.0,
                                                   self.alpha_hub)

        # fiber at the hub, ordered by sheet label
        entry_x = _dense_path(self.entry)
        self.fiber_hub = continue_fiber(curve, entry_x, trace.fiber_start)

        self.loops = []
        self.perms = []
        for b in self.bp_in:
            u = self.x_hub - b
            u = u / abs(u)
            others = self.bp_in[np.abs(self.bp_in - b) > 1e-12]
            lim = min([abs(b - o) for o in others] + [R - abs(b),
                                                      abs(self.x_hub - b)])
            rad = 0.45 * lim
            pstart = b + rad * u
            ang = float(np.angle(u))
            pieces = ([_seg(self.x_hub, pstart)]
                      + _arcs(b, rad, ang, ang + TWO_PI)
                      + [_seg(pstart, self.x_hub)])
            if _path_clearance([pieces[0]], others) < 0.8 * rad:
                raise GeometryError(
                    "branch points too entangled for straight elementary loops")
            self.loops.append(pieces)
            yl = continue_fiber(curve, _dense_path(pieces), self.fiber_hub)
            cost = np.abs(yl[:, None] - self.fiber_hub[None, :])
            _, col = linear_sum_assignment(cost)
            self.perms.append(tuple(int(c) for c in col))

    def word_pieces(self, word):
        out = []
        for idx, sign in word:
            pieces = self.loops[idx]
            if sign < 0:
                pieces = [p.reversed() for p in reversed(pieces)]
            out.extend(pieces)
        return out

    def apply_word(self, sheet, word):
        for idx, sign in word:
            perm = self.perms[idx]
            if sign > 0:
                sheet = perm[sheet]
            else:
                sheet = perm.index(sheet)
        return sheet

    def find_word(self, s_from, s_to):
        """Shortest generator word mapping one sheet to another (BFS)."""
        if s_from == s_to:
            return []
        frontier = {s_from: []}
        seen = {s_from}
        for _ in range(4 * len(self.trace.fiber_start) + 4):
            nxt = {}
            for s, word in frontier.items():
                for i, perm in enumerate(self.perms):
                    for sign, t in ((1, perm[s]), (-1, perm.index(s))):
                        if t == s_to:
                            return word + [(i, sign)]
                        if t not in seen:
                            seen.add(t)
                            nxt[t] = word + [(i, sign)]
            if not nxt:
                break
            frontier = nxt
        raise GeometryError(
            f"sheets {s_from} and {s_to} are not connected by interior loops")

    def closed_word(self, sheet):
        """A homotopically nontrivial word fixing the sheet, if loops exist."""
        if not self.perms:
            return None
        for i, perm in enumerate(self.perms):
            length = 1
            t = perm[sheet]
            while t != sheet:
                t = perm[t]
                length += 1
            return [(i, 1)] * length
        return None


def _dense_path(pieces, per_piece=48):
    xs = []
    for k, p in enumerate(pieces):
        t = np.linspace(0, 1, per_piece)
        x, _ = p.eval(t)
        xs.append(x if k == 0 else x[1:])
    return np.concatenate(xs)


def build_connectors(curve: CurveDomain, trace: BoundaryTrace,
                     component: int, variants=(0, 1)):
    """Connector paths (primary and alternate) from component 0 to the given
    component; the alternate differs by a closed interior loop, which makes
    the pair a path-independence probe."""
    system = _LoopSystem(curve, trace)
    s_a = trace.components[0].cycle[0]
    s_b = trace.components[component].cycle[0]
    word = system.find_word(s_a, s_b)

    out = []
    for variant in variants:
        w = list(word)
        mid_pieces = []
        if variant == 1:
            closed = system.closed_word(s_b)
            if closed is not None:
                w = w + closed
            else:
                # unramified chart: any interior loop is monodromy-trivial,
                # but a hub round trip still gives a distinct sampled path
                rr = 0.03 * curve.radius
                mid_pieces = _arcs(system.x_hub + rr, rr, np.pi, 3 * np.pi)
        pieces = (list(system.entry) + system.word_pieces(w) + mid_pieces
                  + [p.reversed() for p in reversed(system.entry)])
        out.append(_sample_connector(curve, trace, component, variant,
                                     pieces, s_a, s_b))
    return out


def _sample_connector(curve, trace, component, variant, pieces, s_a, s_b):
    gt, gw = np.polynomial.legendre.leggauss(GAUSS_N)
    gt = 0.5 * (gt + 1.0)
    gw = 0.5 * gw

    xs, ys, dxs, wts = [], [], [], []
    fiber = trace.fiber_start.copy()
    x_prev = None
    for p in pieces:
        tgrid = np.unique(np.concatenate([np.linspace(0.0, 1.0, 17), gt]))
        idx = np.searchsorted(tgrid, gt)
        xg, _ = p.eval(tgrid)
        if x_prev is not None and abs(xg[0] - x_prev) > 1e-13:
            fiber = _continue_step(curve, fiber, x_prev, xg[0])
        yg = np.empty(tgrid.size, dtype=complex)
        yg[0] = fiber[s_a]
        for k in range(tgrid.size - 1):
            fiber = _continue_step(curve, fiber, xg[k], xg[k + 1])
            yg[k + 1] = fiber[s_a]
        xn, dxn = p.eval(gt)
        xs.append(xn)
        ys.append(yg[idx])
        dxs.append(dxn)
        wts.append(gw.copy())
        x_prev = xg[-1]

    x = np.concatenate(xs)
    y = np.concatenate(ys)
    dx = np.concatenate(dxs)
    weights = np.concatenate(wts)

    # endpoint check: must land on the target component's first trace sample
    end_y = fiber[s_a]
    target = trace.components[component].y[0]
    scale = max(1.0, float(np.max(np.abs(trace.fiber_start))))
    if abs(end_y - target) > 1e-7 * scale:
        raise GeometryError(
            f"connector landed on the wrong sheet (|dy| = {abs(end_y - target):.2e})")

    pts = np.stack([np.ones_like(x), x, y], axis=-1)
    g = curve.P.grad(pts)
    dy = -g[..., 1] / g[..., 2] * dx

    return ConnectorPath(component=component, variant=variant, pieces=pieces,
                         x=x, y=y, dx=dx, dy=dy, weights=weights,
                         start_sheet=s_a, end_sheet=s_b)
