"""Parametric closed curves and panelized boundary meshes.

Four shapes are supported: circle, ellipse, rounded square and rounded L.
The rounded shapes are built from exact straight segments joined by circular
corner arcs, parameterized proportionally to arc length; panels are aligned
with the segment/arc junctions so that no quadrature panel crosses a
curvature jump.  All curves are closed, non-self-intersecting and positively
oriented (outward normal = rotated tangent).
"""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss


class Curve:
    """Closed parametric curve t in [0, 2pi) -> R^2 with exact inside test."""

    def __init__(self, shape, point, dpoint, ddpoint, inside, perimeter,
                 junctions=None, area=None):
        self.shape = shape
        self.point = point
        self.dpoint = dpoint
        self.ddpoint = ddpoint
        self.inside = inside
        self.perimeter = perimeter
        # parameter values where the parameterization is only piecewise analytic
        self.junctions = np.asarray(junctions if junctions is not None else [])
        self.area = area

    def normal(self, t):
        """Unit outward normal (CCW orientation: (y', -x')/|gamma'|)."""
        d = self.dpoint(t)
        sp = np.hypot(d[..., 0], d[..., 1])
        return np.stack([d[..., 1] / sp, -d[..., 0] / sp], axis=-1)

    def curvature(self, t):
        d = self.dpoint(t)
        dd = self.ddpoint(t)
        sp = np.hypot(d[..., 0], d[..., 1])
        return (d[..., 0] * dd[..., 1] - d[..., 1] * dd[..., 0]) / sp**3


def _circle(radius, center):
    cx, cy = center

    def point(t):
        t = np.asarray(t, dtype=float)
        return np.stack([cx + radius * np.cos(t), cy + radius * np.sin(t)], axis=-1)

    def dpoint(t):
        t = np.asarray(t, dtype=float)
        return np.stack([-radius * np.sin(t), radius * np.cos(t)], axis=-1)

    def ddpoint(t):
        t = np.asarray(t, dtype=float)
        return np.stack([-radius * np.cos(t), -radius * np.sin(t)], axis=-1)

    def inside(p):
        p = np.asarray(p, dtype=float)
        return (p[..., 0] - cx) ** 2 + (p[..., 1] - cy) ** 2 < radius**2

    return Curve("circle", point, dpoint, ddpoint, inside,
                 2.0 * math.pi * radius, area=math.pi * radius**2)


def _ellipse(a, b, center):
    cx, cy = center

    def point(t):
        t = np.asarray(t, dtype=float)
        return np.stack([cx + a * np.cos(t), cy + b * np.sin(t)], axis=-1)

    def dpoint(t):
        t = np.asarray(t, dtype=float)
        return np.stack([-a * np.sin(t), b * np.cos(t)], axis=-1)

    def ddpoint(t):
        t = np.asarray(t, dtype=float)
        return np.stack([-a * np.cos(t), -b * np.sin(t)], axis=-1)

    def inside(p):
        p = np.asarray(p, dtype=float)
        return ((p[..., 0] - cx) / a) ** 2 + ((p[..., 1] - cy) / b) ** 2 < 1.0

    # perimeter by dense Gauss quadrature of |gamma'|
    tg, wg = leggauss(64)
    pieces = np.linspace(0.0, 2.0 * math.pi, 33)
    per = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        tt = 0.5 * (hi - lo) * tg + 0.5 * (hi + lo)
        sp = np.hypot(a * np.sin(tt), b * np.cos(tt))
        per += 0.5 * (hi - lo) * np.dot(wg, sp)
    return Curve("ellipse", point, dpoint, ddpoint, inside, per,
                 area=math.pi * a * b)


class _PiecewiseCurve:
    """Segments + arcs, parameterized proportionally to arc length."""

    def __init__(self, pieces):
        self.pieces = pieces
        lens = []
        for kind, *geo in pieces:
            if kind == "line":
                p0, p1 = geo
                lens.append(np.hypot(*(np.subtract(p1, p0))))
            else:
                _, rho, th0, th1 = geo
                lens.append(abs(th1 - th0) * rho)
        self.lens = np.asarray(lens)
        self.cum = np.concatenate([[0.0], np.cumsum(self.lens)])
        self.total = self.cum[-1]

    def junction_params(self):
        return 2.0 * math.pi * self.cum[:-1] / self.total

    def _locate(self, t):
        s = (np.mod(np.asarray(t, dtype=float), 2.0 * math.pi)
             / (2.0 * math.pi) * self.total)
        idx = np.clip(np.searchsorted(self.cum, s, side="right") - 1,
                      0, len(self.pieces) - 1)
        return s, idx

    def _eval(self, t, order):
        s, idx = self._locate(t)
        s = np.atleast_1d(s)
        idx = np.atleast_1d(idx)
        out = np.empty(s.shape + (2,))
        # d(arclength)/dt is the constant total/(2 pi)
        sp = self.total / (2.0 * math.pi)
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if not m.any():
                continue
            u = s[m] - self.cum[i]
            kind, *geo = piece
            if kind == "line":
                p0, p1 = np.asarray(geo[0]), np.asarray(geo[1])
                tang = (p1 - p0) / self.lens[i]
                if order == 0:
                    out[m] = p0 + u[:, None] * tang
                elif order == 1:
                    out[m] = sp * tang
                else:
                    out[m] = 0.0
            else:
                ctr, rho, th0, th1 = geo
                sgn = 1.0 if th1 >= th0 else -1.0
                th = th0 + sgn * u / rho
                if order == 0:
                    out[m] = np.stack([ctr[0] + rho * np.cos(th),
                                       ctr[1] + rho * np.sin(th)], axis=-1)
                elif order == 1:
                    out[m] = sp * sgn * np.stack([-np.sin(th), np.cos(th)], axis=-1)
                else:
                    out[m] = -(sp**2 / rho) * np.stack([np.cos(th), np.sin(th)],
                                                       axis=-1)
        if np.ndim(t) == 0:
            return out[0]
        return out


def _rounded_square(side, corner_radius, center):
    a = 0.5 * side
    rho = corner_radius
    if not 0.0 < rho < a:
        raise ValueError("corner radius must be in (0, side/2)")
    cx, cy = center
    e = a - rho
    pieces = [
        ("line", (cx + a, cy - e), (cx + a, cy + e)),
        ("arc", (cx + e, cy + e), rho, 0.0, 0.5 * math.pi),
        ("line", (cx + e, cy + a), (cx - e, cy + a)),
        ("arc", (cx - e, cy + e), rho, 0.5 * math.pi, math.pi),
        ("line", (cx - a, cy + e), (cx - a, cy - e)),
        ("arc", (cx - e, cy - e), rho, math.pi, 1.5 * math.pi),
        ("line", (cx - e, cy - a), (cx + e, cy - a)),
        ("arc", (cx + e, cy - e), rho, 1.5 * math.pi, 2.0 * math.pi),
    ]
    pw = _PiecewiseCurve(pieces)

    def inside(p):
        p = np.asarray(p, dtype=float)
        qx = np.abs(p[..., 0] - cx) - e
        qy = np.abs(p[..., 1] - cy) - e
        outer = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        d = outer + np.minimum(np.maximum(qx, qy), 0.0) - rho
        return d < 0.0

    area = side**2 - (4.0 - math.pi) * rho**2
    return Curve("rounded_square", lambda t: pw._eval(t, 0),
                 lambda t: pw._eval(t, 1), lambda t: pw._eval(t, 2),
                 inside, pw.total, junctions=pw.junction_params(), area=area)


def _rounded_l(side, corner_radius, center):
    """L shape: a square of the given side with its upper-right quadrant
    removed, all five convex corners and the reentrant corner filleted."""
    a = 0.5 * side
    rho = corner_radius
    if not 0.0 < rho < 0.5 * a:
        raise ValueError("corner radius must be in (0, side/4)")
    cx, cy = center
    pi = math.pi
    pieces = [
        ("line", (a, -a + rho), (a, -rho)),
        ("arc", (a - rho, -rho), rho, 0.0, 0.5 * pi),
        ("line", (a - rho, 0.0), (rho, 0.0)),
        # reentrant fillet: clockwise arc, adds material at the inner corner
        ("arc", (rho, rho), rho, -0.5 * pi, -pi),
        ("line", (0.0, rho), (0.0, a - rho)),
        ("arc", (-rho, a - rho), rho, 0.0, 0.5 * pi),
        ("line", (-rho, a), (-a + rho, a)),
        ("arc", (-a + rho, a - rho), rho, 0.5 * pi, pi),
        ("line", (-a, a - rho), (-a, -a + rho)),
        ("arc", (-a + rho, -a + rho), rho, pi, 1.5 * pi),
        ("line", (-a + rho, -a), (a - rho, -a)),
        ("arc", (a - rho, -a + rho), rho, 1.5 * pi, 2.0 * pi),
    ]
    shifted = []
    for kind, *geo in pieces:
        if kind == "line":
            p0, p1 = geo
            shifted.append((kind, (p0[0] + cx, p0[1] + cy),
                            (p1[0] + cx, p1[1] + cy)))
        else:
            ctr, r_, t0, t1 = geo
            shifted.append((kind, (ctr[0] + cx, ctr[1] + cy), r_, t0, t1))
    pw = _PiecewiseCurve(shifted)

    def inside(p):
        p = np.asarray(p, dtype=float)
        x = p[..., 0] - cx
        y = p[..., 1] - cy
        in_box = (np.abs(x) < a) & (np.abs(y) < a)
        sharp = in_box & ~((x > 0) & (y > 0))
        res = sharp.copy()

        # convex corner pockets: carve where beyond both tangency lines but
        # outside the fillet arc
        def carve(qx, qy, condx, condy):
            pocket = condx & condy
            far = (x - qx) ** 2 + (y - qy) ** 2 >= rho**2
            return pocket & far

        res &= ~carve(a - rho, -rho, x > a - rho, y > -rho)
        res &= ~carve(-rho, a - rho, x > -rho, y > a - rho)
        res &= ~carve(-a + rho, a - rho, x < -a + rho, y > a - rho)
        res &= ~carve(-a + rho, -a + rho, x < -a + rho, y < -a + rho)
        res &= ~carve(a - rho, -a + rho, x > a - rho, y < -a + rho)
        # reentrant fillet adds material inside the removed quadrant
        add = ((x > 0) & (y > 0) & (x < rho) & (y < rho)
               & ((x - rho) ** 2 + (y - rho) ** 2 > rho**2))
        return res | add

    area = 3.0 * a**2 - 4.0 * (1.0 - 0.25 * math.pi) * rho**2
    return Curve("rounded_L", lambda t: pw._eval(t, 0),
                 lambda t: pw._eval(t, 1), lambda t: pw._eval(t, 2),
                 inside, pw.total, junctions=pw.junction_params(), area=area)


def make_curve(shape, **params):
    """Construct one of the supported closed curves.

    shape: "circle" (radius, center), "ellipse" (a, b, center),
    "rounded_square" / "rounded_L" (side, corner_radius, center).
    """
    center = tuple(params.get("center", (0.0, 0.0)))
    if shape == "circle":
        radius = float(params["radius"])
        if radius <= 0:
            raise ValueError("radius must be positive")
        return _circle(radius, center)
    if shape == "ellipse":
        a, b = float(params["a"]), float(params["b"])
        if a <= 0 or b <= 0:
            raise ValueError("semi-axes must be positive")
        return _ellipse(a, b, center)
    if shape == "rounded_square":
        return _rounded_square(float(params["side"]),
                               float(params["corner_radius"]), center)
    if shape == "rounded_L":
        return _rounded_l(float(params["side"]),
                          float(params["corner_radius"]), center)
    raise ValueError(f"unknown shape {shape!r}")


class BoundaryMesh:
    """Panelized curve with Gauss-Legendre nodes, outward normals, weights.

    Panels have (near) equal arc length within each analytic piece of the
    curve.  Node ordering follows the parameterization; weights include the
    arc-length Jacobian so that weights.sum() equals the perimeter.
    """

    def __init__(self, curve, h_b, q_b):
        if not (1 <= q_b <= 16):
            raise ValueError("q_b must be in [1, 16]")
        if h_b >= curve.perimeter / 8:
            raise ValueError("h_b must resolve the curve (>= 8 panels)")
        self.curve = curve
        self.q_b = int(q_b)
        self.h_b = float(h_b)

        # cumulative arc length on a fine parameter grid for inversion
        nfine = 8192
        tf = np.linspace(0.0, 2.0 * math.pi, nfine + 1)
        dp = curve.dpoint(tf)
        spd = np.hypot(dp[:, 0], dp[:, 1])
        # composite trapezoid is plenty for panel *placement*
        ds = 0.5 * (spd[1:] + spd[:-1]) * np.diff(tf)
        cum = np.concatenate([[0.0], np.cumsum(ds)])
        total = cum[-1]

        # analytic pieces: whole curve, or junction-to-junction spans
        if curve.junctions.size:
            tj = np.sort(np.mod(curve.junctions, 2.0 * math.pi))
            spans = [(tj[i], tj[i + 1] if i + 1 < len(tj) else tj[0] + 2 * math.pi)
                     for i in range(len(tj))]
        else:
            spans = [(0.0, 2.0 * math.pi)]

        def arc_of(t):
            return np.interp(t, tf, cum)

        def t_of_arc(s):
            return np.interp(s, cum, tf)

        panel_t = []
        for lo, hi in spans:
            s_lo, s_hi = arc_of(lo), arc_of(hi if hi <= 2 * math.pi else 2 * math.pi)
            if hi > 2 * math.pi:
                s_hi = total + arc_of(hi - 2 * math.pi)
            npan = max(1, int(math.ceil((s_hi - s_lo) / h_b)))
            sgrid = np.linspace(s_lo, s_hi, npan + 1)
            tgrid = np.where(sgrid <= total, t_of_arc(np.minimum(sgrid, total)),
                             2 * math.pi + t_of_arc(sgrid - total))
            tgrid[0], tgrid[-1] = lo, hi
            for i in range(npan):
                panel_t.append((tgrid[i], tgrid[i + 1]))

        gx, gw = leggauss(q_b)
        nodes, normals, weights, tvals, kap = [], [], [], [], []
        panel_lengths = []
        for (t0, t1) in panel_t:
            tt = 0.5 * (t1 - t0) * gx + 0.5 * (t0 + t1)
            p = curve.point(tt)
            d = curve.dpoint(tt)
            spd_n = np.hypot(d[:, 0], d[:, 1])
            nodes.append(p)
            normals.append(np.stack([d[:, 1] / spd_n, -d[:, 0] / spd_n], axis=-1))
            w = gw * spd_n * 0.5 * (t1 - t0)
            weights.append(w)
            tvals.append(np.mod(tt, 2 * math.pi))
            kap.append(curve.curvature(tt))
            panel_lengths.append(w.sum())

        self.panel_t = np.asarray(panel_t)
        self.panel_lengths = np.asarray(panel_lengths)
        self.n_panels = len(panel_t)
        self.nodes = np.concatenate(nodes)
        self.normals = np.concatenate(normals)
        self.weights = np.concatenate(weights)
        self.t = np.concatenate(tvals)
        self.curvature = np.concatenate(kap)
        self.n_nodes = self.nodes.shape[0]

    def upsampled(self, factor=4):
        """Finer Gauss rule on the same panels plus the density interpolation
        matrix mapping panel-wise values from q_b to factor*q_b nodes."""
        q = self.q_b
        qf = factor * q
        gx, _ = leggauss(q)
        gxf, gwf = leggauss(qf)
        # Legendre Vandermonde interpolation q -> qf on [-1, 1]
        V = np.polynomial.legendre.legvander(gx, q - 1)
        Vf = np.polynomial.legendre.legvander(gxf, q - 1)
        P = Vf @ np.linalg.inv(V)

        nodes, normals, weights = [], [], []
        for (t0, t1) in self.panel_t:
            tt = 0.5 * (t1 - t0) * gxf + 0.5 * (t0 + t1)
            p = self.curve.point(tt)
            d = self.curve.dpoint(tt)
            spd = np.hypot(d[:, 0], d[:, 1])
            nodes.append(p)
            normals.append(np.stack([d[:, 1] / spd, -d[:, 0] / spd], axis=-1))
            weights.append(gwf * spd * 0.5 * (t1 - t0))
        interp = np.zeros((self.n_panels * qf, self.n_panels * q))
        for i in range(self.n_panels):
            interp[i * qf:(i + 1) * qf, i * q:(i + 1) * q] = P
        return (np.concatenate(nodes), np.concatenate(normals),
                np.concatenate(weights), interp)

    def panel_of_node(self, i):
        return i // self.q_b


def build_boundary_mesh(curve, h_b, q_b):
    return BoundaryMesh(curve, h_b, q_b)
