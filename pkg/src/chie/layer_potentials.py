"""Single layer potentials S0, S1, S2: off-surface evaluation and QBX-based
on-surface values / normal derivatives with the jump relations.

On-surface evaluation places expansion centers a half panel length off the
surface on both sides (QBX order p = q_b - 1 by default); the principal-value
convention averages the interior and exterior one-sided limits, which by the
jump relations equals the PV integral for these kernels.
"""

import math

import numpy as np

from . import fastsum
from .kernels import KernelKind, TWO_PI

_BETA = 0.5
_UPSAMPLE = 6


class OnSurfaceOps:
    """Dense one-sided Nystrom matrices for a boundary mesh + parameters."""

    def __init__(self, mesh, params, p=None, beta=_BETA, upsample=_UPSAMPLE):
        self.mesh = mesh
        self.params = params
        # p = q_b keeps the one-sided normal-derivative limits at O(h^q_b);
        # the truncated expansion loses one order under differentiation
        self.p = int(mesh.q_b if p is None else p)
        self.beta = beta
        q = mesh.q_b

        plen = mesh.panel_lengths
        rho = beta * np.repeat(plen, q)
        # keep expansion disks inside the local curvature radius
        kap = np.abs(mesh.curvature)
        cap = 0.45 / np.maximum(kap, 1e-300)
        self.warning = bool(np.any(plen[mesh.panel_of_node(
            np.arange(mesh.n_nodes))] > cap))
        rho = np.minimum(rho, cap)
        self.radii = rho

        up_nodes, _, up_w, interp = mesh.upsampled(upsample)
        qf = upsample * q
        self.interp_block = np.ascontiguousarray(interp[:qf, :q])
        self.up_nodes = up_nodes
        self.up_w = up_w
        self.src_panel = np.repeat(np.arange(mesh.n_panels), qf).astype(np.int64)

        lam1, lam2 = params.lambda1, params.lambda2
        self._raw = {}
        # the exterior-side expansion needs two extra orders on convex
        # curves to match the interior side's accuracy
        for side, sgn, p_side in (("interior", -1.0, self.p),
                                  ("exterior", 1.0, self.p + 2)):
            centers = mesh.nodes + sgn * rho[:, None] * mesh.normals
            mats = fastsum.qbx_matrices(
                mesh.nodes, centers, rho, -sgn, up_nodes, up_w,
                self.src_panel, self.interp_block, q, lam1, lam2, p_side)
            self._raw[side] = mats

    def _combine(self, raw, kind, deriv):
        s1, s2, d1, d2 = raw
        lam1, lam2 = self.params.lambda1, self.params.lambda2
        dl = lam1 * lam1 - lam2 * lam2
        a, b = (s1, s2) if not deriv else (d1, d2)
        if kind == KernelKind.G1:
            return -a / TWO_PI
        if kind == KernelKind.G2:
            return -b / TWO_PI
        return -(a - b) / (TWO_PI * dl)

    def matrix(self, kind, deriv=False, side="pv"):
        """Dense (n_b, n_b) matrix of S_kind (or its normal derivative).

        side: 'interior_limit', 'exterior_limit' or 'pv'.  PV normal
        derivatives use the interior limit plus the exact jump identity
        (PV = interior + sigma/2 for S1/S2, = interior for S0), which is
        noticeably more accurate than two-sided averaging on convex curves.
        """
        kind = KernelKind(kind)
        if side in ("pv", "principal_value"):
            m = self._combine(self._raw["interior"], kind, deriv).copy()
            if deriv and kind != KernelKind.G0:
                m[np.diag_indices_from(m)] += 0.5
            return m
        key = {"interior_limit": "interior", "interior": "interior",
               "exterior_limit": "exterior", "exterior": "exterior"}[side]
        return self._combine(self._raw[key], kind, deriv)


_ops_cache = {}


def get_onsurface_ops(mesh, params, p=None):
    key = (id(mesh), params.lambda1, params.lambda2, p)
    ops = _ops_cache.get(key)
    if ops is None or ops.mesh is not mesh:
        ops = OnSurfaceOps(mesh, params, p=p)
        _ops_cache.clear()
        _ops_cache[key] = ops
    return ops


def _min_distance_to_curve(targets, mesh):
    d = targets[:, None, :] - mesh.nodes[None, :, :]
    return np.sqrt((d * d).sum(-1)).min(axis=1)


def eval_layer(kind, density, mesh, targets, params):
    """Direct Nystrom evaluation of S_kind[density] at far targets.

    Raises if any target is within 2 h_b of the surface; use
    eval_layer_near / eval_layer_onsurface there.
    """
    kind = KernelKind(kind)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if np.any(_min_distance_to_curve(targets, mesh) <= 2.0 * mesh.h_b):
        raise ValueError("target within 2 h_b of the surface; "
                         "use the near/on-surface evaluators")
    dens = np.asarray(density, dtype=np.complex128)
    zero = np.zeros_like(dens)
    out = fastsum.layer_value_sweep(
        targets, mesh.nodes, mesh.weights.astype(np.complex128), dens, zero,
        params.lambda1, params.lambda2, 0.0)
    return out[:, int(kind), 0]


def eval_layer_onsurface(kind, derivative, density, mesh, side, params, p=None):
    """On-surface values / normal derivatives of S_kind[density]."""
    ops = get_onsurface_ops(mesh, params, p=p)
    deriv = {"value": False, "normal_derivative": True}[derivative]
    mat = ops.matrix(kind, deriv=deriv, side=side)
    return mat @ np.asarray(density, dtype=np.complex128)


def _panel_coeffs(mesh, density):
    """Per-panel Legendre coefficients of a node-sampled density."""
    q = mesh.q_b
    from numpy.polynomial.legendre import leggauss
    gx, _ = leggauss(q)
    V = np.polynomial.legendre.legvander(gx, q - 1)
    Vinv = np.linalg.inv(V)
    return np.asarray(density).reshape(mesh.n_panels, q) @ Vinv.T


def eval_layer_near(kinds, density, mesh, targets, params, min_depth=0):
    """S_kind[density] at off-surface targets of any distance > 0.

    Panels are recursively bisected in parameter space until each piece is
    shorter than its distance to the target; the density is evaluated from
    its panel-wise Legendre interpolant.  Returns (nt, 3) for G0, G1, G2.
    """
    from numpy.polynomial.legendre import leggauss
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    coeffs = _panel_coeffs(mesh, density)
    qf = max(10, 2 * mesh.q_b)
    gx, gw = leggauss(qf)
    lam1, lam2 = params.lambda1, params.lambda2
    dl = params.lam_delta
    curve = mesh.curve
    out = np.zeros((targets.shape[0], 3), dtype=np.complex128)

    for it, x in enumerate(targets):
        acc = np.zeros(3, dtype=np.complex128)
        for ip in range(mesh.n_panels):
            t0, t1 = mesh.panel_t[ip]
            stack = [(t0, t1, 0)]
            while stack:
                a, b, depth = stack.pop()
                tt = 0.5 * (b - a) * gx + 0.5 * (a + b)
                pts = curve.point(tt)
                dvec = pts - x[None, :]
                dist = np.hypot(dvec[:, 0], dvec[:, 1])
                dp = curve.dpoint(tt)
                spd = np.hypot(dp[:, 0], dp[:, 1])
                plen = spd.mean() * (b - a)
                if dist.min() > plen or depth >= 52:
                    # far enough: fixed Gauss rule on this piece
                    xi = (tt - t0) / (t1 - t0) * 2.0 - 1.0
                    V = np.polynomial.legendre.legvander(xi, mesh.q_b - 1)
                    sig = V @ coeffs[ip]
                    w = 0.5 * (b - a) * gw * spd
                    from .bessel import k0v
                    k0a = k0v(lam1 * dist.astype(np.complex128))
                    k0b = k0v(lam2 * dist.astype(np.complex128))
                    q = w * sig
                    acc[0] += np.sum(-(k0a - k0b) / (TWO_PI * dl) * q)
                    acc[1] += np.sum(-k0a / TWO_PI * q)
                    acc[2] += np.sum(-k0b / TWO_PI * q)
                else:
                    mid = 0.5 * (a + b)
                    stack.append((a, mid, depth + 1))
                    stack.append((mid, b, depth + 1))
        out[it] = acc
    return out


def jump_test_difference(kind, density, mesh, params):
    """(exterior - interior) one-sided normal-derivative limits; by the jump
    relations this equals the density for S1/S2 and vanishes for S0."""
    ext = eval_layer_onsurface(kind, "normal_derivative", density, mesh,
                               "exterior_limit", params)
    inte = eval_layer_onsurface(kind, "normal_derivative", density, mesh,
                                "interior_limit", params)
    return ext - inte
