"""JIT-compiled direct summation sweeps and singular quadrature helpers.

These are the O(N_t * N_s) kernels that replace the paper's FMM passes with
plain (exact) summation: target-parallel loops with a serial, deterministic
source order per target.  The three Green's functions share their two K0
evaluations per pair, so every sweep returns all kernel kinds at once.
"""

import math

import numpy as np
from numba import njit, prange
from numpy.polynomial.legendre import leggauss

from .bessel import k01, i_orders

TWO_PI = 2.0 * math.pi


@njit(cache=True, parallel=True)
def layer_value_sweep(tgt, src, w, d1, d2, lam1, lam2, skip_r2):
    """out[t, kind, dens]: kinds (G0, G1, G2) applied to densities d1, d2."""
    nt = tgt.shape[0]
    ns = src.shape[0]
    dl = lam1 * lam1 - lam2 * lam2
    out = np.zeros((nt, 3, 2), dtype=np.complex128)
    for t in prange(nt):
        a00 = 0.0 + 0j
        a01 = 0.0 + 0j
        a10 = 0.0 + 0j
        a11 = 0.0 + 0j
        a20 = 0.0 + 0j
        a21 = 0.0 + 0j
        tx = tgt[t, 0]
        ty = tgt[t, 1]
        for j in range(ns):
            dx = tx - src[j, 0]
            dy = ty - src[j, 1]
            r2 = dx * dx + dy * dy
            if r2 <= skip_r2:
                continue
            r = math.sqrt(r2)
            k0a = k01(lam1 * r)[0]
            k0b = k01(lam2 * r)[0]
            g1 = -k0a / TWO_PI
            g2 = -k0b / TWO_PI
            g0 = -(k0a - k0b) / (TWO_PI * dl)
            q1 = w[j] * d1[j]
            q2 = w[j] * d2[j]
            a00 += g0 * q1
            a01 += g0 * q2
            a10 += g1 * q1
            a11 += g1 * q2
            a20 += g2 * q1
            a21 += g2 * q2
        out[t, 0, 0] = a00
        out[t, 0, 1] = a01
        out[t, 1, 0] = a10
        out[t, 1, 1] = a11
        out[t, 2, 0] = a20
        out[t, 2, 1] = a21
    return out


@njit(cache=True, parallel=True)
def layer_grad_sweep(tgt, src, w, d1, d2, lam1, lam2, skip_r2):
    """out[t, kind, dens, axis]: gradients w.r.t. the target point."""
    nt = tgt.shape[0]
    ns = src.shape[0]
    dl = lam1 * lam1 - lam2 * lam2
    out = np.zeros((nt, 3, 2, 2), dtype=np.complex128)
    for t in prange(nt):
        acc = np.zeros((3, 2, 2), dtype=np.complex128)
        tx = tgt[t, 0]
        ty = tgt[t, 1]
        for j in range(ns):
            dx = tx - src[j, 0]
            dy = ty - src[j, 1]
            r2 = dx * dx + dy * dy
            if r2 <= skip_r2:
                continue
            r = math.sqrt(r2)
            k1a = k01(lam1 * r)[1]
            k1b = k01(lam2 * r)[1]
            # dG/dr for each kind
            dg1 = lam1 * k1a / TWO_PI
            dg2 = lam2 * k1b / TWO_PI
            dg0 = (lam1 * k1a - lam2 * k1b) / (TWO_PI * dl)
            ux = dx / r
            uy = dy / r
            q1 = w[j] * d1[j]
            q2 = w[j] * d2[j]
            acc[0, 0, 0] += dg0 * ux * q1
            acc[0, 0, 1] += dg0 * uy * q1
            acc[0, 1, 0] += dg0 * ux * q2
            acc[0, 1, 1] += dg0 * uy * q2
            acc[1, 0, 0] += dg1 * ux * q1
            acc[1, 0, 1] += dg1 * uy * q1
            acc[1, 1, 0] += dg1 * ux * q2
            acc[1, 1, 1] += dg1 * uy * q2
            acc[2, 0, 0] += dg2 * ux * q1
            acc[2, 0, 1] += dg2 * uy * q1
            acc[2, 1, 0] += dg2 * ux * q2
            acc[2, 1, 1] += dg2 * uy * q2
        for a in range(3):
            for b in range(2):
                out[t, a, b, 0] = acc[a, b, 0]
                out[t, a, b, 1] = acc[a, b, 1]
    return out


# {{{ QBX on-surface operator assembly

@njit(cache=True, parallel=True)
def qbx_matrices(nodes, centers, radii, side_sign, src, src_w, src_panel,
                 interp_block, q_b, lam1, lam2, p):
    """One-sided on-surface Nystrom matrices by quadrature by expansion.

    For each boundary node i an expansion center sits at distance radii[i]
    on the given side; Graf's addition theorem turns the K0(lam |x-y|)
    potentials into local Fourier-Bessel expansions truncated at order p.

    Returns four (n_b, n_b) matrices: values and normal derivatives of the
    single-density potentials with kernels K0(lam1 r) and K0(lam2 r); the
    G0/G1/G2 combinations are linear combinations formed by the caller.
    interp_block maps a panel's q_b density values to its upsampled nodes.
    """
    nb = nodes.shape[0]
    ns = src.shape[0]
    s_l1 = np.zeros((nb, nb), dtype=np.complex128)
    s_l2 = np.zeros((nb, nb), dtype=np.complex128)
    d_l1 = np.zeros((nb, nb), dtype=np.complex128)
    d_l2 = np.zeros((nb, nb), dtype=np.complex128)
    nup = interp_block.shape[0]
    for i in prange(nb):
        cx = centers[i, 0]
        cy = centers[i, 1]
        rho = radii[i]
        # evaluation-point factors: I_m(lam rho), I'_m(lam rho)
        i1 = np.empty(p + 2, dtype=np.complex128)
        i2 = np.empty(p + 2, dtype=np.complex128)
        i_orders(lam1 * rho, p + 1, i1)
        i_orders(lam2 * rho, p + 1, i2)
        k1loc = np.empty(p + 2, dtype=np.complex128)
        k2loc = np.empty(p + 2, dtype=np.complex128)
        # node angle around the center
        ex = nodes[i, 0] - cx
        ey = nodes[i, 1] - cy
        thx = math.atan2(ey, ex)
        sgn = side_sign
        for u in range(ns):
            dx = src[u, 0] - cx
            dy = src[u, 1] - cy
            r = math.sqrt(dx * dx + dy * dy)
            thu = math.atan2(dy, dx)
            z1 = lam1 * r
            z2 = lam2 * r
            a1, b1 = k01(z1)
            a2, b2 = k01(z2)
            k1loc[0] = a1
            k1loc[1] = b1
            k2loc[0] = a2
            k2loc[1] = b2
            for m in range(1, p + 1):
                k1loc[m + 1] = k1loc[m - 1] + (2.0 * m / z1) * k1loc[m]
                k2loc[m + 1] = k2loc[m - 1] + (2.0 * m / z2) * k2loc[m]
            phi = thx - thu
            cphi = math.cos(phi)
            cm_prev = 1.0
            cm = cphi
            val1 = k1loc[0] * i1[0]
            val2 = k2loc[0] * i2[0]
            dn1 = k1loc[0] * lam1 * i1[1]
            dn2 = k2loc[0] * lam2 * i2[1]
            for m in range(1, p + 1):
                c2 = 2.0 * cm
                val1 += k1loc[m] * i1[m] * c2
                val2 += k2loc[m] * i2[m] * c2
                # I'_m = (I_{m-1} + I_{m+1})/2
                di1 = 0.5 * (i1[m - 1] + i1[m + 1])
                di2 = 0.5 * (i2[m - 1] + i2[m + 1])
                dn1 += k1loc[m] * lam1 * di1 * c2
                dn2 += k2loc[m] * lam2 * di2 * c2
                cm_next = 2.0 * cphi * cm - cm_prev
                cm_prev = cm
                cm = cm_next
            wq = src_w[u]
            pan = src_panel[u]
            ulocal = u - pan * nup
            for jl in range(q_b):
                jj = pan * q_b + jl
                cw = interp_block[ulocal, jl] * wq
                s_l1[i, jj] += val1 * cw
                s_l2[i, jj] += val2 * cw
                d_l1[i, jj] += sgn * dn1 * cw
                d_l2[i, jj] += sgn * dn2 * cw
    return s_l1, s_l2, d_l1, d_l2


# }}}


# {{{ near-field moments by recursive dyadic subdivision

_QS = 14
_GSUB_X, _GSUB_W = leggauss(_QS)


@njit(cache=True)
def _legendre_basis(r, xi, out):
    """Phat_k(xi) = sqrt(2k+1) P_k(xi) for k < r."""
    p0 = 1.0
    out[0] = 1.0
    if r > 1:
        out[1] = xi * math.sqrt(3.0)
        pm = 1.0
        pc = xi
        for k in range(2, r):
            pn = ((2 * k - 1) * xi * pc - (k - 1) * pm) / k
            pm = pc
            pc = pn
            out[k] = pn * math.sqrt(2.0 * k + 1.0)
    return out


@njit(cache=True)
def near_moments(tx, ty, cx, cy, hw, r_order, lam1, lam2, gsx, gsw,
                 max_depth, want_grad):
    """Moments int_leaf G_kind(x, y) Phat_k Phat_l dy (and gradient kernels).

    Returns (6, r*r) complex: rows [G0, G1, G2, dG0/dx? ...]; when want_grad
    the rows are [G0, G1, G0_x, G0_y, G1_x, G1_y], else only rows 0..2 are
    filled with value kernels [G0, G1, G2].
    Recursion subdivides toward the target; boxes that still touch the target
    at max_depth carry O(size^2 log) mass and are dropped.
    """
    nq = gsx.shape[0]
    rr = r_order * r_order
    out = np.zeros((6, rr), dtype=np.complex128)
    dl = lam1 * lam1 - lam2 * lam2
    # explicit stack of sub-boxes (center, half-width, depth)
    stack = np.empty((8 * max_depth + 8, 3))
    stack[0, 0] = cx
    stack[0, 1] = cy
    stack[0, 2] = hw
    nstack = 1
    bk = np.empty(r_order, dtype=np.float64)
    bl = np.empty(r_order, dtype=np.float64)
    while nstack > 0:
        nstack -= 1
        bx = stack[nstack, 0]
        by = stack[nstack, 1]
        bh = stack[nstack, 2]
        sep = max(abs(tx - bx), abs(ty - by))
        if sep < 2.0 * bh:
            if bh > hw * 0.5**max_depth:
                half = 0.5 * bh
                for sx in (-1.0, 1.0):
                    for sy in (-1.0, 1.0):
                        stack[nstack, 0] = bx + sx * half
                        stack[nstack, 1] = by + sy * half
                        stack[nstack, 2] = half
                        nstack += 1
                continue
            else:
                # singular core: negligible mass, drop
                continue
        for a in range(nq):
            ya = bx + bh * gsx[a]
            _legendre_basis(r_order, (ya - cx) / hw, bk)
            for b in range(nq):
                yb = by + bh * gsx[b]
                _legendre_basis(r_order, (yb - cy) / hw, bl)
                wab = bh * bh * gsw[a] * gsw[b]
                dx = tx - ya
                dy = ty - yb
                r = math.sqrt(dx * dx + dy * dy)
                k0a, k1a = k01(lam1 * r)
                k0b, k1b = k01(lam2 * r)
                if want_grad:
                    g0 = -(k0a - k0b) / (TWO_PI * dl)
                    g1 = -k0a / TWO_PI
                    dg0 = (lam1 * k1a - lam2 * k1b) / (TWO_PI * dl)
                    dg1 = lam1 * k1a / TWO_PI
                    ux = dx / r
                    uy = dy / r
                    for k in range(r_order):
                        for l in range(r_order):
                            pkl = wab * bk[k] * bl[l]
                            idx = k * r_order + l
                            out[0, idx] += g0 * pkl
                            out[1, idx] += g1 * pkl
                            out[2, idx] += dg0 * ux * pkl
                            out[3, idx] += dg0 * uy * pkl
                            out[4, idx] += dg1 * ux * pkl
                            out[5, idx] += dg1 * uy * pkl
                else:
                    g0 = -(k0a - k0b) / (TWO_PI * dl)
                    g1 = -k0a / TWO_PI
                    g2 = -k0b / TWO_PI
                    for k in range(r_order):
                        for l in range(r_order):
                            pkl = wab * bk[k] * bl[l]
                            idx = k * r_order + l
                            out[0, idx] += g0 * pkl
                            out[1, idx] += g1 * pkl
                            out[2, idx] += g2 * pkl
    return out

# }}}
