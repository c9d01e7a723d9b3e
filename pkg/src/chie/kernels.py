"""Scheme parameters and the Green's functions G0, G1, G2 of the split operator.

The convex-splitting step turns the time-discrete problem into
(Lap^2 - b Lap + c) phi = f with b = s/eps^2 and c = 1/(eps*dt).  Writing
lambda_1^2, lambda_2^2 for the roots of x^2 - b x + c = 0, the operator
factors as (Lap - lambda_1^2)(Lap - lambda_2^2) and

    G_i(r) = -K0(lambda_i r) / (2 pi),        i = 1, 2,
    G_0(r) = -[K0(lambda_1 r) - K0(lambda_2 r)] / (2 pi (lambda_1^2 - lambda_2^2)).

All kernel arithmetic is complex; in the real-root regime values are real up
to roundoff and callers may take the real part.
"""

import cmath
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numba import njit

from .bessel import EULER_GAMMA, bessel_k, k01

TWO_PI = 2.0 * math.pi


class KernelKind(IntEnum):
    G0 = 0
    G1 = 1
    G2 = 2


@dataclass(frozen=True)
class SolverParams:
    epsilon: float
    s: float
    dt: float
    theta_Y: float
    b: float
    c: float
    lambda1_sq: complex
    lambda2_sq: complex
    lambda1: complex
    lambda2: complex

    @property
    def is_complex_regime(self):
        """True when b^2 - 4c < 0 (conjugate-pair lambda^2)."""
        return self.b * self.b - 4.0 * self.c < 0.0

    @property
    def lam_delta(self):
        return self.lambda1_sq - self.lambda2_sq


def make_params(epsilon, s, dt, theta_Y=0.5 * math.pi):
    """Build SolverParams with b = s/eps^2, c = 1/(eps*dt) and the lambda roots.

    The larger-real-part root is lambda1^2; in the real regime lambda2^2 is
    computed as c/lambda1^2 to avoid cancellation.  A degenerate double root
    (b^2 = 4c) is rejected.
    """
    if epsilon <= 0 or dt <= 0 or s <= 0:
        raise ValueError("epsilon, s, dt must all be positive")
    b = s / epsilon**2
    c = 1.0 / (epsilon * dt)
    disc = b * b - 4.0 * c
    if disc == 0.0:
        raise ValueError("degenerate double root lambda1^2 = lambda2^2; "
                         "perturb s or dt")
    if disc > 0.0:
        l1sq = complex(0.5 * (b + math.sqrt(disc)))
        l2sq = complex(c / l1sq.real)
    else:
        root = 0.5j * math.sqrt(-disc)
        l1sq = 0.5 * b + root
        l2sq = 0.5 * b - root
    lam1 = cmath.sqrt(l1sq)
    lam2 = cmath.sqrt(l2sq)
    if lam1.real <= 0 or lam2.real <= 0:
        raise ValueError("lambda roots must have positive real part")
    return SolverParams(epsilon=float(epsilon), s=float(s), dt=float(dt),
                        theta_Y=float(theta_Y), b=b, c=c,
                        lambda1_sq=l1sq, lambda2_sq=l2sq,
                        lambda1=lam1, lambda2=lam2)


# {{{ scalar kernel cores (JIT compiled, shared by the direct-sum sweeps)

@njit(cache=True)
def _g0_small_r(r, lam1, lam2):
    """G0 by the series of the K0 difference; safe for |lambda r| << 1."""
    q1 = 0.25 * (lam1 * r) ** 2
    q2 = 0.25 * (lam2 * r) ** 2
    # I0(z1)-I0(z2) and S(z1)-S(z2), k >= 1 terms only (k=0 cancels exactly)
    t1 = 1.0 + 0j
    t2 = 1.0 + 0j
    di0 = 0.0 + 0j
    ds = 0.0 + 0j
    hk = 0.0
    for k in range(1, 30):
        t1 *= q1 / (k * k)
        t2 *= q2 / (k * k)
        hk += 1.0 / k
        di0 += t1 - t2
        ds += (t1 - t2) * hk
        if abs(t1) + abs(t2) < 1e-18:
            break
    t1 = 1.0 + 0j
    i0z1 = 1.0 + 0j
    for k in range(1, 30):
        t1 *= q1 / (k * k)
        i0z1 += t1
        if abs(t1) < 1e-18:
            break
    lgratio = cmath.log(lam1 / lam2)
    if r > 0.0:
        lg2 = cmath.log(0.5 * lam2 * r) + EULER_GAMMA
    else:
        lg2 = 0.0 + 0j
    dk0 = -lgratio * i0z1 - lg2 * di0 + ds
    return -dk0 / (TWO_PI * (lam1 * lam1 - lam2 * lam2))


@njit(cache=True)
def g_value(kind, r, lam1, lam2):
    """G_kind at distance r (r > 0 for kinds 1, 2; r >= 0 for kind 0)."""
    if kind == 1:
        return -k01(lam1 * r)[0] / TWO_PI
    if kind == 2:
        return -k01(lam2 * r)[0] / TWO_PI
    scale = min(1.0 / abs(lam1), 1.0 / abs(lam2))
    if r < 1e-3 * scale:
        return _g0_small_r(r, lam1, lam2)
    dk0 = k01(lam1 * r)[0] - k01(lam2 * r)[0]
    return -dk0 / (TWO_PI * (lam1 * lam1 - lam2 * lam2))


@njit(cache=True)
def g_grad_radial(kind, r, lam1, lam2):
    """dG_kind/dr at distance r > 0 (gradient = this times (x-y)/r)."""
    if kind == 1:
        return lam1 * k01(lam1 * r)[1] / TWO_PI
    if kind == 2:
        return lam2 * k01(lam2 * r)[1] / TWO_PI
    scale = min(1.0 / abs(lam1), 1.0 / abs(lam2))
    if r < 1e-3 * scale:
        return _g0_grad_radial_small(r, lam1, lam2)
    num = lam1 * k01(lam1 * r)[1] - lam2 * k01(lam2 * r)[1]
    return num / (TWO_PI * (lam1 * lam1 - lam2 * lam2))


@njit(cache=True)
def _g0_grad_radial_small(r, lam1, lam2):
    """Series form of dG0/dr; the 1/r poles of the K1 pair cancel exactly."""
    if r == 0.0:
        return 0.0 + 0j
    z1 = lam1 * r
    z2 = lam2 * r
    q1 = 0.25 * z1 * z1
    q2 = 0.25 * z2 * z2
    # I1(z)/ (z/2) = sum q^k/(k!(k+1)!), s1 = sum (2H_k + 1/(k+1)) q^k/(k!(k+1)!)
    t1 = 1.0 + 0j
    t2 = 1.0 + 0j
    b1 = t1
    b2 = t2
    s11 = 1.0 + 0j
    s12 = 1.0 + 0j
    hk = 0.0
    for k in range(1, 30):
        t1 *= q1 / (k * (k + 1))
        t2 *= q2 / (k * (k + 1))
        hk += 1.0 / k
        b1 += t1
        b2 += t2
        s11 += t1 * (2.0 * hk + 1.0 / (k + 1))
        s12 += t2 * (2.0 * hk + 1.0 / (k + 1))
        if abs(t1) + abs(t2) < 1e-18:
            break
    lg1 = cmath.log(0.5 * z1) + EULER_GAMMA
    lg2 = cmath.log(0.5 * z2) + EULER_GAMMA
    # lam*K1(lam*r) - 1/r = lam*lg*I1 - (lam^2 r/4) s1, with I1 = (z/2)*b
    a1 = lam1 * lg1 * (0.5 * z1 * b1) - 0.25 * lam1 * lam1 * r * s11
    a2 = lam2 * lg2 * (0.5 * z2 * b2) - 0.25 * lam2 * lam2 * r * s12
    return (a1 - a2) / (TWO_PI * (lam1 * lam1 - lam2 * lam2))

# }}}


def greens(kind, r, params):
    """G_kind(r) for scalar or array r; complex valued.

    G1/G2 are log-singular so r must be positive; G0 has a finite limit at
    r = 0 which is returned exactly.
    """
    kind = KernelKind(kind)
    lam1, lam2 = params.lambda1, params.lambda2
    rarr = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if kind != KernelKind.G0 and np.any(rarr <= 0.0):
        raise ValueError("G1/G2 require r > 0")
    if np.any(rarr < 0.0):
        raise ValueError("r must be nonnegative")
    out = np.empty(rarr.shape, dtype=np.complex128)
    flat = rarr.ravel()
    oflat = out.ravel()
    for i in range(flat.size):
        oflat[i] = g_value(int(kind), flat[i], lam1, lam2)
    if np.ndim(r) == 0:
        return complex(out[0])
    return out


def greens_grad(kind, x, y, params):
    """Gradient with respect to x of G_kind(x, y); returns a 2-vector."""
    kind = KernelKind(kind)
    dx = float(x[0]) - float(y[0])
    dy = float(x[1]) - float(y[1])
    r = math.hypot(dx, dy)
    if r == 0.0:
        if kind == KernelKind.G0:
            return np.zeros(2, dtype=np.complex128)
        raise ValueError("coincident points for a singular kernel")
    gr = g_grad_radial(int(kind), r, params.lambda1, params.lambda2)
    return np.array([gr * dx / r, gr * dy / r], dtype=np.complex128)


def greens_limit_equal_roots(r, lam):
    """Equal-root limit kernel -r K1(lam r)/(4 pi lam); validation only."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if r == 0.0:
        return -1.0 / (4.0 * math.pi * lam * lam)
    val = -r * bessel_k(1, lam * r) / (4.0 * math.pi * lam)
    return val.real
