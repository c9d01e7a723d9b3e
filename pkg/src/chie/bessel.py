"""Modified Bessel functions K0, K1, K_m, I_m for real and complex arguments.

Everything here is written from scratch so the hot loops can be JIT compiled:
a power series is used for |z| <= 2 and Temme's continued fraction (CF2,
evaluated with the modified Lentz scheme) for |z| > 2.  Valid for Re z > 0.
Accuracy is checked in tests against an integral-representation oracle and
mpmath: relative error is ~1e-14 for real arguments in [1e-8, 700] and better
than 1e-11 off the real axis with |arg z| < pi/2.
"""

import cmath
import math

import numpy as np
from numba import njit, vectorize

EULER_GAMMA = 0.5772156649015328606

_SERIES_MAXIT = 60
_CF2_MAXIT = 400


@njit(cache=True)
def _k01_series(z):
    """K0 and K1 by the ascending series, for |z| <= 2."""
    q = 0.25 * z * z
    lg = cmath.log(0.5 * z)

    # I0, I1 and the companion sums accumulated together.
    term0 = 1.0 + 0j          # (q^k)/(k!)^2
    i0 = term0
    s0 = 0.0 + 0j             # sum H_k q^k/(k!)^2, H_0 = 0
    term1 = 1.0 + 0j          # q^k/(k!(k+1)!)
    i1 = term1
    s1 = term1                # sum [psi(k+1)+psi(k+2)+2g] q^k/(k!(k+1)!), k=0 term = 1
    hk = 0.0
    for k in range(1, _SERIES_MAXIT):
        term0 *= q / (k * k)
        hk += 1.0 / k
        i0 += term0
        s0 += term0 * hk
        term1 *= q / (k * (k + 1))
        i1 += term1
        s1 += term1 * (2.0 * hk + 1.0 / (k + 1))
        if abs(term0) < 1e-18 * abs(i0):
            break
    i1 *= 0.5 * z

    k0 = -(lg + EULER_GAMMA) * i0 + s0
    # psi sums of A&S 9.6.11 rewritten via harmonic numbers.
    k1 = 1.0 / z + (lg + EULER_GAMMA) * i1 - 0.25 * z * s1
    return k0, k1


@njit(cache=True)
def _k01_cf2(z):
    """K0 and K1 by Temme's CF2 continued fraction, for |z| > 2, Re z > 0."""
    # Temme (1975) / NR besselik, order nu = 0.
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0 + 0j
    q2 = 1.0 + 0j
    a1 = 0.25
    q = a1 + 0j
    c = a1 + 0j
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, _CF2_MAXIT):
        a -= 2.0 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels) <= 1e-17 * abs(s):
            break
    h = a1 * h
    pref = cmath.sqrt(math.pi / (2.0 * z)) * cmath.exp(-z)
    k0 = pref / s
    k1 = k0 * (z + 0.5 - h) / z
    return k0, k1


@njit(cache=True)
def k01(z):
    """Return (K0(z), K1(z)) for complex z with Re z > 0.

    Underflows cleanly to (0, 0) once exp(-Re z) is below the double range.
    """
    if z.real > 710.0:
        return 0.0 + 0j, 0.0 + 0j
    if abs(z) <= 2.0:
        return _k01_series(z)
    return _k01_cf2(z)


@njit(cache=True)
def k0(z):
    a, _ = k01(z)
    return a


@njit(cache=True)
def k1(z):
    _, b = k01(z)
    return b


@vectorize(["complex128(complex128)"], cache=True)
def k0v(z):
    a, _ = k01(z)
    return a


@vectorize(["complex128(complex128)"], cache=True)
def k1v(z):
    _, b = k01(z)
    return b


@njit(cache=True)
def k_orders(z, nmax, out):
    """Fill out[0..nmax] with K_m(z); stable upward recurrence."""
    a, b = k01(z)
    out[0] = a
    if nmax >= 1:
        out[1] = b
    for m in range(1, nmax):
        out[m + 1] = out[m - 1] + (2.0 * m / z) * out[m]
    return out


@njit(cache=True)
def i_orders(z, nmax, out):
    """Fill out[0..nmax] with I_m(z) via the ascending series (any |z| of interest).

    Per-order series: I_m(z) = (z/2)^m sum_k q^k / (k! (k+m)!), q = z^2/4.
    """
    q = 0.25 * z * z
    half = 0.5 * z
    pref = 1.0 + 0j
    for m in range(nmax + 1):
        term = 1.0 + 0j
        acc = term
        for k in range(1, _SERIES_MAXIT):
            term *= q / (k * (k + m))
            acc += term
            if abs(term) < 1e-18 * abs(acc):
                break
        out[m] = pref * acc / _factorial(m)
        pref *= half
    return out


@njit(cache=True)
def _factorial(m):
    f = 1.0
    for j in range(2, m + 1):
        f *= j
    return f


def bessel_k(order, z):
    """Modified Bessel function of the second kind, order 0 or 1.

    ``z`` may be real or complex (scalar or array) with Re z > 0.
    Raises for z = 0 or Re z <= 0.
    """
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are supported")
    zarr = np.asarray(z, dtype=np.complex128)
    if np.any(zarr == 0):
        raise ValueError("K_n(z) is singular at z = 0")
    if np.any(zarr.real <= 0):
        raise ValueError("require Re z > 0")
    out = k0v(zarr) if order == 0 else k1v(zarr)
    if np.isscalar(z) or np.ndim(z) == 0:
        return complex(out)
    return out
