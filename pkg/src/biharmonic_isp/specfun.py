"""Order-zero Bessel, Macdonald and Hankel functions on the real and imaginary axes.

All routines accept scalars or numpy arrays and return the same shape.  The
implementations are self-contained:

* ``J0``/``Y0``: power series for ``x <= 8``, Miller backward recurrence with
  the Neumann series for ``Y0`` on ``(8, 25)``, and the Hankel asymptotic
  expansion (20 terms) for ``x >= 25``.
* ``K0``: power series for ``x <= 2``; for ``x > 2`` the trapezoid rule on
  ``K0(x) = int_0^inf exp(-x cosh t) dt``, which converges geometrically fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286061

_SERIES_CUT = 8.0
_ASYMPTOTIC_CUT = 25.0
_MILLER_START = 80
_ASYMPTOTIC_TERMS = 20
_K0_SERIES_CUT = 2.0
_K0_NODES = 40


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _as_real(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    return arr


def _out(arr, like):
    return arr if np.ndim(like) else arr[()]


# ---------------------------------------------------------------------------
# asymptotic coefficients

@dataclass(frozen=True)
class SpectralCoefficients:
    """Coefficients a_0..a_N of H0(z) ~ sum_j a_j z^-(j+1/2) e^{iz}."""

    entries: tuple
    order: int

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=complex)


def asymptotic_coefficients(N: int) -> SpectralCoefficients:
    """Large-argument expansion coefficients of the order-zero Hankel function.

    ``a_j = sqrt(2/pi) e^{-i pi/4} (-i/8)^j prod_{l=1}^j (2l-1)^2 / j!``

    The factor ``(-i/8)^j`` is the one consistent with the classical Hankel
    expansion; successive ratios are ``a_j/a_{j-1} = -(i/8)(2j-1)^2/j``.
    """
    if N < 0:
        raise DomainError("asymptotic_coefficients: N must be nonnegative")
    a = [math.sqrt(2.0 / math.pi) * complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))]
    for j in range(1, N + 1):
        a.append(a[-1] * (-1j / 8.0) * (2 * j - 1) ** 2 / j)
    return SpectralCoefficients(entries=tuple(a), order=N)


_A_LONG = asymptotic_coefficients(_ASYMPTOTIC_TERMS).as_array()


def truncated_hankel_h0(z, N: int):
    """N-term truncation of the Hankel asymptotic series, principal branch."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("truncated_hankel_h0: z must be nonzero")
    a = asymptotic_coefficients(N).as_array()
    # principal branch: arg(z) in (-pi, pi]
    inv = 1.0 / z
    power = np.exp(-0.5 * np.log(z))
    total = np.zeros_like(z)
    for aj in a:
        total = total + aj * power
        power = power * inv
    return _out(total * np.exp(1j * z), z)


def _hankel_asymptotic(x):
    """J0 + iY0 for large real x using the precomputed 20-term series."""
    inv = 1.0 / x
    power = 1.0 / np.sqrt(x)
    total = np.zeros(x.shape, dtype=complex)
    for aj in _A_LONG:
        total += aj * power
        power = power * inv
    return total * np.exp(1j * x)


# ---------------------------------------------------------------------------
# J0 and Y0

def _series_j0_y0(x, want_y):
    t = -(x * x) / 4.0
    term = np.ones_like(x)
    j0 = np.ones_like(x)
    harmonic = 0.0
    ysum = np.zeros_like(x)
    for n in range(1, 40):
        term = term * t / (n * n)
        j0 = j0 + term
        if want_y:
            harmonic += 1.0 / n
            ysum = ysum - harmonic * term
    if not want_y:
        return j0, None
    y0 = (2.0 / math.pi) * ((np.log(x / 2.0) + EULER_GAMMA) * j0 + ysum)
    return j0, y0


def _miller_j0_y0(x):
    # backward recurrence J_{n-1} = (2n/x) J_n - J_{n+1}, normalised by
    # 1 = J0 + 2 sum J_{2k}; Neumann series gives Y0 from the same iterates
    jp1 = np.zeros_like(x)
    jn = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    neumann = np.zeros_like(x)
    for n in range(_MILLER_START, 0, -1):
        jm1 = (2.0 * n / x) * jn - jp1
        jp1, jn = jn, jm1
        m = n - 1
        if m > 0 and m % 2 == 0:
            norm += 2.0 * jn
            k = m // 2
            neumann += (-1.0) ** k * jn / k
        big = np.abs(jn) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            jn, jp1, norm, neumann = jn * scale, jp1 * scale, norm * scale, neumann * scale
    norm += jn
    j0 = jn / norm
    y0 = (2.0 / math.pi) * ((np.log(x / 2.0) + EULER_GAMMA) * j0) - (4.0 / math.pi) * neumann / norm
    return j0, y0


def _j0_y0(x, want_y):
    j0 = np.empty_like(x)
    y0 = np.empty_like(x) if want_y else None
    small = x <= _SERIES_CUT
    large = x >= _ASYMPTOTIC_CUT
    mid = ~(small | large)
    if np.any(small):
        a, b = _series_j0_y0(x[small], want_y)
        j0[small] = a
        if want_y:
            y0[small] = b
    if np.any(mid):
        a, b = _miller_j0_y0(x[mid])
        j0[mid] = a
        if want_y:
            y0[mid] = b
    if np.any(large):
        h = _hankel_asymptotic(x[large])
        j0[large] = h.real
        if want_y:
            y0[large] = h.imag
    return j0, y0


def bessel_j0(x):
    """Bessel function of the first kind, order zero, for x >= 0."""
    arr = _as_real(x, "bessel_j0")
    if np.any(arr < 0):
        raise DomainError("bessel_j0: x must be nonnegative")
    j0, _ = _j0_y0(np.atleast_1d(arr), want_y=False)
    return _out(j0.reshape(arr.shape), arr)


def bessel_y0(x):
    """Bessel function of the second kind, order zero, for x > 0."""
    arr = _as_real(x, "bessel_y0")
    if np.any(arr <= 0):
        raise DomainError("bessel_y0: x must be positive (logarithmic singularity at 0)")
    _, y0 = _j0_y0(np.atleast_1d(arr), want_y=True)
    return _out(y0.reshape(arr.shape), arr)


def bessel_j0_y0(x):
    """Both J0(x) and Y0(x) from a single pass; x > 0."""
    arr = _as_real(x, "bessel_j0_y0")
    if np.any(arr <= 0):
        raise DomainError("bessel_j0_y0: x must be positive")
    j0, y0 = _j0_y0(np.atleast_1d(arr), want_y=True)
    return _out(j0.reshape(arr.shape), arr), _out(y0.reshape(arr.shape), arr)


# ---------------------------------------------------------------------------
# K0

def _k0_series(x):
    t = (x * x) / 4.0
    term = np.ones_like(x)
    i0 = np.ones_like(x)
    harmonic = 0.0
    hsum = np.zeros_like(x)
    for n in range(1, 30):
        term = term * t / (n * n)
        i0 = i0 + term
        harmonic += 1.0 / n
        hsum = hsum + harmonic * term
    return -(np.log(x / 2.0) + EULER_GAMMA) * i0 + hsum


def _k0_trapezoid(x):
    # K0(x) = e^{-x} int_0^inf exp(-x (cosh t - 1)) dt, truncated where the
    # integrand drops below e^{-45}
    tmax = np.arccosh(1.0 + 45.0 / x)
    h = tmax / _K0_NODES
    n = np.arange(_K0_NODES + 1)
    t = h[:, None] * n[None, :]
    vals = np.exp(-x[:, None] * (np.cosh(t) - 1.0))
    vals[:, 0] *= 0.5
    return np.exp(-x) * h * vals.sum(axis=1)


def macdonald_k0(x):
    """Modified Bessel function of the second kind, order zero, for x > 0."""
    arr = _as_real(x, "macdonald_k0")
    if np.any(arr <= 0):
        raise DomainError("macdonald_k0: x must be positive")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat <= _K0_SERIES_CUT
    if np.any(small):
        out[small] = _k0_series(flat[small])
    if np.any(~small):
        out[~small] = _k0_trapezoid(flat[~small])
    return _out(out.reshape(arr.shape), arr)


# ---------------------------------------------------------------------------
# Hankel function on the two rays

def hankel_h0_real(x):
    """H0^(1)(x) = J0(x) + i Y0(x) for real x > 0."""
    j0, y0 = bessel_j0_y0(x)
    return j0 + 1j * y0


def hankel_h0_imag_axis(x):
    """H0^(1)(ix) = -(2i/pi) K0(x) for real x > 0 (purely imaginary)."""
    return -(2.0j / math.pi) * macdonald_k0(x)
