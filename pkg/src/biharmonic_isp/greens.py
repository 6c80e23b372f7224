"""Fundamental solutions of the biharmonic wave operator Delta^2 - k^4.

``phi_2d``/``phi_3d`` return the outgoing kernel Phi with
(Delta^2 - k^4) Phi = -delta.  Every function broadcasts over ``r`` (and ``k``)
and returns the analytic continuous extension at r = 0 where one exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import (
    DomainError,
    bessel_j0_y0,
    hankel_h0_real,
    macdonald_k0,
    truncated_hankel_h0,
)

TRUNCATION_ORDER = 3


@dataclass(frozen=True)
class KernelEval:
    value: complex
    r: float
    k: float
    dim: int


def _check(r, k, allow_zero=True):
    r = np.asarray(r, dtype=float)
    k = np.asarray(k, dtype=float)
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(k))):
        raise DomainError("kernel arguments must be finite")
    if np.any(k <= 0):
        raise DomainError("wavenumber k must be positive")
    if np.any(r < 0) or (not allow_zero and np.any(r == 0)):
        raise DomainError("separation r must be " + ("nonnegative" if allow_zero else "positive"))
    return r, k


def _shape_out(val, r, k):
    return val if (np.ndim(r) or np.ndim(k)) else val[()]


def _bessel_parts(kr):
    """Return (Y0 + (2/pi) K0, J0) at kr > 0."""
    j0, y0 = bessel_j0_y0(kr)
    return y0 + (2.0 / math.pi) * macdonald_k0(kr), j0


def phi_3d(r, k):
    """(e^{ikr} - e^{-kr}) / (8 pi k^2 r); (1+i)/(8 pi k) at r = 0."""
    r, k = _check(r, k)
    r_b, k_b = np.broadcast_arrays(r, k)
    kr = k_b * r_b
    # e^{ikr} - e^{-kr} without cancellation for small kr
    num = (-2.0 * np.sin(kr / 2.0) ** 2 - np.expm1(-kr)) + 1j * np.sin(kr)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = num / (8.0 * math.pi * k_b**2 * r_b)
    val = np.where(r_b == 0, (1.0 + 1.0j) / (8.0 * math.pi * k_b), val)
    return _shape_out(val, r, k)


def phi_2d(r, k):
    """(i/8k^2)(H0(kr) - H0(ikr)); i/(8k^2) at r = 0.

    Re Phi = -(Y0 + (2/pi)K0)/(8k^2) and Im Phi = J0/(8k^2).
    """
    r, k = _check(r, k)
    r_b, k_b = np.broadcast_arrays(r, k)
    kr = np.atleast_1d(k_b * r_b)
    zero = kr == 0
    re = np.zeros(kr.shape)
    im = np.ones(kr.shape)
    if np.any(~zero):
        s, j0 = _bessel_parts(kr[~zero])
        re[~zero] = -s
        im[~zero] = j0
    scale = np.atleast_1d(8.0 * k_b**2)
    val = np.empty(kr.shape, dtype=complex)
    val.real = re / scale
    val.imag = im / scale
    return _shape_out(val.reshape(np.shape(r_b)), r, k)


def helmholtz_components(r, k, dim):
    """Outgoing Helmholtz and modified-Helmholtz Green's functions (Phi+, Phi-).

    Phi = (Phi+ - Phi-) / (2 k^2).
    """
    r, k = _check(r, k, allow_zero=False)
    r_b, k_b = np.broadcast_arrays(r, k)
    kr = k_b * r_b
    if dim == 3:
        plus = np.exp(1j * kr) / (4.0 * math.pi * r_b)
        minus = np.exp(-kr) / (4.0 * math.pi * r_b)
    elif dim == 2:
        plus = 0.25j * hankel_h0_real(kr)
        minus = macdonald_k0(kr) / (2.0 * math.pi)
    else:
        raise DomainError("dim must be 2 or 3")
    return _shape_out(np.asarray(plus), r, k), _shape_out(np.asarray(minus), r, k)


def truncated_phi_2d(r, k, N=TRUNCATION_ORDER):
    """Phi_N = (i/8k^2)(H0,N(kr) - H0,N(ikr)) using the N-term Hankel series."""
    r, k = _check(r, k, allow_zero=False)
    r_b, k_b = np.broadcast_arrays(r, k)
    kr = k_b * r_b
    val = (1j / (8.0 * k_b**2)) * (
        np.asarray(truncated_hankel_h0(kr.astype(complex), N))
        - np.asarray(truncated_hankel_h0(1j * kr, N))
    )
    return _shape_out(val, r, k)


def measurement_kernel_g(r, k):
    """G = (Y0 + (2/pi)K0)^2 - J0^2 at argument kr; -1 at r = 0.

    Equals 64 k^4 ((Re Phi)^2 - (Im Phi)^2) for the 2D kernel.
    """
    r, k = _check(r, k)
    r_b, k_b = np.broadcast_arrays(r, k)
    kr = np.atleast_1d(k_b * r_b)
    zero = kr == 0
    out = np.full(kr.shape, -1.0)
    if np.any(~zero):
        s, j0 = _bessel_parts(kr[~zero])
        out[~zero] = s * s - j0 * j0
    return _shape_out(out.reshape(np.shape(r_b)), r, k)


def magnitude_kernel(r, k):
    """|H0(kr) - H0(ikr)|^2 = (Y0 + (2/pi)K0)^2 + J0^2; 1 at r = 0."""
    r, k = _check(r, k)
    r_b, k_b = np.broadcast_arrays(r, k)
    kr = np.atleast_1d(k_b * r_b)
    zero = kr == 0
    out = np.ones(kr.shape)
    if np.any(~zero):
        s, j0 = _bessel_parts(kr[~zero])
        out[~zero] = s * s + j0 * j0
    return _shape_out(out.reshape(np.shape(r_b)), r, k)


def evaluate(r: float, k: float, dim: int) -> KernelEval:
    if dim == 2:
        value = complex(phi_2d(r, k))
    elif dim == 3:
        value = complex(phi_3d(r, k))
    else:
        raise DomainError("dim must be 2 or 3")
    return KernelEval(value=value, r=float(r), k=float(k), dim=dim)
