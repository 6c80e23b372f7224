import csv
import math
import os
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biharmonic_isp import specfun as sf

DATA = os.path.join(os.path.dirname(__file__), "data")
J0_ZERO = 2.404825557695773
Y0_ZERO = 0.893576966279167


def load_oracle():
    with open(os.path.join(DATA, "bessel_oracle.csv")) as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in ("x", "j0", "y0", "k0")}


def test_oracle_table_agreement():
    o = load_oracle()
    assert len(o["x"]) == 200
    t0 = time.perf_counter()
    j0 = sf.bessel_j0(o["x"])
    y0 = sf.bessel_y0(o["x"])
    k0 = sf.macdonald_k0(o["x"])
    elapsed = time.perf_counter() - t0
    assert np.max(np.abs(j0 - o["j0"])) <= 1e-12
    assert np.max(np.abs(y0 - o["y0"])) <= 1e-10
    assert np.max(np.abs(k0 / o["k0"] - 1)) <= 1e-10
    assert elapsed < 1.0


# -- J0 ---------------------------------------------------------------------

def test_j0_examples():
    assert sf.bessel_j0(0.0) == 1.0
    assert abs(sf.bessel_j0(1.0) - 0.7651976865579666) <= 1e-12
    assert abs(sf.bessel_j0(J0_ZERO)) <= 1e-10


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf, -1.0])
def test_j0_domain(bad):
    with pytest.raises(sf.DomainError):
        sf.bessel_j0(bad)


def test_scalar_in_scalar_out():
    assert isinstance(sf.bessel_j0(1.0), float)
    assert sf.bessel_y0(np.array([1.0, 2.0])).shape == (2,)


# -- Y0 ---------------------------------------------------------------------

def test_y0_examples():
    assert abs(sf.bessel_y0(1.0) - 0.08825696421567696) <= 1e-10
    assert abs(sf.bessel_y0(Y0_ZERO)) <= 1e-9
    assert sf.bessel_y0(1e-6) < -8


def test_y0_monotone_divergence_near_zero():
    x = np.logspace(-12, -2, 30)
    y = sf.bessel_y0(x)
    assert np.all(np.diff(y) > 0)


@pytest.mark.parametrize("bad", [0.0, -2.0, math.nan])
def test_y0_domain(bad):
    with pytest.raises(sf.DomainError):
        sf.bessel_y0(bad)


def test_wronskian():
    # five-point central differences, step 1e-5 x
    x = np.linspace(0.5, 50.0, 300)
    h = 1e-5 * x

    def deriv(f):
        return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)

    w = sf.bessel_j0(x) * deriv(sf.bessel_y0) - deriv(sf.bessel_j0) * sf.bessel_y0(x)
    assert np.max(np.abs(w * math.pi * x / 2 - 1)) <= 1e-8


# -- K0 ---------------------------------------------------------------------

def test_k0_examples():
    assert abs(sf.macdonald_k0(1.0) / 0.42102443824070834 - 1) <= 1e-10
    assert abs(sf.macdonald_k0(10.0) / 1.778006231616765e-5 - 1) <= 1e-10
    assert sf.macdonald_k0(1e-6) > 13


def test_k0_underflow_is_graceful():
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        v = sf.macdonald_k0(np.array([600.0, 800.0, 1e4]))
    assert np.all(np.isfinite(v)) and np.all(v >= 0)
    assert v[-1] == 0.0


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf])
def test_k0_domain(bad):
    with pytest.raises(sf.DomainError):
        sf.macdonald_k0(bad)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e-3, max_value=50.0))
def test_k0_positive_decreasing(x):
    a, b = sf.macdonald_k0(x), sf.macdonald_k0(x * 1.01)
    assert a > b > 0


# -- Hankel ------------------------------------------------------------------

def test_hankel_real_examples():
    h = sf.hankel_h0_real(1.0)
    assert abs(h - (0.7651976866 + 0.0882569642j)) <= 1e-10
    assert abs(abs(sf.hankel_h0_real(100.0)) / math.sqrt(2 / (math.pi * 100.0)) - 1) <= 1e-3
    assert abs(sf.hankel_h0_real(J0_ZERO).real) <= 1e-10


def test_hankel_imag_axis():
    v = sf.hankel_h0_imag_axis(1.0)
    assert v.real == 0.0
    # -(2/pi) K0(1)
    assert abs(v.imag + 0.26803248203398855) <= 1e-12
    assert abs(sf.hankel_h0_imag_axis(10.0)) <= 2e-5
    assert abs(sf.hankel_h0_imag_axis(10.0).imag / -1.1318e-5 - 1) <= 1e-3
    with pytest.raises(sf.DomainError):
        sf.hankel_h0_imag_axis(0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1e-3, max_value=200.0))
def test_hankel_imag_axis_real_part_zero(x):
    assert sf.hankel_h0_imag_axis(x).real == 0.0


# -- asymptotic coefficients ---------------------------------------------------

def test_coefficients_a0():
    c = sf.asymptotic_coefficients(0)
    assert c.order == 0 and len(c.entries) == 1
    a0 = c.entries[0]
    assert abs(a0 - (0.5641895835 - 0.5641895835j)) <= 1e-10
    exact = math.sqrt(2 / math.pi) * complex(math.cos(math.pi / 4), -math.sin(math.pi / 4))
    assert abs(a0 - exact) / abs(exact) <= 1e-14


def test_coefficients_low_order():
    a = sf.asymptotic_coefficients(3).as_array()
    # a1 = a0 (-i/8), a3 / a0 = 37.5 (-i/8)^3
    assert abs(a[1] - (-0.0705236979 - 0.0705236979j)) <= 1e-10
    assert abs(a[3] / a[0] - 37.5 * (-1j / 8) ** 3) <= 1e-14


def test_coefficient_ratio_invariant():
    a = sf.asymptotic_coefficients(25).as_array()
    j = np.arange(1, 26)
    want = -(1j / 8) * (2 * j - 1) ** 2 / j
    assert np.max(np.abs(a[1:] / a[:-1] / want - 1)) <= 1e-14


def test_coefficients_reject_negative_order():
    with pytest.raises(sf.DomainError):
        sf.asymptotic_coefficients(-1)


def test_truncated_single_term():
    a0 = sf.asymptotic_coefficients(0).entries[0]
    assert abs(sf.truncated_hankel_h0(50.0, 0) - a0 * 50 ** -0.5 * np.exp(50j)) <= 1e-15


def test_truncated_real_axis():
    assert abs(sf.truncated_hankel_h0(20.0, 3) - sf.hankel_h0_real(20.0)) <= 5e-7
    z = np.linspace(10, 100, 200)
    err = np.abs(sf.truncated_hankel_h0(z, 3) - sf.hankel_h0_real(z))
    assert np.max(err * z**4.5) <= 10


def test_truncated_imag_axis_first_omitted_term():
    # the N=3 remainder at 20i is bounded by the first omitted term |a_4 z^-4.5 e^{iz}|
    z = 20j
    exact = sf.hankel_h0_imag_axis(20.0)
    err = abs(sf.truncated_hankel_h0(z, 3) - exact)
    a4 = sf.asymptotic_coefficients(4).entries[4]
    bound = abs(a4) * 20**-4.5 * math.exp(-20)
    assert err <= bound
    assert err / abs(exact) <= 1e-6


def test_truncated_rejects_zero():
    with pytest.raises(sf.DomainError):
        sf.truncated_hankel_h0(0.0, 3)


def test_euler_constant():
    assert abs(sf.EULER_GAMMA - 0.57721566490153286061) == 0.0
