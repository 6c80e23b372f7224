"""Fast invariant suite run by ``biharm-isp selftest``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import greens, specfun
from .inverse import BlockSystem, kaczmarz_sweep
from .randsrc import Grid, white_noise_matrix

# high-precision reference values (50-digit series, rounded to double)
_REFERENCE = {
    "J0(1)": (specfun.bessel_j0, 1.0, 0.7651976865579666, "abs", 1e-12),
    "J0(10)": (specfun.bessel_j0, 10.0, -0.2459357644513483, "abs", 1e-12),
    "Y0(1)": (specfun.bessel_y0, 1.0, 0.08825696421567696, "abs", 1e-10),
    "Y0(30)": (specfun.bessel_y0, 30.0, -0.11729573168666403, "abs", 1e-10),
    "K0(1)": (specfun.macdonald_k0, 1.0, 0.42102443824070834, "rel", 1e-10),
    "K0(10)": (specfun.macdonald_k0, 10.0, 1.778006231616765e-05, "rel", 1e-10),
}


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.measured) and self.measured <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<44s} measured={self.measured:.3e}  tol={self.tolerance:.1e}"


def _coefficient_checks(perturb_a0: float):
    a = list(specfun.asymptotic_coefficients(6).entries)
    a[0] = a[0] * (1.0 + perturb_a0)
    a0 = math.sqrt(2.0 / math.pi) * complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))
    out = [Check("a_0 = sqrt(2/pi) exp(-i pi/4)", abs(a[0] - a0) / abs(a0), 1e-14)]
    worst = 0.0
    for j in range(1, len(a)):
        want = -(1j / 8.0) * (2 * j - 1) ** 2 / j
        worst = max(worst, abs(a[j] / a[j - 1] - want) / abs(want))
    out.append(Check("a_j / a_(j-1) = -(i/8)(2j-1)^2/j", worst, 1e-14))
    return out


def _specfun_checks():
    out = []
    for name, (fn, x, ref, mode, tol) in _REFERENCE.items():
        err = abs(fn(x) - ref)
        if mode == "rel":
            err /= abs(ref)
        out.append(Check(f"{name} vs reference ({mode})", err, tol))
    x = np.array([3.0, 12.0, 40.0])
    wr = np.abs(specfun.bessel_j0(x) ** 2 + specfun.bessel_y0(x) ** 2 - 2 / (math.pi * x) * (1 - 1 / (8 * x**2)))
    out.append(Check("J0^2 + Y0^2 large-x envelope", float(np.max(wr * x**5)), 1.0))
    return out


def _greens_checks():
    out = []
    r = np.array([0.3, 1.0, 2.7])
    k = 1.7
    plus, minus = greens.helmholtz_components(r, k, 2)
    split = np.max(np.abs(greens.phi_2d(r, k) - (plus - minus) / (2 * k**2)))
    out.append(Check("Phi = (Phi+ - Phi-)/(2k^2), d=2", float(split), 1e-14))
    plus, minus = greens.helmholtz_components(r, k, 3)
    split = np.max(np.abs(greens.phi_3d(r, k) - (plus - minus) / (2 * k**2)))
    out.append(Check("Phi = (Phi+ - Phi-)/(2k^2), d=3", float(split), 1e-14))
    kr = k * r
    j0, y0 = specfun.bessel_j0(kr), specfun.bessel_y0(kr)
    g = (y0 + 2 / math.pi * specfun.macdonald_k0(kr)) ** 2 - j0**2
    phi = greens.phi_2d(r, k)
    ident = np.max(np.abs(64 * k**4 * (phi.real**2 - phi.imag**2) - g))
    out.append(Check("G = 64 k^4 (Re^2 Phi - Im^2 Phi)", float(ident), 1e-12))
    lim = abs(greens.phi_2d(1e-6, 1.0) - 0.125j) / 0.125
    out.append(Check("Phi_2d(1e-6, 1) -> i/8", float(lim), 1e-4))
    lim = abs(greens.measurement_kernel_g(1e-6, 2.0) + 1.0)
    out.append(Check("G(1e-6, k) -> -1", float(lim), 1e-3))
    return out


def _kaczmarz_checks():
    out = []
    rng = np.random.default_rng(1)
    n = 6
    b = rng.normal(size=n)
    blk = BlockSystem(np.eye(n), b)
    q = kaczmarz_sweep([blk], rng.normal(size=n), 0.0)
    out.append(Check("identity block, gamma=0: one sweep gives b", float(np.max(np.abs(q - b))), 1e-12))
    gamma = 0.25
    q = kaczmarz_sweep([BlockSystem(np.array([[1.0]]), np.array([3.0]))], np.zeros(1), gamma)
    out.append(Check("scalar block: q = b/(1+gamma)", abs(q[0] - 3.0 / (1 + gamma)), 1e-14))
    A = rng.normal(size=(30, 12))
    x = rng.normal(size=12)
    rhs = A @ x
    blocks = [BlockSystem(A[i:i + 10], rhs[i:i + 10], label=i) for i in range(0, 30, 10)]
    q = np.zeros(12)
    for _ in range(200):
        q = kaczmarz_sweep(blocks, q, 0.0)
    ls = np.linalg.lstsq(A, rhs, rcond=None)[0]
    out.append(Check("consistent system vs least squares", float(np.linalg.norm(q - ls) / np.linalg.norm(ls)), 1e-8))
    return out


def _noise_checks():
    grid = Grid.from_bounds((-1.0, -1.0), (1.0, 1.0), 20)
    w = white_noise_matrix(grid, 12345, 250)
    var = float(w.var() / grid.cell_area)
    return [Check("white-noise increment variance / |I|", abs(var - 1.0), 0.05)]


def run_selftest(perturb_a0: float = 0.0, stream=print) -> bool:
    """Execute every check, print one line each, return True when all pass."""
    t0 = time.perf_counter()
    checks = []
    checks += _coefficient_checks(perturb_a0)
    checks += _specfun_checks()
    checks += _greens_checks()
    checks += _kaczmarz_checks()
    checks += _noise_checks()
    for c in checks:
        stream(c.line())
    ok = all(c.passed for c in checks)
    stream(f"{sum(c.passed for c in checks)}/{len(checks)} passed in {time.perf_counter() - t0:.2f} s")
    return ok
