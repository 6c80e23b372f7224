"""Statistical reductions of wave samples and deterministic reference functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import greens
from .forward import ReceiverSet, WaveSampleSet, kernel_matrix
from .randsrc import ConfigurationError, Grid, StrengthField, eval_strength

MEASUREMENT_KINDS = ("difference", "magnitude")


@dataclass
class MeasurementTable:
    """M(x_i, k) per receiver and frequency, with Monte Carlo standard errors.

    ``kind="difference"`` is 64 k^4 E[(Re u)^2 - (Im u)^2]; ``"magnitude"`` is
    64 k^4 E|u|^2.
    """

    values: np.ndarray
    stderr: np.ndarray
    frequencies: np.ndarray
    kind: str = "difference"
    receivers: ReceiverSet | None = None

    def column(self, k: float) -> np.ndarray:
        idx = np.flatnonzero(np.isclose(self.frequencies, k, rtol=0, atol=1e-12))
        if idx.size == 0:
            raise KeyError(f"no measurements at k={k}")
        return self.values[:, idx[0]]

    def to_csv(self, path) -> None:
        rec = self.receivers
        with open(path, "w", newline="") as fh:
            fh.write("i1,i2,x1,x2,k,M,stderr\n")
            for f, k in enumerate(self.frequencies):
                for r in range(self.values.shape[0]):
                    i1, i2 = rec.local_index[r][:2]
                    x1, x2 = rec.points[r][:2]
                    vals = (x1, x2, k, self.values[r, f], self.stderr[r, f])
                    fh.write(f"{i1},{i2}," + ",".join(repr(float(v)) for v in vals) + "\n")

    @classmethod
    def from_csv(cls, path, receivers: ReceiverSet, kind="difference"):
        """Read a table back, matching rows to ``receivers`` by coordinates."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        ks = np.unique(data[:, 4])
        vals = np.full((len(receivers), len(ks)), np.nan)
        errs = np.full_like(vals, np.nan)
        lookup = {(round(p[0], 9), round(p[1], 9)): i for i, p in enumerate(receivers.points)}
        for row in data:
            i = lookup.get((round(row[2], 9), round(row[3], 9)))
            if i is None:
                continue
            f = int(np.searchsorted(ks, row[4]))
            vals[i, f] = row[5]
            errs[i, f] = row[6]
        return cls(vals, errs, ks, kind, receivers)


def measurement_mc(samples: WaveSampleSet, kind: str = "difference") -> MeasurementTable:
    """M_num = 64 k^4 (1/P) sum_paths [(Re u)^2 -/+ (Im u)^2] and its standard error."""
    if kind not in MEASUREMENT_KINDS:
        raise ConfigurationError(f"unknown measurement kind {kind!r}")
    vals = samples.values
    if vals.ndim != 3 or vals.shape[2] != len(samples.frequencies):
        raise ConfigurationError("sample array does not match the frequency list")
    P = vals.shape[1]
    if P < 2:
        raise ConfigurationError("measurement synthesis needs at least 2 paths")
    sign = -1.0 if kind == "difference" else 1.0
    per_path = vals.real**2 + sign * vals.imag**2
    scale = 64.0 * samples.frequencies**4
    mean = per_path.mean(axis=1) * scale
    se = per_path.std(axis=1, ddof=1) / math.sqrt(P) * scale
    return MeasurementTable(mean, se, np.array(samples.frequencies, dtype=float), kind, samples.receivers)


def expected_measurement(receivers: ReceiverSet, grid: Grid, field: StrengthField, k: float,
                         kind: str = "difference") -> np.ndarray:
    """Quadrature sum_j |I_j| G(|x_i - y_j|, k) mu(y_j): the exact mean of M_num."""
    mu = eval_strength(field, grid.nodes())
    return measurement_matrix(receivers.points, grid, k, kind) @ mu


def measurement_matrix(points, grid: Grid, k: float, kind: str = "difference") -> np.ndarray:
    """|I_j| G(|x_i - y_j|, k), or the magnitude kernel for ``kind="magnitude"``."""
    r = np.linalg.norm(np.atleast_2d(points)[:, None, :] - grid.nodes()[None, :, :], axis=-1)
    if kind == "difference":
        ker = greens.measurement_kernel_g(r, k)
    elif kind == "magnitude":
        ker = greens.magnitude_kernel(r, k)
    else:
        raise ConfigurationError(f"unknown measurement kind {kind!r}")
    return grid.cell_area * ker


# ---------------------------------------------------------------------------
# ergodic frequency averages

def td_constant(d: int) -> float:
    """1 / (16 (2 pi)^{d-1}): 1/(32 pi) for d=2, 1/(64 pi^2) for d=3."""
    if d not in (2, 3):
        raise ConfigurationError("d must be 2 or 3")
    return 1.0 / (16.0 * (2.0 * math.pi) ** (d - 1))


def band_exponent(m: float, d: int) -> float:
    return m + 7 - d


@dataclass
class ErgodicEstimate:
    """Band average (1/T) int_T^{2T} k^{m+7-d} |u|^2 dk per receiver."""

    values: np.ndarray
    band: tuple
    exponent: float
    nodes: int
    points: np.ndarray | None = None
    reference: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        d = self.points.shape[1]
        cols = ["x1", "x2", "x3"][:d]
        ref = self.reference if self.reference is not None else np.full(len(self.values), np.nan)
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols + ["Td_hat", "Td_ref", "ratio"]) + "\n")
            for p, v, r in zip(self.points, self.values, ref):
                ratio = v / r if r else float("nan")
                fh.write(",".join(repr(float(c)) for c in (*p, v, r, ratio)) + "\n")


def band_frequencies(T: float, nodes: int) -> np.ndarray:
    """Uniform k-grid with ``nodes`` points covering [T, 2T]."""
    return np.linspace(T, 2.0 * T, nodes)


def ergodic_average(samples: WaveSampleSet, m: float, d: int, path: int = 0,
                    band: tuple | None = None) -> ErgodicEstimate:
    """Composite trapezoid approximation of the single-path band average.

    The band defaults to [k_min, 2 k_min]; its endpoints must be grid nodes.
    """
    k = np.asarray(samples.frequencies, dtype=float)
    if band is None:
        band = (float(k[0]), 2.0 * float(k[0]))
    lo, hi = band
    tol = 1e-9 * max(1.0, hi)
    i0 = np.flatnonzero(np.abs(k - lo) <= tol)
    i1 = np.flatnonzero(np.abs(k - hi) <= tol)
    if i0.size == 0 or i1.size == 0:
        raise ConfigurationError(f"frequency grid does not cover the band [{lo}, {hi}]")
    sl = slice(int(i0[0]), int(i1[0]) + 1)
    ks = k[sl]
    expo = band_exponent(m, d)
    u = samples.values[:, path, sl]
    integrand = ks**expo * np.abs(u) ** 2
    vals = np.trapezoid(integrand, ks, axis=1) / (hi - lo)
    pts = samples.receivers.points if samples.receivers is not None else None
    return ErgodicEstimate(vals, (lo, hi), expo, len(ks), pts)


def reference_td(x, field: StrengthField, grid: Grid, d: int) -> np.ndarray:
    """T_d(x) by the cell-corner rule: c_d sum_j |I_j| mu(y_j) / |x - y_j|^{d-1}."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if grid.dim != d or pts.shape[1] != d:
        raise ConfigurationError("dimension mismatch")
    if np.any(grid.distance_to_box(pts) <= 0):
        from .forward import PreconditionError

        raise PreconditionError("reference point must lie outside the source domain")
    return td_matrix(pts, grid, d) @ eval_strength(field, grid.nodes())


def td_matrix(points, grid: Grid, d: int) -> np.ndarray:
    """c_d |I_j| / |x_i - y_j|^{d-1}; the linear map mu -> T_d."""
    r = np.linalg.norm(np.atleast_2d(points)[:, None, :] - grid.nodes()[None, :, :], axis=-1)
    return td_constant(d) * grid.cell_area / r ** (d - 1)


def ito_second_moment(receivers: ReceiverSet, grid: Grid, field: StrengthField, k: float,
                      kind: str = "full") -> np.ndarray:
    """Exact E|u_num|^2 = sum_j |Phi_ij|^2 mu_j |I_j| for the discretized field."""
    W = kernel_matrix(receivers.points, grid, k, kind)
    return (np.abs(W) ** 2) @ (eval_strength(field, grid.nodes()) * grid.cell_area)


@dataclass
class AsymptoticsReport:
    frequencies: np.ndarray
    ratios: np.ndarray
    stderr: np.ndarray
    expected_ratios: np.ndarray
    defined: bool
    drift_slope: float | None

    def lines(self) -> list:
        if not self.defined:
            return ["ratios undefined: reference T_d vanishes"]
        out = []
        for f, k in enumerate(self.frequencies):
            out.append(
                f"k={k:g}: ratio " + " ".join(f"{v:.4f}" for v in self.ratios[:, f])
                + f"  (expected {np.mean(self.expected_ratios[:, f]):.6f})"
            )
        out.append(f"drift of mean ratio vs 1/k: slope {self.drift_slope:.4g}")
        return out


def variance_asymptotics_check(samples: WaveSampleSet, field: StrengthField, grid: Grid, m: float,
                               d: int, kind: str = "full") -> AsymptoticsReport:
    """Per-frequency ratios k^{m+7-d} E^|u|^2 / T_d(x) over all paths.

    ``expected_ratios`` replaces the Monte Carlo mean by the exact second
    moment of the discretized field, isolating the deterministic drift.
    """
    rec = samples.receivers
    td = td_matrix(rec.points, grid, d) @ eval_strength(field, grid.nodes())
    k = np.asarray(samples.frequencies, dtype=float)
    expo = band_exponent(m, d)
    if not np.all(td > 0):
        nan = np.full((len(rec), len(k)), np.nan)
        return AsymptoticsReport(k, nan, nan, nan, False, None)
    abs2 = np.abs(samples.values) ** 2
    P = abs2.shape[1]
    mean = abs2.mean(axis=1)
    se = abs2.std(axis=1, ddof=1) / math.sqrt(P) if P > 1 else np.full_like(mean, np.nan)
    ratios = k**expo * mean / td[:, None]
    stderr = k**expo * se / td[:, None]
    expected = np.column_stack(
        [kf**expo * ito_second_moment(rec, grid, field, kf, kind) / td for kf in k]
    )
    slope = float(np.polyfit(1.0 / k, ratios.mean(axis=0), 1)[0]) if len(k) > 1 else None
    return AsymptoticsReport(k, ratios, stderr, expected, True, slope)
