"""Source grids, strength fields and Gaussian random source sampling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .specfun import DomainError


class ConfigurationError(ValueError):
    """Invalid model or sampling configuration."""


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class Grid:
    """Uniform rectangular lattice; nodes are origin + index * spacing."""

    origin: tuple
    spacing: tuple
    counts: tuple

    def __post_init__(self):
        if not (len(self.origin) == len(self.spacing) == len(self.counts)):
            raise ConfigurationError("grid origin, spacing and counts must have equal length")
        if self.dim not in (2, 3):
            raise ConfigurationError("grid dimension must be 2 or 3")
        if any(s <= 0 for s in self.spacing):
            raise ConfigurationError("grid spacing must be positive")
        if any(c < 2 for c in self.counts):
            raise ConfigurationError("grid needs at least 2 nodes per axis")

    @classmethod
    def from_bounds(cls, lower, upper, intervals) -> "Grid":
        """Lattice with ``intervals`` cells per axis spanning [lower, upper]."""
        lower = tuple(float(v) for v in lower)
        upper = tuple(float(v) for v in upper)
        if isinstance(intervals, int):
            intervals = (intervals,) * len(lower)
        spacing = tuple((u - l) / n for l, u, n in zip(lower, upper, intervals))
        return cls(origin=lower, spacing=spacing, counts=tuple(n + 1 for n in intervals))

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def cell_area(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def upper(self) -> tuple:
        return tuple(o + s * (c - 1) for o, s, c in zip(self.origin, self.spacing, self.counts))

    def axes(self) -> list:
        return [o + s * np.arange(c) for o, s, c in zip(self.origin, self.spacing, self.counts)]

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (size, dim), row-major over (j1, j2[, j3])."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dim)

    def indices(self) -> np.ndarray:
        mesh = np.meshgrid(*[np.arange(c) for c in self.counts], indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dim)

    def distance_to_box(self, points) -> np.ndarray:
        """Euclidean distance from each point to the grid's bounding box."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.origin)
        hi = np.asarray(self.upper)
        gap = np.maximum(lo - p, 0.0) + np.maximum(p - hi, 0.0)
        return np.sqrt((gap**2).sum(axis=1))


# ---------------------------------------------------------------------------
# strength fields

def _example1(y):
    return 4.0 * np.exp(-4.0 * (y**2).sum(axis=-1))


def _mu_tilde(a, b):
    return (
        0.3 * (1 - a) ** 2 * np.exp(-(a**2) - (b + 1) ** 2)
        - (0.2 * a - a**3 - b**5) * np.exp(-(a**2) - b**2)
        - 0.03 * np.exp(-((a + 1) ** 2) - b**2)
    )


def _example2(y):
    if y.shape[-1] != 2:
        raise ConfigurationError("example2 strength is defined in two dimensions only")
    return _mu_tilde(3.0 * y[..., 0], 3.0 * y[..., 1])


@dataclass
class StrengthField:
    """Strength mu of the random source.

    ``kind`` is ``"example1"`` (4 exp(-4|y|^2), any dimension), ``"example2"``
    (mu~(3y1, 3y2)), ``"constant"`` or ``"tabulated"``.  Values outside the
    support box ``[lower, upper]`` are zero.
    """

    kind: str = "example1"
    clamp: bool = True
    lower: tuple = (-1.0, -1.0)
    upper: tuple = (1.0, 1.0)
    value: float = 1.0
    table_grid: Grid | None = None
    table_values: np.ndarray | None = None
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("example1", "example2", "constant", "tabulated"):
            raise ConfigurationError(f"unknown strength kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.table_grid is None or self.table_values is None:
                raise ConfigurationError("tabulated strength needs a grid and values")
            vals = np.asarray(self.table_values, dtype=float).reshape(self.table_grid.counts)
            self._interp = RegularGridInterpolator(
                self.table_grid.axes(), vals, method="linear", bounds_error=False, fill_value=0.0
            )
            self.lower = tuple(self.table_grid.origin)
            self.upper = tuple(self.table_grid.upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @classmethod
    def example1(cls, dim=2, clamp=True):
        return cls("example1", clamp, (-1.0,) * dim, (1.0,) * dim)

    @classmethod
    def example2(cls, clamp=True):
        return cls("example2", clamp)

    @classmethod
    def constant(cls, value, dim=2, half_width=1.0):
        return cls("constant", True, (-half_width,) * dim, (half_width,) * dim, value=value)

    @classmethod
    def tabulated(cls, grid: Grid, values, clamp=True):
        return cls("tabulated", clamp, table_grid=grid, table_values=np.asarray(values, dtype=float))

    @classmethod
    def from_csv(cls, path, clamp=True):
        """Load ``j1,j2,y1,y2,mu`` rows (row-major) into a tabulated field."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["j1", "j2", "y1", "y2", "mu"]:
                raise ConfigurationError(f"{path}: expected header j1,j2,y1,y2,mu")
            rows = [(int(r["j1"]), int(r["j2"]), float(r["y1"]), float(r["y2"]), float(r["mu"])) for r in reader]
        n1 = max(r[0] for r in rows) + 1
        n2 = max(r[1] for r in rows) + 1
        if len(rows) != n1 * n2:
            raise ConfigurationError(f"{path}: expected {n1 * n2} rows, found {len(rows)}")
        vals = np.empty((n1, n2))
        y1 = np.empty(n1)
        y2 = np.empty(n2)
        for j1, j2, a, b, m in rows:
            vals[j1, j2] = m
            y1[j1] = a
            y2[j2] = b
        grid = Grid(origin=(y1[0], y2[0]), spacing=(y1[1] - y1[0], y2[1] - y2[0]), counts=(n1, n2))
        return cls.tabulated(grid, vals, clamp=clamp)


def eval_strength(field: StrengthField, y) -> np.ndarray:
    """mu(y) for points ``y`` of shape (..., dim); zero outside the support box."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != field.dim:
        raise ConfigurationError(f"points have dimension {y.shape[-1]}, field has {field.dim}")
    if field.kind == "example1":
        vals = _example1(y)
    elif field.kind == "example2":
        vals = _example2(y)
    elif field.kind == "constant":
        vals = np.full(y.shape[:-1], float(field.value))
    else:
        vals = field._interp(y.reshape(-1, field.dim)).reshape(y.shape[:-1])
    eps = 1e-12
    inside = np.all((y >= np.asarray(field.lower) - eps) & (y <= np.asarray(field.upper) + eps), axis=-1)
    vals = np.where(inside, vals, 0.0)
    if field.clamp:
        vals = np.maximum(vals, 0.0)
    return vals


def write_strength_csv(path, grid: Grid, values) -> None:
    values = np.asarray(values, dtype=float).ravel()
    idx = grid.indices()
    pts = grid.nodes()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j1", "j2", "y1", "y2", "mu"])
        for (j1, j2), (a, b), m in zip(idx, pts, values):
            w.writerow([j1, j2, repr(float(a)), repr(float(b)), repr(float(m))])


# ---------------------------------------------------------------------------
# white noise

@dataclass(frozen=True)
class NoiseRealization:
    """Cell increments delta_j W ~ N(0, |I_j|) of one sample path."""

    increments: np.ndarray
    seed: int
    path_index: int
    cell_area: float

    def nodal_values(self) -> np.ndarray:
        """Increments divided by the cell area (discrete white-noise values)."""
        return self.increments / self.cell_area


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based stream for one (seed, path) pair; independent of call order."""
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(ss))


def sample_white_noise(grid: Grid, seed: int, path_index: int) -> NoiseRealization:
    xi = path_generator(seed, path_index).standard_normal(grid.size)
    return NoiseRealization(
        increments=math.sqrt(grid.cell_area) * xi,
        seed=int(seed),
        path_index=int(path_index),
        cell_area=grid.cell_area,
    )


def white_noise_matrix(grid: Grid, seed: int, paths, first_path: int = 0) -> np.ndarray:
    """Increments for ``paths`` consecutive paths, shape (cells, paths)."""
    out = np.empty((grid.size, paths))
    for p in range(paths):
        out[:, p] = sample_white_noise(grid, seed, first_path + p).increments
    return out


# ---------------------------------------------------------------------------
# fractional fields

@dataclass(frozen=True)
class FieldModel:
    """Microlocally isotropic Gaussian source of order -m in dimension dim."""

    m: float
    strength: StrengthField
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError("dim must be 2 or 3")
        if not (self.dim - 6 < self.m <= self.dim):
            raise ConfigurationError(f"order m={self.m} outside ({self.dim - 6}, {self.dim}]")


def fractional_noise(grid: Grid, m: float, seed: int, path_index: int,
                     box_side: float | None = None) -> np.ndarray:
    """Nodal values of (-Delta)^{-m/4} W on the grid (unit strength), flattened.

    The grid is embedded in a periodic box of side ``box_side`` (default twice
    the largest grid extent, same spacing).  White noise on the box is
    filtered spectrally by |xi|^{-m/2}; for m != 0 the zero mode is removed.
    The first ``grid.size`` normals of the path stream land on the grid cells,
    so m = 0 reproduces ``sample_white_noise`` nodal values exactly.
    """
    if not (grid.dim - 6 < m <= grid.dim):
        raise ConfigurationError(f"order m={m} outside ({grid.dim - 6}, {grid.dim}]")
    h = np.asarray(grid.spacing)
    extent = h * np.asarray(grid.counts)
    if box_side is None:
        box_side = 2.0 * float(np.max(extent))
    box = np.rint(np.asarray(box_side, dtype=float) / h).astype(int)
    if np.any(box < np.asarray(grid.counts)):
        raise ConfigurationError("periodic box smaller than the grid")

    gen = path_generator(seed, path_index)
    area = grid.cell_area
    inner = gen.standard_normal(grid.size)
    if m == 0:
        # same operation order as NoiseRealization.nodal_values: bit-identical
        return (math.sqrt(area) * inner) / area
    noise = np.empty(tuple(box))
    mask = np.zeros(tuple(box), dtype=bool)
    mask[tuple(slice(0, c) for c in grid.counts)] = True
    noise[mask] = inner
    noise[~mask] = gen.standard_normal(int(np.prod(box)) - grid.size)
    noise /= math.sqrt(area)
    freqs = np.meshgrid(*[2.0 * math.pi * np.fft.fftfreq(n, d=s) for n, s in zip(box, h)], indexing="ij")
    modulus = np.sqrt(sum(f**2 for f in freqs))
    symbol = np.zeros_like(modulus)
    nz = modulus > 0
    symbol[nz] = modulus[nz] ** (-m / 2.0)
    full = np.fft.ifftn(np.fft.fftn(noise) * symbol).real
    return full[tuple(slice(0, c) for c in grid.counts)].ravel()


def sample_fractional_field(grid: Grid, model: FieldModel, seed: int, path_index: int,
                            box_side: float | None = None) -> np.ndarray:
    """One realization of sqrt(mu) (-Delta)^{-m/4} W at the grid nodes (flattened)."""
    if model.dim != grid.dim:
        raise ConfigurationError("model and grid dimensions differ")
    filtered = fractional_noise(grid, model.m, seed, path_index, box_side)
    return np.sqrt(eval_strength(model.strength, grid.nodes())) * filtered


def fractional_increments(grid: Grid, m: float, seed: int, paths: int, first_path: int = 0) -> np.ndarray:
    """Cell integrals |I| (-Delta)^{-m/4} W for several paths, shape (cells, paths)."""
    out = np.empty((grid.size, paths))
    for p in range(paths):
        out[:, p] = grid.cell_area * fractional_noise(grid, m, seed, first_path + p)
    return out


# ---------------------------------------------------------------------------
# kernel constants

@dataclass(frozen=True)
class KernelConstant:
    """Leading singular behaviour of the covariance kernel K_f(x, y).

    case: "i" (log), "ii" (power), "iii" (power with delta corrections) or
    "iv" ((-Delta)^n delta).  ``constant`` is C1, C2, or 1 for case iv.
    """

    case: str
    constant: float
    hurst: float
    n: int | None = None
    c_table: tuple = ()


def _is_nonneg_int(v, tol=1e-12):
    return v > -tol and abs(v - round(v)) < tol


def kernel_leading_constant(m: float, d: int) -> KernelConstant:
    if d not in (2, 3):
        raise DomainError("d must be 2 or 3")
    if not (d - 6 < m < d + 2):
        raise DomainError(f"m={m} outside ({d - 6}, {d + 2})")
    H = (m - d) / 2.0
    if _is_nonneg_int(H):
        Hn = int(round(H))
        c1 = (-1) ** (Hn + 1) * 2.0 ** (-m + 1) * math.pi ** (-d / 2) / (math.factorial(Hn) * math.gamma(m / 2))
        return KernelConstant("i", c1, H)
    if m > 0:
        c2 = 2.0 ** (-m) * math.pi ** (-d / 2) * math.gamma(-H) / math.gamma(m / 2)
        return KernelConstant("ii", c2, H)
    n = int(math.floor(-m / 2.0))
    area = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    table = [1.0]
    for j in range(1, n + 1):
        denom = 2.0**j * math.factorial(j) * math.prod(d + 2 * i for i in range(j))
        table.append(area / denom)
    if abs(m + 2 * n) < 1e-12:
        return KernelConstant("iv", 1.0, H, n=n, c_table=tuple(table))
    c2 = 2.0 ** (-m) * math.pi ** (-d / 2) * math.gamma(-H) / math.gamma(m / 2)
    return KernelConstant("iii", c2, H, n=n, c_table=tuple(table))
