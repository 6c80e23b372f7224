"""Monte Carlo forward solver: quadrature of the Ito integral u = -int Phi sqrt(mu) dW.

Quadrature nodes are the source-grid nodes y_j, each paired with the
increment of its cell, so for one path

    u(x_i; k) = -sum_j Phi(|x_i - y_j|, k) sqrt(mu(y_j)) delta_j W.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import greens
from .randsrc import (
    ConfigurationError,
    Grid,
    NoiseRealization,
    StrengthField,
    eval_strength,
    white_noise_matrix,
)


class PreconditionError(ValueError):
    """A receiver lies inside (or touches) the source domain."""


@dataclass
class ReceiverSet:
    """Receiver points with the label of the measurement domain each belongs to.

    ``local_index`` holds the per-domain lattice index (i1, i2[, i3]) used in
    CSV output.
    """

    points: np.ndarray
    labels: np.ndarray
    local_index: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if len(self.labels) != len(self.points):
            raise ConfigurationError("one label per receiver required")
        if self.local_index is None:
            self.local_index = np.zeros((len(self.points), self.dim), dtype=int)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    @classmethod
    def single(cls, *points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, np.zeros(len(pts), dtype=int))

    @classmethod
    def from_boxes(cls, lowers, side, intervals):
        """Lattice receivers on axis-aligned squares/cubes of edge ``side``.

        Each box carries ``intervals + 1`` nodes per axis; labels are the box
        order (0-based).
        """
        pts, labels, loc = [], [], []
        for n, lower in enumerate(lowers):
            g = Grid.from_bounds(lower, [v + side for v in lower], intervals)
            pts.append(g.nodes())
            loc.append(g.indices())
            labels.append(np.full(g.size, n))
        return cls(np.vstack(pts), np.concatenate(labels), np.vstack(loc))

    def subset(self, label) -> "ReceiverSet":
        sel = self.labels == label
        return ReceiverSet(self.points[sel], self.labels[sel], self.local_index[sel])

    def domains(self) -> list:
        return sorted(set(int(v) for v in self.labels))

    def check_outside(self, grid: Grid) -> float:
        """Return r0 = min distance to the source box; raise if not positive."""
        if self.dim != grid.dim:
            raise ConfigurationError("receiver and grid dimensions differ")
        dist = grid.distance_to_box(self.points)
        r0 = float(dist.min())
        if r0 <= 0:
            bad = int(np.argmin(dist))
            raise PreconditionError(f"receiver {bad} at {self.points[bad].tolist()} is not outside the source domain")
        return r0


@dataclass
class WaveSampleSet:
    """Complex wave values indexed (receiver, path, frequency)."""

    values: np.ndarray
    frequencies: np.ndarray
    seed: int
    receivers: ReceiverSet | None = None
    meta: dict = field(default_factory=dict)

    @property
    def paths(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path) -> None:
        """Write ``receiver_idx,path,k,re_u,im_u`` rows (frequency-major)."""
        R, P, F = self.values.shape
        with open(path, "w", newline="") as fh:
            fh.write("receiver_idx,path,k,re_u,im_u\n")
            ridx = np.repeat(np.arange(R), P)
            pidx = np.tile(np.arange(P), R)
            for f, k in enumerate(self.frequencies):
                k = float(k)
                block = self.values[:, :, f].ravel()
                rows = np.column_stack([ridx, pidx])
                lines = [
                    f"{r},{p},{k!r},{v.real!r},{v.imag!r}\n"
                    for (r, p), v in zip(rows.tolist(), block.tolist())
                ]
                fh.writelines(lines)

    @classmethod
    def from_csv(cls, path, seed=0):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        ks = np.unique(data[:, 2])
        R = int(data[:, 0].max()) + 1
        P = int(data[:, 1].max()) + 1
        vals = np.zeros((R, P, len(ks)), dtype=complex)
        f_idx = np.searchsorted(ks, data[:, 2])
        vals[data[:, 0].astype(int), data[:, 1].astype(int), f_idx] = data[:, 3] + 1j * data[:, 4]
        return cls(vals, ks, seed)


# ---------------------------------------------------------------------------
# kernel matrices

def _distances(points, grid: Grid):
    y = grid.nodes()
    return np.linalg.norm(points[:, None, :] - y[None, :, :], axis=-1)


def kernel_matrix(points, grid: Grid, k: float, kind: str = "full") -> np.ndarray:
    """Phi(|x_i - y_j|, k) for receivers x_i and grid nodes y_j.

    kind: ``"full"`` (2D or 3D by grid dimension) or ``"truncated"`` (2D, N=3).
    """
    r = _distances(np.atleast_2d(points), grid)
    if kind == "truncated":
        if grid.dim != 2:
            raise ConfigurationError("truncated kernel is two-dimensional")
        return greens.truncated_phi_2d(r, k, greens.TRUNCATION_ORDER)
    if grid.dim == 2:
        return greens.phi_2d(r, k)
    return greens.phi_3d(r, k)


def _source_weights(field: StrengthField, grid: Grid) -> np.ndarray:
    return np.sqrt(eval_strength(field, grid.nodes()))


def _increments(noise) -> np.ndarray:
    if isinstance(noise, NoiseRealization):
        return noise.increments
    return np.asarray(noise, dtype=float)


def _field(receivers, k, noise, field, grid, kind):
    if k <= 0:
        raise ConfigurationError("wavenumber must be positive")
    receivers.check_outside(grid)
    inc = _increments(noise)
    if inc.shape[0] != grid.size:
        raise ConfigurationError("noise does not match the source grid")
    src = _source_weights(field, grid)
    src = src[:, None] * inc if inc.ndim == 2 else src * inc
    return -(kernel_matrix(receivers.points, grid, k, kind) @ src)


def forward_field_2d(receivers: ReceiverSet, k: float, noise, field: StrengthField, grid: Grid) -> np.ndarray:
    """u(x_i; k) for one path (or a (cells, P) increment matrix -> (R, P))."""
    if grid.dim != 2:
        raise ConfigurationError("forward_field_2d needs a 2D grid")
    return _field(receivers, k, noise, field, grid, "full")


def forward_field_3d(receivers: ReceiverSet, k: float, noise, field: StrengthField, grid: Grid) -> np.ndarray:
    """u(x_i; k) = -(1/8 pi k^2) sum_j (e^{ikr} - e^{-kr})/r sqrt(mu_j) delta_j W."""
    if grid.dim != 3:
        raise ConfigurationError("forward_field_3d needs a 3D grid")
    return _field(receivers, k, noise, field, grid, "full")


def truncated_field_2d(receivers: ReceiverSet, k: float, noise, field: StrengthField, grid: Grid) -> np.ndarray:
    """u_3(x_i; k): same quadrature with the N=3 truncated kernel."""
    if grid.dim != 2:
        raise ConfigurationError("truncated_field_2d needs a 2D grid")
    return _field(receivers, k, noise, field, grid, "truncated")


def sweep(receivers: ReceiverSet, frequencies, field: StrengthField, grid: Grid, P: int, seed: int,
          kind: str = "full", first_path: int = 0, noise: np.ndarray | None = None) -> WaveSampleSet:
    """Wave samples for P paths at every frequency.

    Each path's increment array is drawn once and reused at all frequencies,
    so ``values[:, p, :]`` is a single realization seen across the band.
    """
    freqs = np.asarray(frequencies, dtype=float).reshape(-1)
    if freqs.size == 0:
        raise ConfigurationError("empty frequency list")
    if np.any(np.diff(freqs) <= 0):
        raise ConfigurationError("frequencies must be strictly increasing")
    if P < 1:
        raise ConfigurationError("path count must be at least 1")
    if noise is None:
        noise = white_noise_matrix(grid, seed, P, first_path)
    elif noise.shape != (grid.size, P):
        raise ConfigurationError("noise matrix shape mismatch")
    receivers.check_outside(grid)
    src = _source_weights(field, grid)[:, None] * noise
    values = np.empty((len(receivers), P, freqs.size), dtype=complex)
    for f, k in enumerate(freqs):
        values[:, :, f] = -(kernel_matrix(receivers.points, grid, k, kind) @ src)
    return WaveSampleSet(values, freqs, int(seed), receivers, {"kind": kind, "first_path": first_path})
