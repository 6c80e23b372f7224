"""Per-domain linear systems and the regularized block Kaczmarz iteration.

One block update is

    q <- q + A_n^T (gamma I + A_n A_n^T)^{-1} (b_n - A_n q).

The symmetric matrix gamma I + A_n A_n^T is Cholesky-factored once per block
and reused for every sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .estimators import MeasurementTable, measurement_matrix, td_matrix
from .forward import ReceiverSet
from .randsrc import Grid


class LinearSolveError(ArithmeticError):
    """gamma I + A A^T could not be factored for some block."""


class AssemblyError(ValueError):
    """Measurements missing for a receiver/frequency pair."""


@dataclass
class BlockSystem:
    A: np.ndarray
    b: np.ndarray
    k: float = float("nan")
    label: object = 0
    _factors: dict = field(default_factory=dict, repr=False)

    def factor(self, gamma: float):
        if gamma not in self._factors:
            M = self.A @ self.A.T
            M[np.diag_indices_from(M)] += gamma
            try:
                c = cho_factor(M, lower=True, check_finite=True)
            except LinAlgError as exc:
                raise LinearSolveError(
                    f"gamma*I + A A^T is singular for block {self.label!r} (k={self.k:g}, gamma={gamma:g})"
                ) from exc
            if gamma == 0 and np.min(np.abs(np.diag(c[0]))) < 1e-10 * np.max(np.abs(np.diag(c[0]))):
                raise LinearSolveError(f"A A^T is numerically singular for block {self.label!r} (k={self.k:g})")
            self._factors[gamma] = c
        return self._factors[gamma]

    def update(self, q: np.ndarray, gamma: float) -> np.ndarray:
        r = self.b - self.A @ q
        return q + self.A.T @ cho_solve(self.factor(gamma), r)

    def residual(self, q: np.ndarray) -> float:
        return float(np.linalg.norm(self.b - self.A @ q))


@dataclass
class ReconstructionResult:
    q: np.ndarray
    history: list
    config: dict

    def residuals(self) -> np.ndarray:
        return np.array([h[2] for h in self.history])

    def to_csv(self, path, grid: Grid, mu_true=None) -> None:
        idx = grid.indices()
        pts = grid.nodes()
        d = grid.dim
        true = np.full(len(self.q), np.nan) if mu_true is None else np.asarray(mu_true)
        with open(path, "w", newline="") as fh:
            head = [f"j{i + 1}" for i in range(d)] + [f"y{i + 1}" for i in range(d)] + ["mu_true", "mu_rec"]
            fh.write(",".join(head) + "\n")
            for j, y, t, v in zip(idx, pts, true, self.q):
                fh.write(",".join(str(int(a)) for a in j) + "," + ",".join(repr(float(a)) for a in y)
                         + f",{float(t)!r},{float(v)!r}\n")

    def history_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("sweep,frequency,residual\n")
            for s, k, r in self.history:
                fh.write(f"{s},{float(k)!r},{float(r)!r}\n")


def assemble_block(receivers: ReceiverSet, grid: Grid, k: float, measurements: MeasurementTable,
                   label=0, kind: str | None = None) -> BlockSystem:
    """A_n = |I| G(|x_i - y_j|, k) and b_n from the table, rows in receiver order.

    ``measurements.receivers`` must contain every receiver of this block.
    """
    kind = kind or measurements.kind
    table_rec = measurements.receivers
    f = np.flatnonzero(np.isclose(measurements.frequencies, k, rtol=0, atol=1e-12))
    if f.size == 0:
        raise AssemblyError(f"no measurements at k={k:g}")
    rows = []
    for p in receivers.points:
        hit = np.flatnonzero(np.all(np.abs(table_rec.points - p) < 1e-9, axis=1))
        if hit.size == 0:
            raise AssemblyError(f"no measurement for receiver {p.tolist()} at k={k:g}")
        rows.append(hit[0])
    b = measurements.values[rows, f[0]]
    if not np.all(np.isfinite(b)):
        raise AssemblyError(f"missing measurement entries at k={k:g}")
    A = measurement_matrix(receivers.points, grid, k, kind)
    return BlockSystem(A, np.asarray(b, dtype=float), float(k), label)


def kaczmarz_sweep(blocks, q_in: np.ndarray, gamma: float) -> np.ndarray:
    """One pass n = 1..N of the regularized block update, in list order."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    q = np.array(q_in, dtype=float, copy=True)
    for blk in blocks:
        q = blk.update(q, gamma)
    return q


def invert(groups, gamma: float, L: int, q0=None, clamp: bool = False, config: dict | None = None
           ) -> ReconstructionResult:
    """Frequency loop outermost (ascending k), L sweeps over the domain blocks each.

    ``groups`` is a sequence of block lists, one list per frequency, or a
    mapping k -> block list.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    if isinstance(groups, dict):
        ordered = [groups[k] for k in sorted(groups)]
    else:
        ordered = sorted(groups, key=lambda bl: bl[0].k)
    n = ordered[0][0].A.shape[1]
    q = np.zeros(n) if q0 is None else np.array(q0, dtype=float, copy=True)
    history = []
    sweep_no = 0
    for blocks in ordered:
        if any(b.A.shape[1] != n for b in blocks):
            raise ValueError("all blocks must share the source grid")
        for _ in range(L):
            q = kaczmarz_sweep(blocks, q, gamma)
            sweep_no += 1
            history.append((sweep_no, blocks[0].k, sum(b.residual(q) for b in blocks)))
    if clamp:
        q = np.maximum(q, 0.0)
    cfg = {"gamma": gamma, "L": L, "frequencies": [bl[0].k for bl in ordered]}
    cfg.update(config or {})
    return ReconstructionResult(q, history, cfg)


def invert_ergodic(td_values, grid: Grid, receivers: ReceiverSet, d: int, gamma: float, sweeps: int,
                   q0=None, clamp: bool = False) -> ReconstructionResult:
    """Solve T_d(x_i) = sum_j c_d |I_j| mu_j / |x_i - y_j|^{d-1}, one block per receiver domain."""
    vals = np.asarray(getattr(td_values, "values", td_values), dtype=float)
    receivers.check_outside(grid)
    blocks = []
    for label in receivers.domains():
        sel = receivers.labels == label
        blocks.append(BlockSystem(td_matrix(receivers.points[sel], grid, d), vals[sel], float("nan"), label))
    q = np.zeros(grid.size) if q0 is None else np.array(q0, dtype=float, copy=True)
    history = []
    for s in range(1, sweeps + 1):
        q = kaczmarz_sweep(blocks, q, gamma)
        history.append((s, float("nan"), sum(b.residual(q) for b in blocks)))
    if clamp:
        q = np.maximum(q, 0.0)
    return ReconstructionResult(q, history, {"gamma": gamma, "sweeps": sweeps, "d": d})
