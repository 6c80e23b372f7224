"""End-to-end pipelines: measurement synthesis, block assembly and inversion."""

from __future__ import annotations

import numpy as np

from .estimators import (
    MeasurementTable,
    band_frequencies,
    ergodic_average,
    expected_measurement,
    measurement_mc,
    reference_td,
)
from .forward import ReceiverSet, sweep
from .inverse import ReconstructionResult, assemble_block, invert
from .randsrc import Grid, StrengthField, eval_strength, fractional_increments, white_noise_matrix

DEFAULT_DOMAIN_LOWERS = ((1.5, 1.5), (1.5, -2.5), (-2.5, -2.5), (-2.5, 1.5))


def default_grid(n: int = 20) -> Grid:
    """D = [-1, 1]^2 with n intervals per axis (spacing 2/n)."""
    return Grid.from_bounds((-1.0, -1.0), (1.0, 1.0), n)


def default_receivers(n: int = 40, lowers=DEFAULT_DOMAIN_LOWERS, side: float = 1.0) -> ReceiverSet:
    """U_1..U_4 with (n+1)^2 receivers each."""
    return ReceiverSet.from_boxes(lowers, side, n)


def synthesize_measurements(receivers: ReceiverSet, grid: Grid, field: StrengthField, frequencies,
                            P: int, seed: int, kind: str = "difference",
                            noise: np.ndarray | None = None) -> MeasurementTable:
    """Monte Carlo measurement table; one noise matrix shared by every frequency."""
    freqs = np.asarray(frequencies, dtype=float)
    if noise is None:
        noise = white_noise_matrix(grid, seed, P)
    vals = np.empty((len(receivers), len(freqs)))
    errs = np.empty_like(vals)
    for label in receivers.domains():
        sel = np.flatnonzero(receivers.labels == label)
        sub = receivers.subset(label)
        samples = sweep(sub, freqs, field, grid, P, seed, noise=noise)
        table = measurement_mc(samples, kind)
        vals[sel] = table.values
        errs[sel] = table.stderr
    return MeasurementTable(vals, errs, freqs, kind, receivers)


def exact_measurements(receivers: ReceiverSet, grid: Grid, field: StrengthField, frequencies,
                       kind: str = "difference") -> MeasurementTable:
    """Noise-free expectation of the measurement (quadrature of the kernel against mu)."""
    freqs = np.asarray(frequencies, dtype=float)
    vals = np.column_stack([expected_measurement(receivers, grid, field, k, kind) for k in freqs])
    return MeasurementTable(vals, np.zeros_like(vals), freqs, kind, receivers)


def reconstruct(table: MeasurementTable, receivers: ReceiverSet, grid: Grid, gamma: float, L: int,
                frequencies=None, clamp: bool = False) -> ReconstructionResult:
    """Assemble one block per (frequency, domain) and run the Kaczmarz inversion."""
    freqs = table.frequencies if frequencies is None else np.asarray(frequencies, dtype=float)
    groups = {}
    for k in sorted(freqs):
        groups[float(k)] = [
            assemble_block(receivers.subset(label), grid, float(k), table, label=label)
            for label in receivers.domains()
        ]
    return invert(groups, gamma, L, clamp=clamp, config={"kind": table.kind})


def relative_error(q, q_true) -> float:
    q_true = np.asarray(q_true, dtype=float)
    return float(np.linalg.norm(np.asarray(q) - q_true) / np.linalg.norm(q_true))


def peak_offset(q, grid: Grid, target) -> np.ndarray:
    """Per-axis offset, in grid cells, of the maximum of q from ``target``."""
    node = grid.nodes()[int(np.argmax(q))]
    return np.abs(node - np.asarray(target)) / np.asarray(grid.spacing)


def true_strength(field: StrengthField, grid: Grid) -> np.ndarray:
    return eval_strength(field, grid.nodes())


def ergodic_run(receivers: ReceiverSet, grid: Grid, field: StrengthField, T: float, nodes: int,
                m: float, seed: int, path: int = 0):
    """Single-path frequency sweep over [T, 2T]; returns the estimate with its reference."""
    freqs = band_frequencies(T, nodes)
    noise = None if m == 0 else fractional_increments(grid, m, seed, 1, first_path=path)
    samples = sweep(receivers, freqs, field, grid, 1, seed, first_path=path, noise=noise)
    est = ergodic_average(samples, m, grid.dim)
    est.reference = reference_td(receivers.points, field, grid, grid.dim)
    return est
