"""Heatmap and plot emission: 16-bit PGM always, matplotlib PNG alongside."""

from __future__ import annotations

import numpy as np

from .randsrc import Grid

RC = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.titlesize": 9,
    "image.cmap": "viridis",
}


def grid_image(values, grid: Grid) -> np.ndarray:
    """Reshape nodal values (row-major, ij) to an image with y2 increasing upward.

    3D grids are sliced at the middle index of the last axis.
    """
    vals = np.asarray(values, dtype=float).reshape(grid.counts)
    if grid.dim == 3:
        vals = vals[:, :, grid.counts[2] // 2]
    return vals.T[::-1, :]


def write_pgm(path, image: np.ndarray, label: str = "") -> tuple:
    """Binary 16-bit P5 PGM, min-max normalized. Returns (vmin, vmax).

    The header comment records the affine scale so the data can be recovered:
    value = vmin + pixel / 65535 * (vmax - vmin).
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM image must be 2D")
    vmin = float(np.nanmin(img))
    vmax = float(np.nanmax(img))
    span = vmax - vmin
    scaled = np.zeros_like(img) if span == 0 else (img - vmin) / span
    pix = np.round(np.nan_to_num(scaled) * 65535).astype(">u2")
    h, w = pix.shape
    head = f"P5\n# {label} vmin={vmin!r} vmax={vmax!r}\n{w} {h}\n65535\n"
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(pix.tobytes())
    return vmin, vmax


def read_pgm(path) -> tuple:
    """Inverse of :func:`write_pgm`: (values, vmin, vmax)."""
    with open(path, "rb") as fh:
        data = fh.read()
    lines = []
    pos = 0
    while len(lines) < 4:
        end = data.index(b"\n", pos)
        lines.append(data[pos:end].decode("ascii"))
        pos = end + 1
    if lines[0] != "P5":
        raise ValueError("not a binary PGM")
    fields = dict(tok.split("=", 1) for tok in lines[1].split() if "=" in tok)
    vmin, vmax = float(fields["vmin"]), float(fields["vmax"])
    w, h = (int(v) for v in lines[2].split())
    pix = np.frombuffer(data[pos:pos + 2 * w * h], dtype=">u2").reshape(h, w)
    return vmin + pix / 65535.0 * (vmax - vmin), vmin, vmax


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_strength(path, grid: Grid, mu_true, mu_rec, title=""):
    plt = _pyplot()
    lo, hi = grid.origin, grid.upper
    extent = (lo[0], hi[0], lo[1], hi[1])
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(7.2, 3.2), constrained_layout=True)
        for ax, vals, name in zip(axes, (mu_true, mu_rec), ("exact", "reconstructed")):
            im = ax.imshow(grid_image(vals, grid), extent=extent)
            ax.set_title(name)
            ax.set_xlabel("y1")
            ax.set_ylabel("y2")
            fig.colorbar(im, ax=ax, shrink=0.85)
        if title:
            fig.suptitle(title)
        fig.savefig(path)
        plt.close(fig)


def plot_residuals(path, history):
    plt = _pyplot()
    s = [h[0] for h in history]
    r = [h[2] for h in history]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.0), constrained_layout=True)
        ax.semilogy(s, r, "o-", ms=3)
        ax.set_xlabel("sweep")
        ax.set_ylabel("residual")
        fig.savefig(path)
        plt.close(fig)


def plot_ergodic(path, estimate):
    plt = _pyplot()
    ratio = np.asarray(estimate.values) / np.asarray(estimate.reference)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.0), constrained_layout=True)
        ax.axhspan(0.85, 1.15, color="0.9")
        ax.axhline(1.0, color="0.5", lw=0.8)
        ax.plot(np.arange(1, len(ratio) + 1), ratio, "o")
        ax.set_xlabel("receiver")
        ax.set_ylabel("band average / T_d")
        fig.savefig(path)
        plt.close(fig)
