"""Heatmap and norm-curve rendering from simulator output files.

Everything here is deterministic given the inputs: fixed figure geometry,
fixed colormap, and no timestamp metadata in the written images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .archive import SnapshotArchive

TWO_PI = 2.0 * np.pi
_CMAP = "viridis"
_DPI = 100
_NO_TIMESTAMP = {"Software": None}


def render_heatmaps(
    archive: SnapshotArchive, out_dir: str | Path, global_norm: bool = False
) -> list[Path]:
    """One magnitude heatmap per snapshot, with guides at x1 = +/- pi/2.

    By default each panel is normalized to its own peak; ``global_norm``
    shares one scale across the archive.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vmax_global = max((float(np.abs(f).max()) for f in archive.fields), default=0.0)
    written: list[Path] = []
    for i, (t, f) in enumerate(zip(archive.times, archive.fields)):
        mag = np.abs(f)
        vmax = vmax_global if global_norm else float(mag.max())
        if vmax == 0.0:
            vmax = 1.0
        fig, ax = plt.subplots(figsize=(5.0, 4.0), dpi=_DPI)
        # transpose so x1 runs along the horizontal axis
        im = ax.imshow(
            mag.T,
            origin="lower",
            extent=(0.0, TWO_PI, 0.0, TWO_PI),
            cmap=_CMAP,
            vmin=0.0,
            vmax=vmax,
            interpolation="nearest",
        )
        for guide in (np.pi / 2, 3 * np.pi / 2):
            ax.axvline(guide, color="w", lw=0.8, ls="--", alpha=0.7)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.set_title(f"|u| at t = {t:g}")
        fig.colorbar(im, ax=ax)
        fig.tight_layout()
        path = out / f"heatmap_{i:03d}.png"
        fig.savefig(path, metadata=_NO_TIMESTAMP)
        plt.close(fig)
        written.append(path)
    return written


class CsvFormatError(ValueError):
    """A norm-series CSV is empty or its columns do not line up."""


def read_norms_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Parse a norm-series CSV into (column names, data matrix)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise CsvFormatError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header[0] != "t" or len(header) < 2:
        raise CsvFormatError(f"{path}: expected a 't,<norms...>' header, got {lines[0]!r}")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise CsvFormatError(f"{path}: row has {len(cells)} cells, header has {len(header)}")
        rows.append([float(c) for c in cells])
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return header, np.asarray(rows)


def render_norms(
    csv_paths,
    labels,
    out: str | Path,
    column: str = "L2",
    log_scale: bool = False,
) -> Path:
    """Overlay one norm-vs-time curve per input CSV in a single figure."""
    csv_paths = [Path(p) for p in csv_paths]
    labels = list(labels)
    if len(labels) != len(csv_paths):
        raise ValueError(f"{len(csv_paths)} files but {len(labels)} labels")
    if not csv_paths:
        raise ValueError("need at least one CSV")
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=_DPI)
    try:
        for path, label in zip(csv_paths, labels):
            header, data = read_norms_csv(path)
            if column not in header:
                raise CsvFormatError(f"{path}: no column {column!r} among {header}")
            ax.plot(data[:, 0], data[:, header.index(column)], label=label)
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(column)
        ax.legend()
        fig.tight_layout()
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata=_NO_TIMESTAMP)
    finally:
        plt.close(fig)
    return Path(out)
