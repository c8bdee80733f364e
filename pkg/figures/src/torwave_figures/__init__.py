"""Figure scripts for torwave simulation outputs."""

__version__ = "0.1.0"

from .archive import ArchiveFormatError, SnapshotArchive, read_archive, write_archive
from .render import CsvFormatError, read_norms_csv, render_heatmaps, render_norms

__all__ = [
    "ArchiveFormatError",
    "CsvFormatError",
    "SnapshotArchive",
    "read_archive",
    "read_norms_csv",
    "render_heatmaps",
    "render_norms",
    "write_archive",
]
