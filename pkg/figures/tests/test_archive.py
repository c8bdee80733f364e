"""Archive parser: bit-exact round trips and malformed-input rejection."""

import struct

import numpy as np
import pytest

from torwave_figures.archive import (
    ArchiveFormatError,
    read_archive,
    write_archive,
)


def synthetic(n1=12, n2=10, count=3, seed=0):
    rng = np.random.default_rng(seed)
    times = [0.5 * k for k in range(count)]
    fields = [rng.standard_normal((n1, n2)) + 1j * rng.standard_normal((n1, n2)) for _ in range(count)]
    return times, fields


class TestRoundTrip:
    def test_values_bit_exact(self, tmp_path):
        times, fields = synthetic()
        path = tmp_path / "arc.bin"
        write_archive(path, times, fields)
        arc = read_archive(path)
        assert (arc.n1, arc.n2, arc.count) == (12, 10, 3)
        np.testing.assert_array_equal(arc.times, times)
        for orig, back in zip(fields, arc.fields):
            assert back.tobytes() == orig.astype(complex).tobytes()

    def test_file_bytes_reproduced(self, tmp_path):
        times, fields = synthetic(seed=1)
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        write_archive(p1, times, fields)
        arc = read_archive(p1)
        write_archive(p2, arc.times, arc.fields)
        assert p1.read_bytes() == p2.read_bytes()


class TestValidation:
    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.bin"
        p.write_bytes(struct.pack("<4sIIII", b"NOPE", 1, 8, 8, 0))
        with pytest.raises(ArchiveFormatError, match="magic"):
            read_archive(p)

    def test_bad_version(self, tmp_path):
        p = tmp_path / "bad.bin"
        p.write_bytes(struct.pack("<4sIIII", b"ATRL", 7, 8, 8, 0))
        with pytest.raises(ArchiveFormatError, match="version"):
            read_archive(p)

    def test_truncated_payload(self, tmp_path):
        times, fields = synthetic(count=2)
        p = tmp_path / "trunc.bin"
        write_archive(p, times, fields)
        raw = p.read_bytes()
        p.write_bytes(raw[:-16])
        with pytest.raises(ArchiveFormatError, match="bytes"):
            read_archive(p)

    def test_too_short_for_header(self, tmp_path):
        p = tmp_path / "tiny.bin"
        p.write_bytes(b"ATR")
        with pytest.raises(ArchiveFormatError, match="short"):
            read_archive(p)

    def test_writer_validation(self, tmp_path):
        with pytest.raises(ValueError, match="at least one"):
            write_archive(tmp_path / "x.bin", [], [])
        with pytest.raises(ValueError, match="share"):
            write_archive(
                tmp_path / "x.bin",
                [0.0, 1.0],
                [np.zeros((4, 4), complex), np.zeros((4, 6), complex)],
            )
