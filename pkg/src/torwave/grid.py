"""Discrete torus geometry, fields, Fourier transforms and Sobolev norms.

Conventions used throughout the package:

* The domain is ``[0, 2pi)^2`` with periodic identification; nodes are
  ``x_j = 2 pi j / n`` per axis.
* ``to_fourier`` returns coefficients ``u_hat(k) = (1/(n1*n2)) * sum_x u(x) exp(-i k.x)``,
  so a pure plane wave ``exp(i k.x)`` has coefficient exactly 1 at ``k``.
* Integer frequencies run over ``k in [-n/2, n/2)`` per axis and are stored in
  numpy FFT order ``0, 1, ..., n/2-1, -n/2, ..., -1``.
* The unpaired Nyquist frequencies ``k1 = -n1/2`` and ``k2 = -n2/2`` are zeroed
  by every transform-based operator application (multipliers and pointwise
  coefficient products); the bare transforms themselves are exact inverses.
* ``inner(u, v) = (2pi/n1)(2pi/n2) sum_x u(x) conj(v(x))`` approximates the
  Lebesgue L2 pairing; ``hs_norm(u, s)^2 = (2pi)^2 sum_k <k>^(2s) |u_hat(k)|^2``
  with ``<k> = sqrt(1 + |k|^2)``, so the two agree at ``s = 0`` (Parseval).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np

TWO_PI = 2.0 * np.pi

Representation = Literal["grid", "fourier"]


@dataclass(frozen=True)
class TorusGrid:
    """Uniform n1 x n2 discretization of the 2-torus.

    Parameters
    ----------
    n1, n2 : int
        Number of modes (= nodes) per axis. Must be even and at least 8.
    """

    n1: int
    n2: int

    def __post_init__(self) -> None:
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if n < 8 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")

    @cached_property
    def x1(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n1) / self.n1

    @cached_property
    def x2(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n2) / self.n2

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates (X1, X2), each of shape (n1, n2)."""
        return tuple(np.meshgrid(self.x1, self.x2, indexing="ij"))

    @cached_property
    def k1(self) -> np.ndarray:
        return np.fft.fftfreq(self.n1, 1.0 / self.n1).astype(int)

    @cached_property
    def k2(self) -> np.ndarray:
        return np.fft.fftfreq(self.n2, 1.0 / self.n2).astype(int)

    @cached_property
    def kmesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer frequency meshes (K1, K2), each of shape (n1, n2)."""
        return tuple(np.meshgrid(self.k1, self.k2, indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        K1, K2 = self.kmesh
        return (K1 * K1 + K2 * K2).astype(float)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """1.0 on resolved modes, 0.0 on the unpaired Nyquist row/column."""
        m = np.ones((self.n1, self.n2))
        m[self.n1 // 2, :] = 0.0
        m[:, self.n2 // 2] = 0.0
        return m

    @property
    def cell_area(self) -> float:
        return (TWO_PI / self.n1) * (TWO_PI / self.n2)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex scalar field on a torus grid.

    ``rep`` selects between the nodal representation (values at grid points)
    and the coefficient representation (values indexed by integer frequencies
    in FFT storage order). Fields are immutable; the values array is marked
    read-only at construction.
    """

    grid: TorusGrid
    values: np.ndarray
    rep: Representation = "grid"

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not (np.all(np.isfinite(v.real)) and np.all(np.isfinite(v.imag))):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, rep: Representation | None = None) -> "Field":
        return Field(self.grid, values, self.rep if rep is None else rep)


def constant_field(grid: TorusGrid, value: complex = 1.0) -> Field:
    return Field(grid, np.full(grid.shape, value, dtype=complex))


def plane_wave(grid: TorusGrid, k1: int, k2: int) -> Field:
    X1, X2 = grid.mesh
    return Field(grid, np.exp(1j * (k1 * X1 + k2 * X2)))


def random_field(grid: TorusGrid, rng: np.random.Generator, resolved: bool = True) -> Field:
    """Gaussian random field; with ``resolved=True`` the Nyquist modes are zeroed."""
    v = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    f = Field(grid, v)
    return project_resolved(f) if resolved else f


@dataclass(frozen=True)
class Multiplier:
    """Real Fourier multiplier ``k -> m(k)`` on integer frequency pairs.

    ``symbol`` must accept integer arrays (K1, K2) and return real values.
    """

    symbol: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = ""

    def table(self, grid: TorusGrid) -> np.ndarray:
        """Tabulated values on the grid's frequency set (real, validated)."""
        K1, K2 = grid.kmesh
        m = np.asarray(self.symbol(K1, K2), dtype=float)
        m = np.broadcast_to(m, grid.shape)
        if not np.all(np.isfinite(m)):
            raise ValueError(f"multiplier {self.name!r} is not finite on the frequency set")
        return m

    def bound(self, grid: TorusGrid) -> float:
        """Recorded operator-norm bound sup_k |m(k)| over the frequency set."""
        return float(np.max(np.abs(self.table(grid))))


def identity_multiplier() -> Multiplier:
    return Multiplier(lambda K1, K2: np.ones_like(K1, dtype=float), name="1")


def _require_same_grid(u: Field, v: Field) -> None:
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid.shape} vs {v.grid.shape}")


def to_fourier(f: Field) -> Field:
    """Forward transform to plane-wave coefficients (identity if already there)."""
    if f.rep == "fourier":
        return f
    coeffs = np.fft.fft2(f.values) / (f.grid.n1 * f.grid.n2)
    return Field(f.grid, coeffs, rep="fourier")


def to_grid(f: Field) -> Field:
    """Inverse transform to nodal values (identity if already there)."""
    if f.rep == "grid":
        return f
    values = np.fft.ifft2(f.values) * (f.grid.n1 * f.grid.n2)
    return Field(f.grid, values, rep="grid")


def project_resolved(f: Field) -> Field:
    """Zero the unpaired Nyquist modes, returning a field in the input representation."""
    fh = to_fourier(f)
    proj = Field(f.grid, fh.values * f.grid.nyquist_mask, rep="fourier")
    return proj if f.rep == "fourier" else to_grid(proj)


def apply_multiplier(f: Field, m: Multiplier) -> Field:
    """Apply ``m(D)``: multiply coefficients by m(k), Nyquist modes zeroed."""
    fh = to_fourier(f)
    out = fh.values * m.table(f.grid) * f.grid.nyquist_mask
    result = Field(f.grid, out, rep="fourier")
    return result if f.rep == "fourier" else to_grid(result)


def inner(u: Field, v: Field) -> complex:
    """Discrete L2 pairing, linear in ``u`` and conjugate-linear in ``v``."""
    _require_same_grid(u, v)
    ug, vg = to_grid(u), to_grid(v)
    return complex(ug.grid.cell_area * np.sum(ug.values * np.conj(vg.values)))


def l2_norm(u: Field) -> float:
    return float(np.sqrt(max(inner(u, u).real, 0.0)))


def hs_norm(u: Field, s: float) -> float:
    """Sobolev norm of order ``s`` with the Japanese bracket weight <k>."""
    uh = to_fourier(u)
    w = (1.0 + u.grid.ksq) ** s
    return float(TWO_PI * np.sqrt(np.sum(w * np.abs(uh.values) ** 2)))


def hs_norms(u: Field, orders: list[float] | tuple[float, ...]) -> dict[float, float]:
    """Several Sobolev norms from a single transform."""
    uh = to_fourier(u)
    e = np.abs(uh.values) ** 2
    base = 1.0 + u.grid.ksq
    return {s: float(TWO_PI * np.sqrt(np.sum(base**s * e))) for s in orders}
