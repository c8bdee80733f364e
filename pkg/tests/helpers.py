"""Shared test utilities: independent dense assembly of the model operator.

The dense oracle builds the operator matrix in the Fourier basis directly from
the convolution theorem (pointwise multiplication on the grid is circular
convolution of coefficients), with the unpaired Nyquist rows and columns
zeroed. It deliberately shares no code with the matrix-free application path.
"""

from __future__ import annotations

import numpy as np


def fourier_index_pairs(n1: int, n2: int) -> np.ndarray:
    """Integer frequencies (k1, k2) for each flattened coefficient index."""
    k1 = np.fft.fftfreq(n1, 1.0 / n1).astype(int)
    k2 = np.fft.fftfreq(n2, 1.0 / n2).astype(int)
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    return np.stack([K1.ravel(), K2.ravel()], axis=1)


def dense_convolution_matrix(w_grid: np.ndarray) -> np.ndarray:
    """Matrix of coefficient-space circular convolution by the grid function w."""
    n1, n2 = w_grid.shape
    w_hat = np.fft.fft2(w_grid) / (n1 * n2)
    pairs = fourier_index_pairs(n1, n2)
    d1 = (pairs[:, None, 0] - pairs[None, :, 0]) % n1
    d2 = (pairs[:, None, 1] - pairs[None, :, 1]) % n2
    return w_hat[d1, d2]


def resolved_mask_flat(n1: int, n2: int) -> np.ndarray:
    m = np.ones((n1, n2))
    m[n1 // 2, :] = 0.0
    m[:, n2 // 2] = 0.0
    return m.ravel()


def dense_operator_matrix(
    m_values: np.ndarray,
    w_grid: np.ndarray,
    shift: complex = 0.0,
) -> np.ndarray:
    """Dense Fourier-basis matrix of Pi (m(D) + W) Pi - shift.

    ``m_values`` is the tabulated multiplier on the (n1, n2) frequency set,
    ``w_grid`` the nodal values of the multiplication part (potential and/or
    damping), ``Pi`` the resolved-mode projection. The shift acts on the full
    space, matching the matrix-free application.
    """
    n1, n2 = w_grid.shape
    r = resolved_mask_flat(n1, n2)
    A = np.diag(m_values.ravel().astype(complex)) + dense_convolution_matrix(w_grid)
    A = (r[:, None] * A) * r[None, :]
    return A - shift * np.eye(n1 * n2)


def coeffs_of(values: np.ndarray) -> np.ndarray:
    n1, n2 = values.shape
    return (np.fft.fft2(values) / (n1 * n2)).ravel()


def values_of(coeffs: np.ndarray, n1: int, n2: int) -> np.ndarray:
    return np.fft.ifft2(coeffs.reshape(n1, n2)) * (n1 * n2)
