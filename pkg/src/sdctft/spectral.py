"""Orthonormal 2D DCT-II / DCT-III transforms plus the unnormalized DFT pair
used by the Fourier-domain baseline.

The forward transform scales row u by sqrt(1/M) when u = 0 and sqrt(2/M)
otherwise (same per-column with N), which makes the 1D transform matrices
orthogonal and the forward/inverse pair mutual transposes. Transforms are
computed as a separable row-pass / column-pass (two matrix products); there
is deliberately no FFT fast path for the DCT so the code stays auditable
at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

#: basis tags carried by SpectralMatrix / spectral adapters
BASIS_DCT = "dct"
BASIS_DFT_REAL = "dft-real"


def as_weight_matrix(W) -> np.ndarray:
    """Validate and return a 2D float64 matrix with at least one entry.

    Raises ValueError for empty shapes, wrong dimensionality, or
    non-finite entries.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError(f"expected a 2D matrix, got ndim={W.ndim}")
    if W.shape[0] < 1 or W.shape[1] < 1:
        raise ValueError(f"matrix must be non-empty, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ValueError("matrix contains non-finite entries")
    return W


@dataclass(frozen=True)
class SpectralMatrix:
    """Dense grid of spectral coefficients plus the basis they live in."""

    data: np.ndarray
    basis: str = BASIS_DCT

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"spectral matrix must be non-empty 2D, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("spectral matrix contains non-finite entries")
        if self.basis not in (BASIS_DCT, BASIS_DFT_REAL):
            raise ValueError(f"unknown basis {self.basis!r}")
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@lru_cache(maxsize=32)
def dct_basis_matrix(n: int) -> np.ndarray:
    """1D orthonormal DCT-II matrix C with C[u, i] = a(u) cos(pi/n (i + 1/2) u).

    a(0) = sqrt(1/n), a(u>0) = sqrt(2/n), so C @ C.T = I. Cached and
    returned read-only because adapters rebuild reconstructions from it
    every training step.
    """
    if n < 1:
        raise ValueError("basis size must be >= 1")
    i = np.arange(n, dtype=np.float64)
    u = i[:, None]
    C = np.cos(np.pi / n * (i + 0.5) * u)
    C[0, :] *= np.sqrt(1.0 / n)
    C[1:, :] *= np.sqrt(2.0 / n)
    C.flags.writeable = False
    return C


def dct2(W) -> SpectralMatrix:
    """Forward orthonormal 2D DCT-II of a real matrix."""
    W = as_weight_matrix(W)
    M, N = W.shape
    F = dct_basis_matrix(M) @ W @ dct_basis_matrix(N).T
    return SpectralMatrix(F, BASIS_DCT)


def idct2(F: SpectralMatrix) -> np.ndarray:
    """Inverse transform (DCT-III); exact inverse of :func:`dct2` up to fp error."""
    if not isinstance(F, SpectralMatrix):
        F = SpectralMatrix(np.asarray(F), BASIS_DCT)
    if F.basis != BASIS_DCT:
        raise ValueError(f"idct2 requires DCT-basis input, got basis={F.basis!r}")
    M, N = F.data.shape
    return dct_basis_matrix(M).T @ F.data @ dct_basis_matrix(N)


def idct2_sparse(entries: Iterable[tuple[int, int, float]], rows: int, cols: int) -> np.ndarray:
    """Inverse DCT of a sparse coefficient set given as (u, v, value) triples.

    Equals idct2 of the dense matrix holding those entries and zeros
    elsewhere, but only touches the selected basis functions (cost
    proportional to n * rows * cols). Duplicate or out-of-bounds indices
    are rejected.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"target shape must be non-empty, got {rows}x{cols}")
    entries = list(entries)
    if not entries:
        return np.zeros((rows, cols), dtype=np.float64)
    us = np.array([e[0] for e in entries], dtype=np.intp)
    vs = np.array([e[1] for e in entries], dtype=np.intp)
    vals = np.array([e[2] for e in entries], dtype=np.float64)
    if np.any(us < 0) or np.any(us >= rows) or np.any(vs < 0) or np.any(vs >= cols):
        raise ValueError("spectral index out of bounds")
    if len({(int(u), int(v)) for u, v in zip(us, vs)}) != len(entries):
        raise ValueError("duplicate spectral index")
    Cm = dct_basis_matrix(rows)
    Cn = dct_basis_matrix(cols)
    # sum_k vals[k] * outer(Cm[u_k], Cn[v_k]) as one (rows x k) @ (k x cols) product
    return (Cm[us, :].T * vals) @ Cn[vs, :]


def dft2_real(W) -> np.ndarray:
    """Unnormalized 2D DFT of a real matrix (complex output)."""
    W = as_weight_matrix(W)
    return np.fft.fft2(W)


def idft2_real_part(F) -> np.ndarray:
    """Real part of the (1/MN)-normalized inverse 2D DFT."""
    F = np.asarray(F, dtype=np.complex128)
    if F.ndim != 2 or F.shape[0] < 1 or F.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D spectrum, got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        raise ValueError("spectrum contains non-finite entries")
    return np.fft.ifft2(F).real


def spectral_entries(indices: Sequence[tuple[int, int]], values: np.ndarray):
    """Zip an index list and a coefficient vector into (u, v, value) triples."""
    if len(indices) != len(values):
        raise ValueError("index list and coefficient vector disagree in length")
    return [(u, v, float(c)) for (u, v), c in zip(indices, values)]
