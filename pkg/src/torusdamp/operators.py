"""Dense operators on grid functions: spectral building blocks and norms.

The Laplacian circulant is assembled from an explicitly symmetrized even real
kernel, so its matrix is exactly symmetric rather than symmetric to
O(n^2 * eps) FFT rounding; the identity checks downstream (imaginary-part
positivity, the commutator identity) sit directly on top of this exactness.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .grid import GridFunction, PeriodicGrid

__all__ = [
    "OperatorMatrix",
    "laplacian_matrix",
    "multiplier_matrix",
    "operator_norm",
]


@dataclass(frozen=True)
class OperatorMatrix:
    """A dense matrix acting on the nodal values of grid functions.

    Because the L2 quadrature weight 2*pi/n is uniform, the operator's
    L2 -> L2 norm equals the plain spectral norm of `entries`, and the adjoint
    with respect to the L2 pairing is the conjugate transpose.
    """

    grid: PeriodicGrid
    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=np.complex128)
        n = self.grid.n
        if m.shape != (n, n):
            raise ValueError(f"entries shape {m.shape} does not match grid size {n}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.grid.n

    def apply(self, u: GridFunction) -> GridFunction:
        if u.grid != self.grid:
            raise ValueError("operator and argument live on different grids")
        return GridFunction(self.grid, self.entries @ u.values)

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.entries.conj().T)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.grid != self.grid:
            raise ValueError("operator grids differ")
        return OperatorMatrix(self.grid, self.entries @ other.entries)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.grid != self.grid:
            raise ValueError("operator grids differ")
        return OperatorMatrix(self.grid, self.entries + other.entries)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.grid != self.grid:
            raise ValueError("operator grids differ")
        return OperatorMatrix(self.grid, self.entries - other.entries)

    def __rmul__(self, scalar: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, scalar * self.entries)


def _circulant_from_kernel(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return c[idx]


def laplacian_matrix(g: PeriodicGrid) -> np.ndarray:
    """Dense spectral -d^2/dx^2: real, exactly symmetric, PSD circulant."""
    k2 = g.frequencies.astype(np.float64) ** 2
    c = np.fft.ifft(k2).real
    # even part: c[m] <- (c[m] + c[(n-m) mod n]) / 2, exact symmetry
    c = 0.5 * (c + np.roll(c[::-1], 1))
    return _circulant_from_kernel(c)


def multiplier_matrix(g: PeriodicGrid, values_at_frequencies: np.ndarray) -> np.ndarray:
    """Dense Fourier multiplier: values indexed in FFT frequency layout."""
    vals = np.asarray(values_at_frequencies, dtype=np.complex128)
    if vals.shape != (g.n,):
        raise ValueError("multiplier values must match the frequency count")
    c = np.fft.ifft(vals)
    return _circulant_from_kernel(c)


def operator_norm(m: np.ndarray, tol: float = 1e-8, seed: int = 7) -> float:
    """L2 -> L2 (spectral) norm: exact SVD at n <= 1024, power iteration above.

    Power iteration runs on m* m with a seeded start and relative tolerance
    tol; the returned Rayleigh estimate approaches the true norm from below.
    """
    m = np.asarray(m)
    n = m.shape[0]
    if n <= 1024:
        return float(scipy.linalg.svdvals(m)[0])
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    mh = m.conj().T
    prev = 0.0
    for _ in range(500):
        w = mh @ (m @ v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
        cur = np.sqrt(s)
        if prev > 0 and abs(cur - prev) <= tol * cur:
            return float(cur)
        prev = cur
    return float(prev)
