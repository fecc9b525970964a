"""Dense complex linear algebra for Hermitian matrices of dimension 2**n, n <= ~6.

Everything here is a pure function of its inputs; matrices are numpy
complex128 arrays in row-major layout. Randomized constructors take an
explicit numpy Generator so callers control the stream.
"""

from __future__ import annotations

import numpy as np

# Hermiticity check tolerance (entrywise) used by constructors.
HERMITIAN_ATOL = 1e-12
# Eigenvalues at or below this are outside the matrix-log domain.
LOG_EIG_FLOOR = 1e-14


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def hermitianize(m: np.ndarray) -> np.ndarray:
    """Hermitian part (M + M†)/2; the canonical re-symmetrization."""
    return (m + m.conj().T) / 2


def is_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return m.shape[0] == m.shape[1] and bool(np.all(np.abs(m - m.conj().T) <= atol))


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with real eigenvalues sorted
    descending and eigenvectors as matching orthonormal columns, so that
    V @ diag(w) @ V† reconstructs the input.
    """
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigendecomposition did not converge within the LAPACK iteration cap "
            f"(dim={m.shape[0]}, frobenius_norm={np.linalg.norm(m):.6g})"
        ) from exc
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def mat_exp(m: np.ndarray) -> np.ndarray:
    """exp(M) for Hermitian M via the spectral formula; result is Hermitian PD."""
    w, v = hermitian_eig(m)
    return hermitianize((v * np.exp(w)) @ v.conj().T)


def mat_log(m: np.ndarray) -> np.ndarray:
    """log(M) for Hermitian positive definite M.

    Raises ValueError when any eigenvalue is <= 1e-14; callers working on the
    clipped state domain must mix toward the identity first.
    """
    w, v = hermitian_eig(m)
    if w[-1] <= LOG_EIG_FLOOR:
        raise ValueError(
            f"matrix log needs eigenvalues > {LOG_EIG_FLOOR:g}, got min {w[-1]:.6g}"
        )
    return hermitianize((v * np.log(w)) @ v.conj().T)


def trace_inner(x: np.ndarray, y: np.ndarray) -> complex:
    """Inner trace product Tr(x† y); real up to roundoff for Hermitian pairs."""
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return complex(np.sum(x.conj() * y))


def nuclear_norm(m: np.ndarray) -> float:
    """Sum of absolute eigenvalues (equals the singular-value l1 norm for Hermitian m)."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def spectral_norm(m: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with index (i1*m2+i2, j1*n2+j2) -> A[i1,j1]*B[i2,j2]."""
    return np.kron(a, b)


def partial_trace(m: np.ndarray, keep_dims: int, trace_dims: int) -> np.ndarray:
    """Trace out the second tensor factor of a (keep*trace) x (keep*trace) matrix."""
    d = keep_dims * trace_dims
    if m.shape != (d, d):
        raise ValueError(f"expected shape {(d, d)}, got {m.shape}")
    return np.einsum("ikjk->ij", m.reshape(keep_dims, trace_dims, keep_dims, trace_dims))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: complex Ginibre matrix, QR, then fix the R phases."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix with i.i.d. complex Gaussian entries, symmetrized."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return hermitianize(g)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random state under the Hilbert-Schmidt measure: G G† / Tr(G G†), G Ginibre."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return hermitianize(rho / np.trace(rho).real)
