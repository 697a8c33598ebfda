"""Dense linear-algebra helpers shared across the package.

Rank decisions use a relative singular-value cutoff so that all subspace
computations agree on what counts as zero.
"""

import numpy as np

# relative singular-value cutoff for rank decisions
RANK_RTOL = 1e-10


def orth_columns(vectors, rtol=RANK_RTOL, floor=None):
    """Orthonormal basis (as columns) for the span of the given columns.

    `floor` is an absolute singular-value cutoff; without it an all-noise
    input would be mistaken for a genuine span of its own scale.
    """
    A = np.asarray(vectors, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[1] == 0:
        return A.copy()
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return A[:, :0]
    cut = rtol * s[0]
    if floor is not None:
        cut = max(cut, floor)
    r = int(np.sum(s > cut))
    return U[:, :r]


def nullspace(A, rtol=RANK_RTOL):
    """Orthonormal basis (columns) of the kernel of A."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.eye(A.shape[1])
    U, s, Vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    return Vh[r:].T


def lstsq_min_norm(A, b):
    """Minimum-norm least-squares solution of A x = b and the residual norm."""
    A = np.asarray(A)
    b = np.asarray(b)
    if A.shape[1] == 0:
        return np.zeros((0,), dtype=A.dtype), float(np.linalg.norm(b))
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = float(np.linalg.norm(A @ x - b))
    return x, res


def solve_complex_lstsq_as_real(A, b):
    """Solve the complex system A z = b in the least-squares sense by splitting
    into real and imaginary parts, minimizing the euclidean norm of z.

    Returns (z, residual_norm)."""
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    m, k = A.shape
    Ar = np.zeros((2 * m, 2 * k))
    Ar[:m, :k] = A.real
    Ar[:m, k:] = -A.imag
    Ar[m:, :k] = A.imag
    Ar[m:, k:] = A.real
    br = np.concatenate([b.real, b.imag])
    xr, res = lstsq_min_norm(Ar, br)
    return xr[:k] + 1j * xr[k:], res


def random_unitary(rng, k):
    """Haar-ish random unitary from a QR factorization with fixed phases."""
    Z = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R).copy()
    d[np.abs(d) < 1e-300] = 1.0
    return Q * (d / np.abs(d))
