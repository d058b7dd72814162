"""Dense real matrix substrate: symmetric/skew constructors, commutators,
the trace inner product, a cyclic-Jacobi symmetric eigensolver, and a
pivoted Gram-Schmidt numerical rank.

All functions are pure and operate on plain ``numpy`` float arrays.  The
validating constructors (:func:`sym_matrix`, :func:`skew_matrix`) are the
only place finiteness and (anti)symmetry are enforced; downstream code may
assume both.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

#: Asymmetry above this (max-abs, on the raw input) is rejected instead of
#: being projected away; below it the constructors project exactly.
ASYM_REJECT_TOL = 1e-8


class ConvergenceError(RuntimeError):
    """Iterative eigensolve failed to reach its target within the sweep cap."""


def max_abs(a: np.ndarray) -> float:
    """Entrywise max-abs norm; 0.0 for empty arrays."""
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def frob_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    return a


def sym_matrix(a, reject_tol: float = ASYM_REJECT_TOL) -> np.ndarray:
    """Validating constructor for a symmetric matrix.

    Projects ``(a + a.T)/2`` so the result is exactly symmetric, but rejects
    inputs whose asymmetry exceeds ``reject_tol`` in max-abs.
    """
    a = as_square(a)
    defect = max_abs(a - a.T)
    if defect > reject_tol:
        raise ValueError(f"matrix is not symmetric (defect {defect:.3e} > {reject_tol:.1e})")
    return (a + a.T) / 2.0


def skew_matrix(a, reject_tol: float = ASYM_REJECT_TOL) -> np.ndarray:
    """Validating constructor for a skew-symmetric matrix (projects, rejects above tol)."""
    a = as_square(a)
    defect = max_abs(a + a.T)
    if defect > reject_tol:
        raise ValueError(f"matrix is not skew-symmetric (defect {defect:.3e} > {reject_tol:.1e})")
    return (a - a.T) / 2.0


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Unconditional symmetric projection (a + a.T)/2."""
    return (a + a.T) / 2.0


def _check_same_square(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """ab - ba."""
    _check_same_square(a, b)
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """ab + ba.  For a symmetric and b skew the result is skew-symmetric."""
    _check_same_square(a, b)
    return a @ b + b @ a


def frobenius_inner(x: np.ndarray, y: np.ndarray) -> float:
    """trace(x y), the inner product making Sym(n) self-dual."""
    _check_same_square(x, y)
    return float(np.einsum("ij,ji->", x, y))


def random_sym(n: int, rng: np.random.Generator, normalized: bool = True) -> np.ndarray:
    """Symmetrized standard-normal matrix, Frobenius-normalized by default."""
    x = symmetrize(rng.standard_normal((n, n)))
    if normalized:
        nrm = frob_norm(x)
        if nrm > 0:
            x = x / nrm
    return x


def random_skew(n: int, rng: np.random.Generator, normalized: bool = True) -> np.ndarray:
    a = rng.standard_normal((n, n))
    x = (a - a.T) / 2.0
    if normalized:
        nrm = frob_norm(x)
        if nrm > 0:
            x = x / nrm
    return x


def eig_sym(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : symmetric (n, n) array.  Only the symmetric part is used.
    tol : relative off-diagonal target; sweeps stop once the off-diagonal
        Frobenius mass is below ``tol * ||a||_F``.
    max_sweeps : sweep cap before :class:`ConvergenceError` is raised.

    Returns
    -------
    (eigenvalues, eigenvectors)
        Eigenvalues ascending; eigenvector matrix orthogonal with columns
        matching the eigenvalue order, a = Q diag(w) Q^T.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = symmetrize(as_square(a))
    n = a.shape[0]
    q = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), q
    scale = frob_norm(a)
    if scale == 0.0:
        return np.zeros(n), q

    def offdiag(m):
        return frob_norm(m - np.diag(m.diagonal()))

    for _ in range(max_sweeps):
        if offdiag(a) <= tol * scale:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = float(a[p, r])
                if apr == 0.0:
                    continue
                # Golub & Van Loan sym.schur2 rotation annihilating a[p, r],
                # with the asymptotic branch guarding against overflow when
                # the pivot is many orders below the diagonal gap
                diff = float(a[r, r] - a[p, p])
                if abs(diff) > 1e8 * abs(apr):
                    t = apr / diff
                else:
                    tau = diff / (2.0 * apr)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p, col_r = a[:, p].copy(), a[:, r].copy()
                a[:, p] = c * col_p - s * col_r
                a[:, r] = s * col_p + c * col_r
                row_p, row_r = a[p, :].copy(), a[r, :].copy()
                a[p, :] = c * row_p - s * row_r
                a[r, :] = s * row_p + c * row_r
                qp, qr = q[:, p].copy(), q[:, r].copy()
                q[:, p] = c * qp - s * qr
                q[:, r] = s * qp + c * qr
    else:
        raise ConvergenceError(f"Jacobi eigensolve did not converge in {max_sweeps} sweeps")

    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], q[:, order]


def numerical_rank(vectors: Sequence[np.ndarray] | np.ndarray, tol: float = 1e-9) -> int:
    """Numerical rank of a set of vectors (matrices are flattened).

    Modified Gram-Schmidt with column pivoting; counts pivot norms exceeding
    ``tol`` times the largest pivot norm.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        cols = [vectors[:, j] for j in range(vectors.shape[1])]
    else:
        cols = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if len(cols) == 0:
        raise ValueError("numerical_rank of an empty set")
    length = cols[0].size
    if any(c.size != length for c in cols):
        raise ValueError("vectors have inconsistent lengths")
    work = np.column_stack(cols)

    rank = 0
    reference = None
    remaining = list(range(work.shape[1]))
    while remaining:
        norms = [float(np.linalg.norm(work[:, j])) for j in remaining]
        j_best = int(np.argmax(norms))
        best = norms[j_best]
        if reference is None:
            if best == 0.0:
                return 0
            reference = best
        if best <= tol * reference:
            break
        pivot = remaining.pop(j_best)
        qvec = work[:, pivot] / best
        rank += 1
        for j in remaining:
            work[:, j] -= (qvec @ work[:, j]) * qvec
    return rank
