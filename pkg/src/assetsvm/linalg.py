"""Dense symmetric eigendecomposition and the projections the solver needs.

The eigensolver is a cyclic Jacobi iteration: at the few-hundred-row scale
of the sampled kernel blocks factorized here, its O(s^3) cost is cheap and
its behavior is simple and deterministic (eigenvalues sorted nonincreasing,
ties broken by original diagonal position).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 60


class ConvergenceError(RuntimeError):
    """Sweep budget exhausted before the off-diagonal mass fell below tolerance."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Column-orthonormal eigenvectors with nonincreasing eigenvalues."""

    vectors: np.ndarray
    values: np.ndarray


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    # One Jacobi rotation zeroing a[p, q]; updates a (symmetric) and the
    # accumulated eigenvector matrix v in place.
    apq = a[p, q]
    app = a[p, p]
    aqq = a[q, q]
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 1.0 / (2.0 * theta)
    else:
        t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    a[p, :] = a[:, p]
    a[q, :] = a[:, q]
    a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
    a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
    a[p, q] = 0.0
    a[q, p] = 0.0

    vec_p = v[:, p].copy()
    v[:, p] = c * vec_p - s * v[:, q]
    v[:, q] = s * vec_p + c * v[:, q]


def sym_eig(
    matrix: np.ndarray,
    tol: float = OFFDIAG_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Convergence is declared when the off-diagonal Frobenius norm drops
    below ``tol`` relative to the Frobenius norm of the input.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if a.size and float(np.max(np.abs(a - a.T))) > 1e-12 * max(1.0, scale):
        raise ValueError("matrix must be symmetric")

    size = a.shape[0]
    if size == 0:
        return EigenDecomposition(np.zeros((0, 0)), np.zeros(0))
    a = (a + a.T) / 2.0
    v = np.eye(size)
    stop = tol * max(float(np.linalg.norm(a)), np.finfo(float).tiny)

    sweeps = 0
    while True:
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        if float(np.linalg.norm(off)) <= stop:
            break
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi iteration did not converge within {max_sweeps} sweeps"
            )
        for p in range(size - 1):
            for q in range(p + 1, size):
                if a[p, q] != 0.0:
                    _rotate(a, v, p, q)
        sweeps += 1

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(np.ascontiguousarray(v[:, order]), values[order])


def project_ball(vector: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the origin-centered ball of given radius.

    Returns the input array itself when it is already inside.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    vec = np.asarray(vector, dtype=np.float64)
    nrm = float(np.linalg.norm(vec))
    if nrm <= radius:
        return vec
    return vec * (radius / nrm)


def clamp_interval(value: float, bound: float) -> float:
    """Clamp a scalar into [-bound, bound] (bound >= 0)."""
    if bound < 0.0:
        raise ValueError(f"bound must be nonnegative, got {bound}")
    return min(max(float(value), -bound), bound)
