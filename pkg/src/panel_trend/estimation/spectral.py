"""
Leading eigenpair of symmetric PSD matrices, plus a cyclic Jacobi oracle for tests.

The production path is power iteration from the fixed start vector (1, ..., 1) / sqrt(N).
Eigenvectors are oriented so their entries sum to a nonnegative number; when the sum is
numerically zero the entry of largest magnitude is made positive.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

import src.panel_trend.core.config as config
from src.panel_trend.core.exceptions import AsymmetricMatrixError, NonConvergenceError, OracleError

logger = logging.getLogger(__name__)

STAGNATION_CHECK_AFTER = 20
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: float
    vector: np.ndarray
    iterations: int
    residual: float
    degenerate: bool = False


def _as_symmetric(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        logger.error(f"Expected a non-empty square matrix, got shape {m.shape}.")
        raise AsymmetricMatrixError(f"Expected a non-empty square matrix, got shape {m.shape}")
    scale = max(float(np.max(np.abs(m))), 1.0)
    asymmetry = float(np.max(np.abs(m - m.T)))
    if asymmetry > SYMMETRY_TOL * scale:
        logger.error(f"Matrix asymmetry {asymmetry:.3e} exceeds tolerance.")
        raise AsymmetricMatrixError(f"Matrix is not symmetric (max |M - M'| = {asymmetry:.3e})")
    return m


def orient(vector: np.ndarray) -> np.ndarray:
    """Applies the sign convention to a unit vector."""
    total = float(vector.sum())
    if abs(total) <= config.SIGN_ZERO_TOL:
        flip = vector[int(np.argmax(np.abs(vector)))] < 0
    else:
        flip = total < 0
    return -vector if flip else vector


def _finish(matrix: np.ndarray, eigenvalue: float, vector: np.ndarray, iterations: int) -> EigenPair:
    vector = orient(vector / np.linalg.norm(vector))
    residual = float(np.linalg.norm(matrix @ vector - eigenvalue * vector))
    return EigenPair(eigenvalue=float(eigenvalue), vector=vector, iterations=iterations, residual=residual)


def _dense_fallback(matrix: np.ndarray, iterations: int, reason: str) -> EigenPair:
    logger.debug(f"Power iteration handed over to a dense solver after {iterations} steps: {reason}.")
    values, vectors = np.linalg.eigh(matrix)
    return _finish(matrix, values[-1], vectors[:, -1], iterations)


def top_eigenpair(
    matrix: np.ndarray,
    tol: float = config.EIGEN_TOL,
    max_iter: int = config.EIGEN_MAX_ITER,
) -> EigenPair:
    """
    Largest eigenvalue and its unit eigenvector by power iteration.

    Converged when the relative change of the Rayleigh quotient is at most tol and the
    residual ||M v - lambda v|| is at most 1e-10 * max(lambda, 1). When the observed
    contraction rate predicts that the budget will run out (nearly tied top eigenvalues),
    or the iteration settles on a negative eigenvalue, the pair is taken from a dense
    symmetric solver instead.

    Args:
        matrix: N x N symmetric matrix.
        tol: relative Rayleigh-quotient tolerance.
        max_iter: iteration budget.

    Returns:
        EigenPair: a zero matrix yields eigenvalue 0 with the start vector, flagged degenerate.

    Raises:
        AsymmetricMatrixError: if the input is not symmetric.
        NonConvergenceError: if max_iter is exhausted; carries the best iterate.
    """
    m = _as_symmetric(matrix)
    n = m.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))

    if not np.any(m):
        return EigenPair(eigenvalue=0.0, vector=v, iterations=0, residual=0.0, degenerate=True)

    w = m @ v
    rayleigh = float(v @ w)
    previous_residual = math.inf
    residual = math.inf

    for iteration in range(1, max_iter + 1):
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return _dense_fallback(m, iteration, "start vector in the null space")
        v = w / norm
        w = m @ v
        updated = float(v @ w)
        residual = float(np.linalg.norm(w - updated * v))
        change = abs(updated - rayleigh) / max(abs(updated), np.finfo(float).tiny)
        rayleigh = updated

        if change <= tol and residual <= config.EIGEN_RESIDUAL_TOL * max(rayleigh, 1.0):
            if rayleigh < 0:
                return _dense_fallback(m, iteration, "negative dominant eigenvalue")
            return _finish(m, rayleigh, v, iteration)

        if iteration >= STAGNATION_CHECK_AFTER and residual > 0 and previous_residual < math.inf:
            rate = residual / previous_residual
            target = config.EIGEN_RESIDUAL_TOL * max(abs(rayleigh), 1.0)
            if rate >= 1.0:
                return _dense_fallback(m, iteration, "residual no longer contracting")
            needed = math.log(target / residual) / math.log(rate)
            if needed > max_iter - iteration:
                return _dense_fallback(m, iteration, f"contraction rate {rate:.6f} too slow")
        previous_residual = residual

    logger.error(f"Power iteration did not converge in {max_iter} iterations (residual {residual:.3e}).")
    raise NonConvergenceError(
        f"Power iteration did not converge in {max_iter} iterations",
        best_vector=orient(v),
        residual=residual,
    )


def jacobi_eigh(matrix: np.ndarray, max_sweeps: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """
    Full eigendecomposition by cyclic Jacobi rotations.

    Returns:
        (eigenvalues ascending, eigenvectors as columns in the same order)
    """
    a = _as_symmetric(matrix).copy()
    n = a.shape[0]
    vectors = np.eye(n)
    frobenius = float(np.linalg.norm(a))

    for _ in range(max_sweeps):
        off_diagonal = math.sqrt(float(np.sum(a**2) - np.sum(np.diag(a) ** 2)))
        if off_diagonal <= 1e-14 * frobenius:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                vec_p, vec_q = vectors[:, p].copy(), vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * vec_q
                vectors[:, q] = s * vec_p + c * vec_q
    else:
        logger.error(f"Jacobi sweeps did not converge within {max_sweeps} sweeps.")
        raise OracleError(f"Jacobi oracle did not converge within {max_sweeps} sweeps")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], vectors[:, order]


def full_spectrum_oracle(matrix: np.ndarray) -> np.ndarray:
    """All eigenvalues in ascending order; desk-scale matrices only (N <= 64)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim == 2 and m.shape[0] > config.ORACLE_MAX_DIM:
        logger.error(f"Oracle asked for N={m.shape[0]} > {config.ORACLE_MAX_DIM}.")
        raise OracleError("oracle is desk-scale only")
    eigenvalues, _ = jacobi_eigh(m)
    return eigenvalues


def oracle_top_eigenpair(matrix: np.ndarray) -> EigenPair:
    """Top pair from the Jacobi oracle under the same sign convention as top_eigenpair."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim == 2 and m.shape[0] > config.ORACLE_MAX_DIM:
        raise OracleError("oracle is desk-scale only")
    eigenvalues, vectors = jacobi_eigh(m)
    return _finish(m, eigenvalues[-1], vectors[:, -1], 0)
