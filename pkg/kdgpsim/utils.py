# -*- coding: utf-8 -*-
"""Helper utilities shared by the estimation modules."""
import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from kdgpsim.errors import InvalidArgumentError, NumericalFailureError

log = logging.getLogger(__name__)

VARIANCE_TOLERANCE = 1e-12
JITTER_SCALE = 1e-10


def symmetrize(matrix):
    """Return the symmetric part of a square matrix."""
    return 0.5 * (matrix + matrix.T)


def spd_factor(matrix):
    """Cholesky-factor a symmetric positive definite matrix.

    A single jitter of ``1e-10 * trace / n`` is added on the diagonal if the first
    attempt fails; a second failure raises :class:`NumericalFailureError`.
    """
    matrix = np.asarray(matrix, dtype=float)
    try:
        return cho_factor(matrix, lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        n = matrix.shape[0]
        jitter = JITTER_SCALE * np.trace(matrix) / n
        log.warning("Cholesky failed on %dx%d matrix, retrying with jitter %.3e", n, n, jitter)
        if not np.isfinite(jitter) or jitter <= 0:
            raise NumericalFailureError("matrix is not positive definite") from None
        try:
            return cho_factor(matrix + jitter * np.eye(n), lower=True)
        except LinAlgError as exc:
            raise NumericalFailureError(
                "matrix is not positive definite even after jitter"
            ) from exc


def spd_solve(matrix, rhs):
    """Solve ``matrix @ x = rhs`` for a symmetric positive definite ``matrix``."""
    return cho_solve(spd_factor(matrix), rhs)


def spd_inverse(matrix):
    """Invert a symmetric positive definite matrix, returning a symmetric result."""
    n = np.asarray(matrix).shape[0]
    return symmetrize(spd_solve(matrix, np.eye(n)))


def clamp_variance(variance):
    """Clamp round-off negatives of predicted variances to zero.

    Values below ``-1e-12`` mean positive definiteness was genuinely lost.
    """
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < -VARIANCE_TOLERANCE):
        raise NumericalFailureError(
            f"negative predicted variance {variance.min():.3e}"
        )
    return np.maximum(variance, 0.0)


def rmse_matrix(a, b):
    """Element-wise root mean square error between two equally shaped arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.sqrt(np.mean((a - b) ** 2)))
