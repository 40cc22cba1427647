# -*- coding: utf-8 -*-
"""Error metrics and summary statistics."""
import numpy as np

from kdgpsim.errors import InvalidArgumentError
from kdgpsim.utils import rmse_matrix

__all__ = ["consensus_iterations", "polynomial_fit_r2", "rmse_field", "rmse_matrix"]


def rmse_field(estimate, truth):
    """RMSE between two fields on the same grid."""
    if estimate.spec != truth.spec:
        raise InvalidArgumentError("fields live on different grids")
    return rmse_matrix(estimate.values, truth.values)


def consensus_iterations(changes, tolerance=0.01, patience=3):
    """Iterations needed before the matrices stay within ``tolerance`` for ``patience`` rounds.

    ``changes[t]`` is the largest per-sensor RMSE between iterations ``t`` and ``t + 1``.
    Returns ``len(changes)`` when the run never settles.
    """
    small = np.asarray(changes, dtype=float) < tolerance
    if small.size < patience:
        return int(small.size)
    settled = np.lib.stride_tricks.sliding_window_view(small, patience).all(axis=1)
    hits = np.flatnonzero(settled)
    return int(hits[0]) if hits.size else int(small.size)


def polynomial_fit_r2(x, y, degree):
    """Coefficient of determination of a least-squares polynomial fit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    coefficients = np.polyfit(x, y, degree)
    residual = y - np.polyval(coefficients, x)
    total = np.sum((y - y.mean()) ** 2)
    if total == 0:
        return 1.0
    return float(1.0 - np.sum(residual**2) / total)
