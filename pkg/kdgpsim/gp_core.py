# -*- coding: utf-8 -*-
"""Centralized GP baselines and the single-agent Kalman-GP recursion."""
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve

from kdgpsim.basis import phi_matrix, phi_vector
from kdgpsim.errors import InvalidArgumentError, NumericalFailureError
from kdgpsim.utils import clamp_variance, spd_factor, spd_inverse, symmetrize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SensorReading:
    """A noisy field value taken by one sensor at one sensing step."""

    sensor_id: int
    step: int
    position: tuple
    value: float


@dataclass(frozen=True)
class PosteriorState:
    """Gaussian posterior ``N(w | m, P)`` over the basis weights."""

    m: np.ndarray
    P: np.ndarray
    step: int = 0

    def __post_init__(self):
        """Copy and freeze the arrays."""
        m = np.array(self.m, dtype=float)
        P = np.array(self.P, dtype=float)
        if P.shape != (m.size, m.size):
            raise InvalidArgumentError(f"P shape {P.shape} does not match m of size {m.size}")
        m.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "P", P)

    @property
    def E(self):
        """Number of basis weights."""
        return self.m.size


def _positions(readings):
    return np.array([r.position for r in readings], dtype=float).reshape(-1, 2)


def _values(readings):
    return np.array([r.value for r in readings], dtype=float)


def se_gram(points, points_prime, hp):
    """Squared-exponential Gram matrix between two point sets."""
    a = np.atleast_2d(np.asarray(points, dtype=float))
    b = np.atleast_2d(np.asarray(points_prime, dtype=float))
    sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * a @ b.T
    return hp.sigma_s**2 * np.exp(-np.maximum(sq, 0.0) / (2.0 * hp.length_scale**2))


def classic_gp_predict(readings, queries, hp, kernel=None):
    """Function-space GP prediction: pointwise mean and variance at ``queries``.

    ``kernel(A, B)`` returns a Gram matrix; it defaults to the exact SE kernel.
    """
    if not readings:
        raise InvalidArgumentError("classic GP prediction needs at least one reading")
    if kernel is None:
        def kernel(a, b):
            return se_gram(a, b, hp)

    X = _positions(readings)
    y = _values(readings)
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    factor = spd_factor(kernel(X, X) + hp.sigma_n**2 * np.eye(len(X)))
    k_star = kernel(Q, X)
    mean = k_star @ cho_solve(factor, y)
    reduction = np.sum(k_star * cho_solve(factor, k_star.T).T, axis=1)
    prior = np.array([kernel(q[None, :], q[None, :])[0, 0] for q in Q])
    return mean, clamp_variance(prior - reduction)


def kgp_init(basis):
    """Prior state: zero mean and diagonal covariance of spectral densities."""
    return PosteriorState(m=np.zeros(basis.E), P=np.diag(basis.spectral_densities), step=0)


def kgp_update(state, x, y, hp, basis):
    """Absorb one scalar measurement ``y`` taken at ``x``."""
    phi = phi_vector(x, basis)
    p_phi = state.P @ phi
    s = float(phi @ p_phi + hp.sigma_n**2)
    if s <= 0:
        raise NumericalFailureError(f"innovation variance {s} is not positive")
    gain = p_phi / s
    m = state.m + gain * (y - phi @ state.m)
    P = symmetrize(state.P - s * np.outer(gain, gain))
    return replace(state, m=m, P=P)


def blr_batch_posterior(readings, basis, hp):
    """Closed-form Bayesian linear-regression posterior over all readings."""
    if not readings:
        return kgp_init(basis)
    phi = phi_matrix(_positions(readings), basis)
    noise_precision = 1.0 / hp.sigma_n**2
    information = np.diag(1.0 / basis.spectral_densities) + noise_precision * phi.T @ phi
    P = spd_inverse(information)
    m = P @ (noise_precision * phi.T @ _values(readings))
    step = max(r.step for r in readings)
    return PosteriorState(m=m, P=P, step=step)


def posterior_predict(state, queries, basis):
    """Predictive mean ``phi^T m`` and variance ``phi^T P phi`` at ``queries``."""
    phi = phi_matrix(queries, basis)
    mean = phi @ state.m
    variance = np.einsum("ij,jk,ik->i", phi, state.P, phi)
    return mean, clamp_variance(variance)
