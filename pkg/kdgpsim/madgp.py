# -*- coding: utf-8 -*-
"""Multi-agent distributed GP baseline with average consensus."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from kdgpsim.basis import phi_matrix, phi_vector
from kdgpsim.errors import InvalidArgumentError
from kdgpsim.network import effective_links, exchange
from kdgpsim.utils import clamp_variance, rmse_matrix, spd_factor

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MadgpState:
    """Per-sensor sufficient statistics ``alpha`` (E x E) and ``beta`` (E)."""

    alpha: np.ndarray
    beta: np.ndarray
    step: int = 0

    @classmethod
    def empty(cls, E):
        """Statistics before any reading."""
        return cls(alpha=np.zeros((E, E)), beta=np.zeros(E), step=0)

    @property
    def E(self):
        """Number of basis functions."""
        return self.beta.size

    def stacked(self):
        """``[alpha; beta^T]`` as one ``(E + 1) x E`` payload."""
        return np.vstack((self.alpha, self.beta[None, :]))

    @classmethod
    def from_stacked(cls, payload, step):
        """Inverse of :meth:`stacked`."""
        payload = np.asarray(payload, dtype=float)
        return cls(alpha=payload[:-1].copy(), beta=payload[-1].copy(), step=step)

    def to_bytes(self):
        """Little-endian float64 serialisation of ``alpha`` and ``beta``."""
        return np.ascontiguousarray(self.stacked(), dtype="<f8").tobytes()


def madgp_local_update(state, x, y, basis):
    """Fold one reading into the running averages of ``phi phi^T`` and ``phi y``."""
    k = state.step + 1
    phi = phi_vector(x, basis)
    alpha = ((k - 1) / k) * state.alpha + np.outer(phi, phi) / k
    beta = ((k - 1) / k) * state.beta + phi * y / k
    return MadgpState(alpha=alpha, beta=beta, step=k)


def default_gamma(max_degree):
    """Consensus coefficient ``1 / (deg_max + 1)``."""
    return 1.0 / (max_degree + 1.0)


def avg_consensus_step(own, neighbor_values, gamma, max_degree=None):
    """``v <- v - gamma sum_j (v - v_j)`` over the received neighbour values."""
    degree = len(neighbor_values) if max_degree is None else max(max_degree, len(neighbor_values))
    if gamma <= 0 or gamma * degree >= 1:
        raise InvalidArgumentError(f"gamma={gamma!r} outside (0, 1/{degree})")
    own = np.asarray(own, dtype=float)
    if not neighbor_values:
        return own.copy()
    disagreement = sum(own - np.asarray(v, dtype=float) for v in neighbor_values)
    return own - gamma * disagreement


def run_average_consensus(values, graph, link_model, T_max, gamma, rng, theta_th=0.0, lossy=None):
    """Iterate average consensus over per-sensor arrays.

    Stops early once every sensor moves by less than ``theta_th`` in one round.
    Returns the final values and the number of rounds run.
    """
    current = [np.asarray(v, dtype=float) for v in values]
    if not current:
        return current, 0
    n_rows = current[0].shape[0]
    rounds = 0
    for t in range(T_max):
        links = effective_links(graph, link_model, t, rng, n_rows=n_rows, lossy=lossy)
        inboxes = exchange(current, links)
        updated = [
            avg_consensus_step(v, inbox, gamma, graph.max_degree)
            for v, inbox in zip(current, inboxes)
        ]
        rounds += 1
        moved = max(rmse_matrix(a, b) for a, b in zip(current, updated))
        current = updated
        if moved < theta_th:
            break
    return current, rounds


def _regularised_factor(state, R, k, basis, hp):
    if R <= 0 or k <= 0:
        raise InvalidArgumentError(f"R and k must be positive, got R={R!r}, k={k!r}")
    scale = hp.sigma_n**2 / (R * k)
    regularised = state.alpha + np.diag(scale / basis.spectral_densities)
    return spd_factor(0.5 * (regularised + regularised.T)), scale


def madgp_weights(state, R, k, basis, hp):
    """Posterior mean of the basis weights implied by the averaged statistics."""
    factor, _ = _regularised_factor(state, R, k, basis, hp)
    return cho_solve(factor, state.beta)


def madgp_predict(state, queries, R, k, basis, hp, field_units=False):
    """Predictive mean and variance from consensus-averaged statistics.

    Uses ``(alpha + sigma_n^2 / (R k) Lambda^-1)^-1`` with ``Lambda`` the spectral
    densities. ``field_units`` rescales the variance by ``sigma_n^2 / (R k)``, which
    turns it into the posterior variance of the pooled data.
    """
    factor, scale = _regularised_factor(state, R, k, basis, hp)
    phi = phi_matrix(queries, basis)
    mean = phi @ cho_solve(factor, state.beta)
    variance = np.sum(phi * cho_solve(factor, phi.T).T, axis=1)
    if field_units:
        variance = scale * variance
    return mean, clamp_variance(variance)


def with_consensus_values(states, payloads):
    """Rebuild states from consensus payloads, keeping each sensor's step."""
    return [MadgpState.from_stacked(p, step=s.step) for s, p in zip(states, payloads)]


def message_nbytes(state):
    """Serialized size of one ``(alpha, beta)`` message."""
    return len(state.to_bytes())
