# -*- coding: utf-8 -*-
"""Kalman-filter-based distributed GP.

Each sensor shares an ``(E + 1) x R`` message whose only non-zero column is its own
``[phi(x); y]``. Dual-extrema consensus fills in the other columns, after which every
sensor runs the same multi-measurement Kalman update.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve

from kdgpsim.basis import phi_matrix, phi_vector
from kdgpsim.errors import InvalidArgumentError
from kdgpsim.field import measure
from kdgpsim.maxplus import consensus_converged, dual_extrema_step
from kdgpsim.network import LinkModel, effective_links, exchange
from kdgpsim.utils import spd_factor, symmetrize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SharedMessage:
    """The matrix a sensor broadcasts during consensus."""

    sensor_id: int
    matrix: np.ndarray
    iteration: int = 0

    @property
    def width(self):
        """Number of sensors R."""
        return self.matrix.shape[1]

    @property
    def intrinsic_column(self):
        """The sensor's own column ``[phi(x); y]``."""
        return self.matrix[:, self.sensor_id - 1]

    def to_bytes(self):
        """Little-endian float64 serialisation of the matrix."""
        return np.ascontiguousarray(self.matrix, dtype="<f8").tobytes()


@dataclass(frozen=True)
class AssembledMeasurement:
    """Measurement matrix ``H`` (E x R) and values ``y`` (R)."""

    H: np.ndarray
    y: np.ndarray


@dataclass
class SensorNode:
    """A sensor: 1-based id, fixed position and current posterior."""

    sensor_id: int
    position: tuple
    state: object


@dataclass(frozen=True)
class SensingStepOutcome:
    """Per-sensor posteriors after a sensing step plus consensus diagnostics."""

    states: list
    iterations: list
    measurements: list = field(default_factory=list)
    messages: list = field(default_factory=list)

    @property
    def iterations_mean(self):
        """Mean number of consensus iterations over sensors."""
        return float(np.mean(self.iterations)) if self.iterations else 0.0


def build_local_message(r, R, x, y, basis):
    """Zero ``(E + 1) x R`` matrix except column ``r`` (1-based) ``= [phi(x); y]``."""
    if int(r) != r or not 1 <= r <= R:
        raise InvalidArgumentError(f"sensor id {r!r} outside 1..{R}")
    matrix = np.zeros((basis.E + 1, int(R)))
    matrix[:-1, int(r) - 1] = phi_vector(x, basis)
    matrix[-1, int(r) - 1] = y
    return SharedMessage(sensor_id=int(r), matrix=matrix)


def split_message(msg):
    """Un-stack a message into ``H`` (rows 1..E) and ``y`` (row E + 1)."""
    return AssembledMeasurement(H=np.array(msg.matrix[:-1]), y=np.array(msg.matrix[-1]))


def assemble_measurement(positions, values, basis):
    """Central assembly: column ``n`` of ``H`` is ``phi(x_n)``."""
    H = phi_matrix(positions, basis).T
    return AssembledMeasurement(H=H, y=np.asarray(values, dtype=float).copy())


def kdgp_update(state, meas, hp):
    """Multi-measurement Kalman update; the only inversion is the R x R innovation."""
    H = np.asarray(meas.H, dtype=float)
    if H.shape[0] != state.E:
        raise InvalidArgumentError(f"H has {H.shape[0]} rows, state has E={state.E}")
    PH = state.P @ H
    S = symmetrize(H.T @ PH + hp.sigma_n**2 * np.eye(H.shape[1]))
    gain = cho_solve(spd_factor(S), PH.T).T
    m = state.m + gain @ (meas.y - H.T @ state.m)
    P = symmetrize(state.P - gain @ S @ gain.T)
    return replace(state, m=m, P=P)


def kdgp_predict(state, delta_k, hp):
    """Ornstein-Uhlenbeck prediction: ``m <- a m``, ``P <- a^2 P + q I``."""
    if delta_k < 0:
        raise InvalidArgumentError(f"delta_k must be non-negative, got {delta_k!r}")
    a = np.exp(-delta_k / hp.temporal_scale)
    q = 1.0 - np.exp(-2.0 * delta_k / hp.temporal_scale)
    m = a * state.m
    P = a**2 * state.P + q * np.eye(state.E)
    return replace(state, m=m, P=P)


def run_consensus(messages, graph, link_model, T_max, theta_th, rng, lossy=None):
    """Dual-extrema consensus following the while-loop of the sensing step.

    A sensor stops updating once its matrix moves by less than ``theta_th`` or after
    ``T_max`` iterations, but keeps broadcasting its latest matrix.
    Returns the final messages and the iteration count of every sensor.
    """
    R = len(messages)
    current = list(messages)
    active = [True] * R
    iterations = [0] * R
    n_rows = current[0].matrix.shape[0] if R else 0
    t = 0
    while t < T_max and any(active):
        links = effective_links(graph, link_model, t, rng, n_rows=n_rows, lossy=lossy)
        inboxes = exchange(current, links)
        updated = list(current)
        for r in range(R):
            if not active[r]:
                continue
            updated[r] = dual_extrema_step(current[r], inboxes[r])
            iterations[r] += 1
            if consensus_converged(current[r].matrix, updated[r].matrix, theta_th):
                active[r] = False
        current = updated
        t += 1
    log.debug("consensus stopped after %d round(s), %d sensor(s) still active", t, sum(active))
    return current, iterations


def run_sensing_step(sensors, net, cfg, truth, rng, basis, measurements=None, lossy=None):
    """One sensing step for every sensor: measure, share, agree, then filter.

    ``cfg`` supplies ``T_max``, ``theta_th``, ``flag_dynamic``, ``delta_k``, ``hp`` and
    ``link_model``. ``measurements`` overrides the noisy readings (one per sensor) so
    several estimators can share them.
    """
    R = len(sensors)
    if R == 0:
        return SensingStepOutcome(states=[], iterations=[])
    E = basis.E
    if any(node.state.E != E for node in sensors):
        raise InvalidArgumentError("all sensors must share the basis dimension")
    if net.R != R:
        raise InvalidArgumentError(f"network has {net.R} sensors, got {R} nodes")

    hp = cfg.hp
    if measurements is None:
        measurements = [measure(truth, node.position, hp.sigma_n, rng) for node in sensors]
    messages = [
        build_local_message(node.sensor_id, R, node.position, y, basis)
        for node, y in zip(sensors, measurements)
    ]
    link_model = getattr(cfg, "link_model", None) or LinkModel()
    final, iterations = run_consensus(
        messages, net, link_model, cfg.T_max, cfg.theta_th, rng, lossy=lossy
    )

    states = []
    for node, message in zip(sensors, final):
        state = node.state
        if cfg.flag_dynamic:
            state = kdgp_predict(state, cfg.delta_k, hp)
        state = kdgp_update(state, split_message(message), hp)
        states.append(replace(state, step=node.state.step + 1))
    return SensingStepOutcome(
        states=states, iterations=iterations, measurements=list(measurements), messages=final
    )
