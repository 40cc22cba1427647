# -*- coding: utf-8 -*-
"""Max-plus algebra and the dual-extrema consensus protocol.

Scalars live in ``R U {-inf}`` with ``a (+) b = max(a, b)`` and ``a (x) b = a + b``.
The additive identity ``EPSILON`` is ``-inf``; the multiplicative identity ``E_UNIT``
is ``0``. A matrix of all ``E_UNIT`` entries is the zero matrix ``E_bar`` used to
clip communicated matrices at zero.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from kdgpsim.errors import InvalidArgumentError
from kdgpsim.utils import rmse_matrix

log = logging.getLogger(__name__)

EPSILON = -np.inf
E_UNIT = 0.0


def mp_add(a, b):
    """Max-plus addition ``a (+) b``."""
    return max(float(a), float(b))


def mp_mul(a, b):
    """Max-plus multiplication ``a (x) b``; ``EPSILON`` is absorbing."""
    if a == EPSILON or b == EPSILON:
        return EPSILON
    return float(a) + float(b)


@dataclass(frozen=True)
class MaxPlusMatrix:
    """A matrix over the max-plus semiring."""

    entries: np.ndarray

    def __post_init__(self):
        """Store a read-only float copy."""
        entries = np.array(self.entries, dtype=float, ndmin=2)
        if np.any(np.isnan(entries)) or np.any(entries == np.inf):
            raise InvalidArgumentError("max-plus entries must be finite or -inf")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def identity(cls, n):
        """``E_UNIT`` on the diagonal, ``EPSILON`` elsewhere."""
        entries = np.full((n, n), EPSILON)
        np.fill_diagonal(entries, E_UNIT)
        return cls(entries)

    @classmethod
    def zeros(cls, rows, cols):
        """The all-``E_UNIT`` matrix ``E_bar``."""
        return cls(np.full((rows, cols), E_UNIT))

    @property
    def shape(self):
        """Matrix dimensions."""
        return self.entries.shape

    def __add__(self, other):
        """Element-wise ``(+)``."""
        if self.shape != other.shape:
            raise InvalidArgumentError(f"shape mismatch {self.shape} vs {other.shape}")
        return MaxPlusMatrix(np.maximum(self.entries, other.entries))

    def __matmul__(self, other):
        """Max-plus product."""
        return mp_mat_mul(self, other)

    def __eq__(self, other):
        """Exact entry-wise equality."""
        if not isinstance(other, MaxPlusMatrix):
            return NotImplemented
        return bool(np.array_equal(self.entries, other.entries))

    __hash__ = None


def mp_mat_mul(a, b):
    """``(A (x) B)_ij = max_n (a_in + b_nj)``."""
    rows, inner = a.shape
    inner_b, cols = b.shape
    if inner != inner_b:
        raise InvalidArgumentError(f"inner dimensions differ: {a.shape} (x) {b.shape}")
    if inner == 0:
        return MaxPlusMatrix(np.full((rows, cols), EPSILON))
    # -inf + finite stays -inf, so numpy's + already absorbs EPSILON
    sums = a.entries[:, :, None] + b.entries[None, :, :]
    return MaxPlusMatrix(np.max(sums, axis=1))


def mp_mat_pow(a, t):
    """``A^t``: ``t - 1`` successive products of ``A``; ``A^0`` is the identity."""
    rows, cols = a.shape
    if rows != cols:
        raise InvalidArgumentError(f"matrix power needs a square matrix, got {a.shape}")
    if int(t) != t or t < 0:
        raise InvalidArgumentError(f"power must be a non-negative integer, got {t!r}")
    result = MaxPlusMatrix.identity(rows)
    for _ in range(int(t)):
        result = result @ a
    return result


def build_adjacency(graph):
    """Max-plus adjacency with self-loops: ``E_UNIT`` on edges and the diagonal."""
    links = np.asarray(graph.adjacency, dtype=bool) | np.eye(graph.R, dtype=bool)
    return MaxPlusMatrix(np.where(links, E_UNIT, EPSILON))


def reachability_time(adjacency, limit=None):
    """Smallest ``t`` with ``A^t == E_bar``, or ``None`` if never reached.

    For a connected graph with self-loops this is the graph diameter.
    """
    n = adjacency.shape[0]
    limit = n if limit is None else limit
    target = MaxPlusMatrix.zeros(n, n)
    power = MaxPlusMatrix.identity(n)
    for t in range(limit + 1):
        if power == target:
            return t
        power = power @ adjacency
    return None


@dataclass(frozen=True)
class MessageStack:
    """Depth-wise stack of equally shaped real matrices ``{H_1 | ... | H_R}``."""

    layers: np.ndarray

    @classmethod
    def from_matrices(cls, matrices):
        """Stack a sequence of 2-D arrays, copying them."""
        matrices = [np.asarray(m, dtype=float) for m in matrices]
        if not matrices:
            raise InvalidArgumentError("a message stack needs at least one matrix")
        shape = matrices[0].shape
        if any(m.shape != shape for m in matrices):
            raise InvalidArgumentError("all stacked matrices must share one shape")
        return cls(np.stack(matrices).copy())

    @property
    def depth(self):
        """Number of stacked matrices."""
        return self.layers.shape[0]

    def with_zero_layer(self):
        """Extend the stack by the zero matrix ``E_bar``."""
        zero = np.full(self.layers.shape[1:], E_UNIT)
        return MessageStack(np.concatenate([self.layers, zero[None]], axis=0))

    def satisfies_assumption(self):
        """True when, at each entry, all non-zero depth values are identical."""
        layers = self.layers
        nonzero = layers != 0
        top = np.where(nonzero, layers, -np.inf).max(axis=0)
        bottom = np.where(nonzero, layers, np.inf).min(axis=0)
        spread = np.where(nonzero.any(axis=0), top - bottom, 0.0)
        return bool(np.all(spread == 0))

    def total(self):
        """Element-wise sum over the depth."""
        return self.layers.sum(axis=0)


def extrema_split(stack):
    """Split a stack into its non-negative ``Q+`` and non-positive ``Q-`` envelopes."""
    q_plus = np.maximum(stack.layers.max(axis=0), E_UNIT)
    q_minus = -np.maximum((-stack.layers).max(axis=0), E_UNIT)
    return q_plus, q_minus


def dual_extrema_step(own, inbox):
    """One consensus iteration: ``Q+ + Q-`` over the sensor's own and received messages."""
    shape = own.matrix.shape
    for message in inbox:
        if message.matrix.shape != shape:
            raise InvalidArgumentError(
                f"message from sensor {message.sensor_id} has shape "
                f"{message.matrix.shape}, expected {shape}"
            )
    stack = MessageStack.from_matrices([own.matrix] + [m.matrix for m in inbox])
    q_plus, q_minus = extrema_split(stack)
    return replace(own, matrix=q_plus + q_minus, iteration=own.iteration + 1)


def stack_consensus_step(adjacency, stack):
    """Network-wide iteration ``H(t+1) = A (x) {H|E_bar} - [A (x) {-H|E_bar}]``.

    Row ``i`` of ``adjacency`` selects which layers sensor ``i`` maxes over.
    """
    R = stack.depth
    if adjacency.shape != (R, R):
        raise InvalidArgumentError(f"adjacency {adjacency.shape} does not match depth {R}")
    weights = adjacency.entries[:, :, None, None]
    layers = stack.layers[None, :, :, :]
    q_plus = np.maximum((weights + layers).max(axis=1), E_UNIT)
    q_minus = np.maximum((weights - layers).max(axis=1), E_UNIT)
    return MessageStack(q_plus - q_minus)


def reconstruct(stack):
    """``Q+ + Q-`` of a stack; equals the depth sum for one non-zero per entry."""
    q_plus, q_minus = extrema_split(stack)
    return q_plus + q_minus


def consensus_converged(prev, curr, theta_th):
    """True when the RMSE between successive matrices is below ``theta_th``."""
    return rmse_matrix(prev, curr) < theta_th
