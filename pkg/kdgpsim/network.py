# -*- coding: utf-8 -*-
"""Sensor deployments, communication graphs and link-degradation models."""
import enum
import functools
import logging
from dataclasses import dataclass, replace

import networkx as nx
import numpy as np

from kdgpsim.errors import ConfigurationError, InvalidArgumentError

log = logging.getLogger(__name__)

MAX_DEPLOYMENT_ATTEMPTS = 100
NO_DROP = -1


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected disk graph over sensor positions."""

    positions: np.ndarray
    d_comm: float
    adjacency: np.ndarray

    @classmethod
    def from_positions(cls, positions, d_comm):
        """Connect every pair of distinct sensors within ``d_comm`` of each other."""
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        diff = positions[:, None, :] - positions[None, :, :]
        distance = np.sqrt(np.sum(diff**2, axis=-1))
        adjacency = distance <= d_comm
        np.fill_diagonal(adjacency, False)
        return cls(positions=positions, d_comm=float(d_comm), adjacency=adjacency)

    @property
    def R(self):
        """Number of sensors."""
        return self.positions.shape[0]

    @property
    def degrees(self):
        """Neighbour count of every sensor."""
        return self.adjacency.sum(axis=1)

    @property
    def max_degree(self):
        """Largest neighbour count."""
        return int(self.degrees.max()) if self.R else 0

    def neighbors(self, r):
        """Indices (0-based) of the neighbours of sensor ``r``."""
        return np.flatnonzero(self.adjacency[r])

    def to_networkx(self):
        """The same graph as a :class:`networkx.Graph` with 0-based node labels."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.R))
        graph.add_edges_from(zip(*np.nonzero(np.triu(self.adjacency))))
        return graph

    def is_connected(self):
        """True when every sensor can reach every other one."""
        return self.R > 0 and nx.is_connected(self.to_networkx())

    def diameter(self):
        """Longest shortest-path length (BFS)."""
        return nx.diameter(self.to_networkx())


class LinkKind(str, enum.Enum):
    """Network conditions."""

    SYNC = "sync"
    ASYNC = "async"
    PACKET_LOSS = "packet_loss"


@dataclass(frozen=True)
class LinkModel:
    """A link-degradation model with success probability ``p``."""

    kind: LinkKind = LinkKind.SYNC
    p: float = 1.0

    def __post_init__(self):
        """Validate the probability."""
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgumentError(f"link probability must lie in [0, 1], got {self.p!r}")


@dataclass(frozen=True)
class LinkPattern:
    """Deliveries of one consensus iteration.

    ``delivered[j, i]`` is True when sensor ``j`` receives sensor ``i``'s message;
    ``drop_rows[j, i]`` is the 0-based row from which that message is zeroed, or -1.
    """

    delivered: np.ndarray
    drop_rows: np.ndarray


def comm_radius_for_degree(R, bounds, target_degree):
    """Radius giving roughly ``target_degree`` neighbours for uniform deployments."""
    xmin, xmax, ymin, ymax = bounds
    if R <= 1:
        return float(np.hypot(xmax - xmin, ymax - ymin))
    area = (xmax - xmin) * (ymax - ymin)
    return float(np.sqrt(target_degree * area / (np.pi * (R - 1))))


def random_geometric_deployment(R, bounds, d_comm, rng):
    """Deploy ``R`` sensors uniformly over ``bounds`` until the disk graph is connected."""
    if int(R) != R or R < 1:
        raise InvalidArgumentError(f"R must be a positive integer, got {R!r}")
    xmin, xmax, ymin, ymax = bounds
    for attempt in range(1, MAX_DEPLOYMENT_ATTEMPTS + 1):
        positions = np.column_stack(
            (rng.uniform(xmin, xmax, int(R)), rng.uniform(ymin, ymax, int(R)))
        )
        graph = NetworkGraph.from_positions(positions, d_comm)
        if graph.is_connected():
            log.debug("Connected deployment of %d sensors after %d attempt(s)", R, attempt)
            return graph
    raise ConfigurationError(
        f"no connected deployment of {R} sensors with d_comm={d_comm:.4g} "
        f"in {MAX_DEPLOYMENT_ATTEMPTS} attempts"
    )


def select_lossy_edges(graph, fraction, rng):
    """Symmetric mask of the edges subject to the link model (the dashed links)."""
    if not 0.0 <= fraction <= 1.0:
        raise InvalidArgumentError(f"lossy fraction must lie in [0, 1], got {fraction!r}")
    upper = np.triu(graph.adjacency, k=1)
    chosen = upper & (rng.random(upper.shape) < fraction)
    return chosen | chosen.T


def effective_links(graph, model, t, rng, n_rows=1, lossy=None):
    """Sample which messages are delivered at consensus iteration ``t``.

    Edges outside ``lossy`` (default: every edge) always deliver intact.
    """
    R = graph.R
    edges = np.asarray(graph.adjacency, dtype=bool)
    lossy = edges if lossy is None else (np.asarray(lossy, dtype=bool) & edges)
    drop_rows = np.full((R, R), NO_DROP, dtype=int)

    if model.kind is LinkKind.ASYNC:
        draws = np.triu(rng.random((R, R)), k=1)
        success = draws + draws.T < model.p
        delivered = edges & (~lossy | success)
    elif model.kind is LinkKind.PACKET_LOSS:
        delivered = edges.copy()
        truncated = lossy & (rng.random((R, R)) >= model.p)
        rows = rng.integers(0, n_rows, size=(R, R))
        drop_rows = np.where(truncated, rows, NO_DROP)
    else:
        delivered = edges.copy()
    log.debug("iteration %d: %d of %d directed links deliver", t, delivered.sum(), edges.sum())
    return LinkPattern(delivered=delivered, drop_rows=drop_rows)


@functools.singledispatch
def truncate_rows(payload, row):
    """Zero rows ``row`` through the last of a message payload."""
    if not hasattr(payload, "matrix"):
        raise InvalidArgumentError(f"cannot truncate {type(payload).__name__}")
    return replace(payload, matrix=truncate_rows(payload.matrix, row))


@truncate_rows.register
def _(payload: np.ndarray, row):
    out = np.array(payload, dtype=float)
    out[row:] = 0.0
    return out


def exchange(outboxes, links):
    """Deliver the outboxes along ``links``; returns one inbox list per sensor."""
    R = len(outboxes)
    if links.delivered.shape != (R, R):
        raise InvalidArgumentError(f"{R} outboxes for a {links.delivered.shape} link pattern")
    inboxes = []
    for receiver in range(R):
        inbox = []
        for sender in np.flatnonzero(links.delivered[receiver]):
            if sender == receiver:
                continue
            payload = outboxes[sender]
            row = links.drop_rows[receiver, sender]
            if row != NO_DROP:
                payload = truncate_rows(payload, int(row))
            inbox.append(payload)
        inboxes.append(inbox)
    return inboxes


def export_edge_list(graph, path):
    """Write one ``"i j"`` line per undirected edge (0-based labels)."""
    nx.write_edgelist(graph.to_networkx(), path, data=False)
