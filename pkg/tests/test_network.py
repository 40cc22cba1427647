# -*- coding: utf-8 -*-
"""Network and link-model tests."""
import numpy as np
import pytest

from kdgpsim.errors import ConfigurationError, InvalidArgumentError
from kdgpsim.network import (
    NO_DROP,
    LinkKind,
    LinkModel,
    LinkPattern,
    NetworkGraph,
    comm_radius_for_degree,
    effective_links,
    exchange,
    export_edge_list,
    random_geometric_deployment,
    select_lossy_edges,
    truncate_rows,
)

UNIT = (0.0, 1.0, 0.0, 1.0)


class TestNetworkGraph:
    """Disk graphs."""

    def test_path(self, path_graph):
        """Neighbours sit 0.2 apart on the line."""
        assert path_graph.R == 5
        assert path_graph.degrees.tolist() == [1, 2, 2, 2, 1]
        assert path_graph.max_degree == 2
        assert path_graph.neighbors(2).tolist() == [1, 3]
        assert path_graph.diameter() == 4

    def test_symmetric_without_loops(self, rng):
        """Adjacency is symmetric with an empty diagonal."""
        graph = NetworkGraph.from_positions(rng.uniform(0, 1, size=(12, 2)), 0.4)
        assert np.array_equal(graph.adjacency, graph.adjacency.T)
        assert not graph.adjacency.diagonal().any()

    def test_networkx_view(self, path_graph):
        """The networkx graph has the same edges."""
        graph = path_graph.to_networkx()
        assert graph.number_of_nodes() == 5
        assert graph.number_of_edges() == 4
        assert path_graph.is_connected()


class TestDeployment:
    """Random geometric deployments."""

    def test_connected(self, rng):
        """The returned deployment is connected and inside the bounds."""
        graph = random_geometric_deployment(20, UNIT, comm_radius_for_degree(20, UNIT, 6), rng)
        assert graph.is_connected()
        assert np.all((graph.positions >= 0) & (graph.positions <= 1))

    def test_impossible(self, rng):
        """A tiny radius can never connect ten sensors."""
        with pytest.raises(ConfigurationError):
            random_geometric_deployment(10, UNIT, 1e-6, rng)

    def test_bad_count(self, rng):
        """R must be a positive integer."""
        with pytest.raises(InvalidArgumentError):
            random_geometric_deployment(0, UNIT, 0.5, rng)

    def test_radius_for_degree(self):
        """pi d^2 (R - 1) / area equals the target degree."""
        d = comm_radius_for_degree(31, UNIT, 6)
        assert np.pi * d**2 * 30 == pytest.approx(6.0)


class TestLinkModels:
    """Per-iteration link sampling."""

    def test_probability_range(self):
        """p must be a probability."""
        with pytest.raises(InvalidArgumentError):
            LinkModel(LinkKind.ASYNC, 1.5)

    def test_sync_delivers_everything(self, path_graph, rng):
        """Synchronous links deliver every edge intact."""
        links = effective_links(path_graph, LinkModel(), 0, rng)
        np.testing.assert_array_equal(links.delivered, path_graph.adjacency)
        assert np.all(links.drop_rows == NO_DROP)

    @pytest.mark.parametrize("p, expected", [(0.0, 0), (1.0, 8)])
    def test_async_extremes(self, path_graph, rng, p, expected):
        """p = 0 silences every lossy edge, p = 1 delivers all."""
        links = effective_links(path_graph, LinkModel(LinkKind.ASYNC, p), 0, rng)
        assert links.delivered.sum() == expected

    def test_async_is_symmetric(self, rng):
        """An edge fails in both directions at once."""
        graph = NetworkGraph.from_positions(rng.uniform(0, 1, size=(15, 2)), 0.5)
        links = effective_links(graph, LinkModel(LinkKind.ASYNC, 0.5), 0, rng)
        np.testing.assert_array_equal(links.delivered, links.delivered.T)

    def test_async_delivery_rate(self, path_graph, rng):
        """Lossy edges deliver with probability p over many iterations."""
        edges = np.triu(path_graph.adjacency)
        delivered = 0
        draws = 3000
        for t in range(draws):
            links = effective_links(path_graph, LinkModel(LinkKind.ASYNC, 0.3), t, rng)
            delivered += links.delivered[edges].sum()
        assert delivered / (draws * edges.sum()) == pytest.approx(0.3, abs=0.02)

    def test_packet_loss_truncation_rate(self, path_graph, rng):
        """Messages on lossy edges are truncated with probability 1 - p."""
        edges = path_graph.adjacency
        truncated = 0
        draws = 2000
        for t in range(draws):
            links = effective_links(path_graph, LinkModel(LinkKind.PACKET_LOSS, 0.3), t, rng, n_rows=4)
            assert np.all(links.delivered == edges)
            truncated += (links.drop_rows[edges] != NO_DROP).sum()
        assert truncated / (draws * edges.sum()) == pytest.approx(0.7, abs=0.02)

    def test_async_spares_reliable_edges(self, path_graph, rng):
        """Edges outside the lossy mask always deliver."""
        lossy = np.zeros_like(path_graph.adjacency)
        links = effective_links(path_graph, LinkModel(LinkKind.ASYNC, 0.0), 0, rng, lossy=lossy)
        np.testing.assert_array_equal(links.delivered, path_graph.adjacency)

    def test_packet_loss(self, path_graph, rng):
        """p = 0 truncates every message; p = 1 none."""
        always = effective_links(path_graph, LinkModel(LinkKind.PACKET_LOSS, 0.0), 0, rng, n_rows=4)
        rows = always.drop_rows[path_graph.adjacency]
        assert np.all((rows >= 0) & (rows < 4))
        np.testing.assert_array_equal(always.delivered, path_graph.adjacency)
        never = effective_links(path_graph, LinkModel(LinkKind.PACKET_LOSS, 1.0), 0, rng, n_rows=4)
        assert np.all(never.drop_rows == NO_DROP)

    def test_lossy_selection(self, path_graph, rng):
        """Fractions 0 and 1 select no edge and every edge."""
        assert not select_lossy_edges(path_graph, 0.0, rng).any()
        np.testing.assert_array_equal(select_lossy_edges(path_graph, 1.0, rng), path_graph.adjacency)
        with pytest.raises(InvalidArgumentError):
            select_lossy_edges(path_graph, 2.0, rng)


class TestExchange:
    """Message delivery."""

    def test_truncation(self):
        """Rows from the drop row onwards arrive zeroed."""
        out = truncate_rows(np.ones((4, 2)), 2)
        np.testing.assert_array_equal(out, [[1, 1], [1, 1], [0, 0], [0, 0]])

    def test_inboxes(self):
        """Senders reach receivers along delivered links only, truncated where marked."""
        delivered = np.array([[False, True, True], [True, False, False], [False, False, False]])
        drops = np.full((3, 3), NO_DROP)
        drops[0, 2] = 1
        outboxes = [np.full((2, 1), 1.0), np.full((2, 1), 2.0), np.full((2, 1), 3.0)]
        inboxes = exchange(outboxes, LinkPattern(delivered=delivered, drop_rows=drops))
        assert [a.ravel().tolist() for a in inboxes[0]] == [[2.0, 2.0], [3.0, 0.0]]
        assert [a.ravel().tolist() for a in inboxes[1]] == [[1.0, 1.0]]
        assert inboxes[2] == []

    def test_size_mismatch(self, path_graph, rng):
        """Outboxes must match the link pattern."""
        links = effective_links(path_graph, LinkModel(), 0, rng)
        with pytest.raises(InvalidArgumentError):
            exchange([np.zeros(1)] * 3, links)

    def test_edge_list_export(self, path_graph, tmp_path):
        """One line per undirected edge."""
        path = tmp_path / "edges.txt"
        export_edge_list(path_graph, path)
        assert len(path.read_text().splitlines()) == 4
