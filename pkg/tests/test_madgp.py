# -*- coding: utf-8 -*-
"""MADGP baseline tests."""
import numpy as np
import pytest

from kdgpsim.basis import phi_vector
from kdgpsim.errors import InvalidArgumentError
from kdgpsim.gp_core import SensorReading, blr_batch_posterior, posterior_predict
from kdgpsim.madgp import (
    MadgpState,
    avg_consensus_step,
    default_gamma,
    madgp_local_update,
    madgp_predict,
    madgp_weights,
    message_nbytes,
    run_average_consensus,
    with_consensus_values,
)
from kdgpsim.network import LinkModel, NetworkGraph


class TestLocalUpdate:
    """Running averages."""

    def test_running_average(self, basis, rng):
        """After k readings alpha and beta are sample means."""
        state = MadgpState.empty(basis.E)
        positions = rng.uniform(-0.8, 0.8, size=(6, 2))
        values = rng.normal(size=6)
        for x, y in zip(positions, values):
            state = madgp_local_update(state, x, y, basis)
        phis = np.array([phi_vector(x, basis) for x in positions])
        assert state.step == 6
        np.testing.assert_allclose(state.alpha, phis.T @ phis / 6, atol=1e-12)
        np.testing.assert_allclose(state.beta, phis.T @ values / 6, atol=1e-12)

    def test_stacked_payload(self, basis):
        """The consensus payload is (E + 1) x E and round-trips."""
        state = madgp_local_update(MadgpState.empty(basis.E), (0.1, 0.1), 1.0, basis)
        payload = state.stacked()
        assert payload.shape == (basis.E + 1, basis.E)
        restored = with_consensus_values([state], [payload])[0]
        np.testing.assert_array_equal(restored.alpha, state.alpha)
        assert restored.step == state.step

    def test_message_size(self, basis):
        """Messages carry E^2 + E float64 values."""
        assert message_nbytes(MadgpState.empty(basis.E)) == (basis.E**2 + basis.E) * 8


class TestAverageConsensus:
    """Average consensus."""

    def test_step(self):
        """v <- v - gamma sum (v - v_j)."""
        out = avg_consensus_step(np.array([1.0]), [np.array([3.0]), np.array([5.0])], 0.25)
        np.testing.assert_allclose(out, [1.0 - 0.25 * (-2.0 - 4.0)])

    def test_no_neighbours(self):
        """Without messages the value is unchanged."""
        np.testing.assert_array_equal(avg_consensus_step(np.ones(2), [], 0.1), np.ones(2))

    @pytest.mark.parametrize("gamma", [0.0, -0.1, 0.5])
    def test_gamma_range(self, gamma):
        """gamma must lie in (0, 1 / degree)."""
        with pytest.raises(InvalidArgumentError):
            avg_consensus_step(np.zeros(1), [np.zeros(1), np.zeros(1)], gamma)

    def test_default_gamma(self):
        """1 / (deg_max + 1)."""
        assert default_gamma(4) == pytest.approx(0.2)

    def test_two_sensors_meet_in_one_round(self, rng):
        """With gamma = 1/2 a linked pair lands exactly on its average."""
        assert avg_consensus_step(np.array([1.0, -4.0]), [np.array([3.0, 2.0])], 0.5).tolist() == [2.0, -1.0]
        pair = NetworkGraph.from_positions([(0.0, 0.0), (0.1, 0.0)], d_comm=0.5)
        values = [np.array([1.0, -4.0]), np.array([3.0, 2.0])]
        final, rounds = run_average_consensus(values, pair, LinkModel(), 1, 0.5, rng)
        assert rounds == 1
        for value in final:
            np.testing.assert_array_equal(value, [2.0, -1.0])

    def test_converges_to_mean(self, path_graph, rng):
        """Synchronous rounds preserve the sum and reach the mean."""
        values = [np.array([float(v)]) for v in range(5)]
        gamma = default_gamma(path_graph.max_degree)
        final, rounds = run_average_consensus(values, path_graph, LinkModel(), 500, gamma, rng)
        assert rounds == 500
        for value in final:
            assert value[0] == pytest.approx(2.0, abs=1e-6)
        assert sum(v[0] for v in final) == pytest.approx(10.0)

    def test_early_stop(self, path_graph, rng):
        """A movement threshold stops the rounds early."""
        values = [np.array([float(v)]) for v in range(5)]
        _, rounds = run_average_consensus(values, path_graph, LinkModel(), 500, 0.3, rng, theta_th=1e-3)
        assert 0 < rounds < 500

    def test_nothing_to_average(self, path_graph, rng):
        """An empty network runs no rounds."""
        assert run_average_consensus([], path_graph, LinkModel(), 10, 0.3, rng) == ([], 0)


class TestPredict:
    """Prediction from averaged statistics."""

    def test_exact_average_matches_batch_posterior(self, basis, hp, rng):
        """Exactly averaged statistics give the pooled Bayesian posterior."""
        R, k = 4, 3
        states = [MadgpState.empty(basis.E) for _ in range(R)]
        readings = []
        for step in range(1, k + 1):
            for r in range(R):
                x = tuple(rng.uniform(-0.8, 0.8, size=2))
                y = float(rng.normal())
                states[r] = madgp_local_update(states[r], x, y, basis)
                readings.append(SensorReading(sensor_id=r + 1, step=step, position=x, value=y))
        pooled = MadgpState(
            alpha=np.mean([s.alpha for s in states], axis=0),
            beta=np.mean([s.beta for s in states], axis=0),
            step=k,
        )
        queries = rng.uniform(-0.8, 0.8, size=(7, 2))
        mean, variance = madgp_predict(pooled, queries, R, k, basis, hp, field_units=True)
        batch = blr_batch_posterior(readings, basis, hp)
        expected_mean, expected_variance = posterior_predict(batch, queries, basis)
        np.testing.assert_allclose(mean, expected_mean, atol=1e-8)
        np.testing.assert_allclose(variance, expected_variance, atol=1e-8)
        np.testing.assert_allclose(madgp_weights(pooled, R, k, basis, hp), batch.m, atol=1e-8)

    def test_needs_positive_counts(self, basis, hp):
        """R and k must be positive."""
        with pytest.raises(InvalidArgumentError):
            madgp_predict(MadgpState.empty(basis.E), [(0.0, 0.0)], 0, 1, basis, hp)
