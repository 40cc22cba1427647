# -*- coding: utf-8 -*-
"""Experiment-scale checks of the headline comparisons."""
import numpy as np
import pytest

from kdgpsim.harness.experiments import run_consensus_bench, run_dynamic, run_stationary
from kdgpsim.harness.models import ExperimentConfig

pytestmark = pytest.mark.slow


def _by_method(results, method, column):
    return np.array([getattr(r, column) for r in results if r.method == method])


class TestConsensusBench:
    """Thirty sensors, one hundred trials."""

    def test_sync_exact_and_faster(self):
        """Dual-extrema reaches the centralized matrix and settles first in at least 90% of trials."""
        results = run_consensus_bench(ExperimentConfig.for_kind("consensus-bench"))
        assert _by_method(results, "dual_extrema", "rmse_centralized").mean() < 1e-10
        dual = _by_method(results, "dual_extrema", "consensus_iters_mean")
        average = _by_method(results, "average_consensus", "consensus_iters_mean")
        assert np.mean(dual <= average) >= 0.9

    @pytest.mark.parametrize("link", ["async", "packet_loss"])
    def test_degraded_links(self, link):
        """Average consensus drifts further from the centralized matrix."""
        cfg = ExperimentConfig.for_kind("consensus-bench", link=link, p=0.3)
        results = run_consensus_bench(cfg)
        dual = _by_method(results, "dual_extrema", "rmse_centralized")
        average = _by_method(results, "average_consensus", "rmse_centralized")
        assert dual.mean() < average.mean()


class TestStationary:
    """Fifty sensors, one hundred basis functions, twenty trials."""

    def test_kdgp_not_worse_than_madgp(self):
        """K-DGP's field RMSE is at most MADGP's on average, and well below the prior spread."""
        cfg = ExperimentConfig.for_kind("stationary", centralized_gp=False)
        results = run_stationary(cfg)
        kdgp = _by_method(results, "kdgp", "rmse_field")
        madgp = _by_method(results, "madgp", "rmse_field")
        central = _by_method(results, "centralized_kgp", "rmse_field")
        assert len(kdgp) == 20
        assert central.mean() < 0.75 * cfg.sigma_s
        assert kdgp.mean() < 0.75 * cfg.sigma_s
        assert kdgp.mean() <= madgp.mean() + 1e-9


class TestDynamic:
    """Forty sensing steps on a 50 x 50 convection-diffusion grid."""

    def test_prediction_helps(self):
        """The prediction step lowers the time-averaged RMSE in at least 8 of 10 seeds."""
        results = run_dynamic(ExperimentConfig.for_kind("dynamic"))
        with_prediction = _by_method(results, "kdgp_prediction", "rmse_field")
        without = _by_method(results, "kdgp_no_prediction", "rmse_field")
        assert len(with_prediction) == 10
        assert np.sum(with_prediction < without) >= 8
