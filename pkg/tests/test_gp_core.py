# -*- coding: utf-8 -*-
"""Centralized GP and Kalman-GP tests."""
import numpy as np
import pytest

from kdgpsim.basis import SpectralForm, approx_kernel, build_basis
from kdgpsim.errors import InvalidArgumentError
from kdgpsim.gp_core import (
    PosteriorState,
    SensorReading,
    blr_batch_posterior,
    classic_gp_predict,
    kgp_init,
    kgp_update,
    posterior_predict,
    se_gram,
)

from .factories import KernelHyperparamsFactory, SensorReadingFactory


def _random_readings(rng, n, spread=0.8):
    readings = []
    for i in range(n):
        x = tuple(rng.uniform(-spread, spread, size=2))
        readings.append(SensorReading(sensor_id=i % 5 + 1, step=i // 5 + 1, position=x, value=rng.normal()))
    return readings


class TestPosteriorState:
    """Posterior container."""

    def test_shape_mismatch(self):
        """P must be E x E for m of size E."""
        with pytest.raises(InvalidArgumentError):
            PosteriorState(m=np.zeros(3), P=np.eye(2))

    def test_init_is_prior(self, basis):
        """The prior has zero mean and spectral-density covariance."""
        state = kgp_init(basis)
        assert state.step == 0
        np.testing.assert_array_equal(state.m, np.zeros(basis.E))
        np.testing.assert_array_equal(state.P, np.diag(basis.spectral_densities))


class TestKalmanGp:
    """Single-agent recursion."""

    def test_recursive_equals_batch(self):
        """Folding scalar updates reproduces the batch posterior on 25 scenarios."""
        hp = KernelHyperparamsFactory()
        basis = build_basis(50, 1.0, hp)
        rng = np.random.default_rng(5)
        for _ in range(25):
            readings = _random_readings(rng, 5 * 20)
            state = kgp_init(basis)
            for reading in readings:
                state = kgp_update(state, reading.position, reading.value, hp, basis)
            batch = blr_batch_posterior(readings, basis, hp)
            np.testing.assert_allclose(state.m, batch.m, rtol=0, atol=1e-8)
            np.testing.assert_allclose(state.P, batch.P, rtol=0, atol=1e-8)

    def test_update_keeps_step(self, basis, hp):
        """A scalar update does not advance the sensing step."""
        state = kgp_update(kgp_init(basis), (0.1, 0.2), 1.0, hp, basis)
        assert state.step == 0

    def test_update_shrinks_variance(self, basis, hp):
        """Variance at the measured point drops after the update."""
        x = (0.2, -0.3)
        prior = kgp_init(basis)
        posterior = kgp_update(prior, x, 0.5, hp, basis)
        _, before = posterior_predict(prior, [x], basis)
        _, after = posterior_predict(posterior, [x], basis)
        assert after[0] < before[0]

    def test_covariance_stays_symmetric(self, basis, hp):
        """The covariance is exactly symmetric after updates."""
        state = kgp_init(basis)
        for reading in SensorReadingFactory.build_batch(10):
            state = kgp_update(state, reading.position, reading.value, hp, basis)
        np.testing.assert_array_equal(state.P, state.P.T)

    def test_batch_of_nothing(self, basis, hp):
        """No readings gives the prior."""
        state = blr_batch_posterior([], basis, hp)
        np.testing.assert_array_equal(state.P, kgp_init(basis).P)

    def test_batch_step(self, basis, hp):
        """The batch posterior carries the latest reading step."""
        readings = SensorReadingFactory.build_batch(12)
        assert blr_batch_posterior(readings, basis, hp).step == max(r.step for r in readings)


class TestPredict:
    """Predictive distributions."""

    def test_prior_variance_is_approx_kernel(self, basis):
        """At the prior the predictive variance is k~(x, x)."""
        x = (0.25, 0.4)
        mean, variance = posterior_predict(kgp_init(basis), [x], basis)
        assert mean[0] == 0.0
        assert variance[0] == pytest.approx(approx_kernel(x, x, basis))

    def test_variances_non_negative(self, basis, hp, rng):
        """Clamped variances never go negative."""
        readings = _random_readings(rng, 40)
        state = blr_batch_posterior(readings, basis, hp)
        _, variance = posterior_predict(state, rng.uniform(-0.9, 0.9, size=(30, 2)), basis)
        assert np.all(variance >= 0)


class TestClassicGp:
    """Function-space GP."""

    def test_single_reading(self, hp):
        """One reading: mean sigma^2 / (sigma^2 + sigma_n^2) y at the reading point."""
        x = (0.1, 0.2)
        reading = SensorReading(sensor_id=1, step=1, position=x, value=2.0)
        mean, variance = classic_gp_predict([reading], [x], hp)
        s2, n2 = hp.sigma_s**2, hp.sigma_n**2
        assert mean[0] == pytest.approx(s2 / (s2 + n2) * 2.0)
        assert variance[0] == pytest.approx(s2 - s2**2 / (s2 + n2))

    def test_needs_readings(self, hp):
        """Prediction without data is rejected."""
        with pytest.raises(InvalidArgumentError):
            classic_gp_predict([], [(0.0, 0.0)], hp)

    def test_agrees_with_reduced_rank(self, rng):
        """With a fine basis the weight-space and function-space posteriors agree."""
        hp = KernelHyperparamsFactory(sigma_n=0.3)
        basis = build_basis(400, 1.5, hp, spectral_form=SpectralForm.STANDARD_2D)
        readings = _random_readings(rng, 10, spread=0.5)
        queries = rng.uniform(-0.5, 0.5, size=(8, 2))
        exact_mean, exact_var = classic_gp_predict(readings, queries, hp)
        approx_mean, approx_var = posterior_predict(blr_batch_posterior(readings, basis, hp), queries, basis)
        np.testing.assert_allclose(approx_mean, exact_mean, atol=1e-3)
        np.testing.assert_allclose(approx_var, exact_var, atol=1e-3)

    def test_se_gram(self, hp):
        """The Gram matrix has sigma^2 on the diagonal and is symmetric."""
        points = np.array([(0.0, 0.0), (0.3, 0.0), (0.0, 0.6)])
        gram = se_gram(points, points, hp)
        np.testing.assert_allclose(np.diag(gram), hp.sigma_s**2)
        np.testing.assert_allclose(gram, gram.T)
        assert gram[0, 1] == pytest.approx(hp.sigma_s**2 * np.exp(-0.09 / (2 * hp.length_scale**2)))
