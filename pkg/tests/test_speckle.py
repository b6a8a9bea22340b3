"""
Tests for the log-normal speckle model.

Run with: pytest tests/ -v
"""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))


class TestSpeckleParams:
    def test_log_variance_is_trigamma(self):
        from scipy.special import polygamma
        from wakesar.models import SpeckleParams
        params = SpeckleParams(looks=5)
        assert params.sigma2 == pytest.approx(float(polygamma(1, 5)))
        assert params.mu == pytest.approx(-0.5 * params.sigma2)

    def test_more_looks_less_noise(self):
        from wakesar.despeckling.speckle import looks_variance
        variances = [looks_variance(looks) for looks in (1, 3, 5, 7)]
        assert variances == sorted(variances, reverse=True)
        assert looks_variance(1) == pytest.approx(math.expm1(math.pi ** 2 / 6.0))

    def test_zero_looks_rejected(self):
        from wakesar.errors import ConfigValidationError
        from wakesar.models import SpeckleParams
        with pytest.raises(ConfigValidationError):
            SpeckleParams(looks=0)


class TestSpeckleField:
    def test_unit_mean(self):
        """E[V] = 1 and Var[log V] = σ² over a large sample."""
        from wakesar.models import SpeckleParams
        from wakesar.despeckling.speckle import speckle_field
        params = SpeckleParams(looks=3, seed=42)
        noise = speckle_field((512, 512), params)
        assert float(noise.mean()) == pytest.approx(1.0, abs=0.01)
        assert float(np.log(noise).var()) == pytest.approx(params.sigma2, rel=0.02)
        assert np.all(noise > 0.0)

    def test_deterministic_per_seed(self):
        from wakesar.models import SpeckleParams
        from wakesar.despeckling.speckle import speckle_field
        a = speckle_field((16, 16), SpeckleParams(looks=5, seed=1))
        b = speckle_field((16, 16), SpeckleParams(looks=5, seed=1))
        c = speckle_field((16, 16), SpeckleParams(looks=5, seed=2))
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_draws_follow_pixel_order(self):
        """A smaller field is the leading part of a larger one in C order."""
        from wakesar.models import SpeckleParams
        from wakesar.despeckling.speckle import speckle_field
        params = SpeckleParams(looks=3, seed=9)
        large = speckle_field((4, 4), params).ravel()
        small = speckle_field((2, 4), params).ravel()
        np.testing.assert_array_equal(large[:8], small)

    def test_log_field_is_gaussian(self):
        """log V ~ N(μ, σ²): KS distance, skewness and excess kurtosis of 512² draws."""
        from scipy import stats
        from wakesar.models import SpeckleParams
        from wakesar.despeckling.speckle import speckle_field
        params = SpeckleParams(looks=5, seed=17)
        log_noise = np.log(speckle_field((512, 512), params)).ravel()
        result = stats.kstest(log_noise, "norm", args=(params.mu, math.sqrt(params.sigma2)))
        assert result.statistic < 0.01
        assert abs(float(stats.skew(log_noise))) < 0.05
        assert abs(float(stats.kurtosis(log_noise))) < 0.1

    def test_pixels_uncorrelated(self):
        """Lag-1 correlation of log V along azimuth and range is at the sampling floor."""
        from wakesar.models import SpeckleParams
        from wakesar.despeckling.speckle import speckle_field
        log_noise = np.log(speckle_field((512, 512), SpeckleParams(looks=3, seed=23)))
        centred = log_noise - log_noise.mean()
        variance = float(np.mean(centred ** 2))
        azimuth_lag = float(np.mean(centred[1:, :] * centred[:-1, :])) / variance
        range_lag = float(np.mean(centred[:, 1:] * centred[:, :-1])) / variance
        assert abs(azimuth_lag) < 0.02
        assert abs(range_lag) < 0.02


class TestApplySpeckle:
    def test_product_with_field(self):
        """G = F·V pixel by pixel."""
        from wakesar.models import IntensityImage, SpeckleParams
        from wakesar.despeckling.speckle import apply_speckle, speckle_field
        params = SpeckleParams(looks=5, seed=3)
        clean = IntensityImage(pixels=np.full((8, 8), 2.0))
        noisy = apply_speckle(clean, params)
        np.testing.assert_allclose(noisy.pixels, 2.0 * speckle_field((8, 8), params))

    def test_metadata_records_the_noise(self, textured_image):
        from wakesar.models import SpeckleParams
        from wakesar.despeckling.speckle import apply_speckle
        params = SpeckleParams(looks=7, seed=5)
        noisy = apply_speckle(textured_image, params)
        assert noisy.metadata["looks"] == 7
        assert noisy.metadata["speckle_seed"] == 5
        assert noisy.metadata["speckle_sigma2"] == pytest.approx(params.sigma2)
        assert noisy.metadata["id"] == "textured"
        assert noisy.dx == textured_image.dx

    def test_zero_pixels_stay_zero(self):
        from wakesar.models import IntensityImage, SpeckleParams
        from wakesar.despeckling.speckle import apply_speckle
        pixels = np.ones((4, 4))
        pixels[1, 2] = 0.0
        noisy = apply_speckle(IntensityImage(pixels=pixels), SpeckleParams())
        assert noisy.pixels[1, 2] == 0.0


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
