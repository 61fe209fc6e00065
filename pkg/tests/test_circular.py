import numpy as np
import pytest

from windcompare.circular import angular_difference_deg, circular_mean_deg, circular_std_deg


class TestCircularMean:
    def test_constant_samples(self):
        assert circular_mean_deg(np.full(10, 90.0)) == pytest.approx(90.0)

    def test_wraps_across_north(self):
        # 350 and 10 average to north, not to 180
        mean = circular_mean_deg(np.array([350.0, 10.0]))
        assert float(angular_difference_deg(mean, 0.0)) < 1e-10

    def test_result_in_range(self, rng):
        for _ in range(50):
            mean = circular_mean_deg(rng.uniform(0, 360, 20))
            assert 0.0 <= mean < 360.0

    def test_rotation_equivariant(self, rng):
        for _ in range(20):
            d = rng.uniform(0, 360, 15)
            shift = float(rng.uniform(0, 360))
            rotated = circular_mean_deg((d + shift) % 360.0)
            expected = (circular_mean_deg(d) + shift) % 360.0
            assert float(angular_difference_deg(rotated, expected)) < 1e-8


class TestCircularStd:
    def test_zero_for_constant(self):
        assert circular_std_deg(np.full(5, 123.4)) == 0.0

    def test_positive_for_spread(self):
        assert circular_std_deg(np.array([80.0, 100.0])) > 0.0

    def test_matches_linear_sd_for_small_spread(self, rng):
        # far from the wrap point, circular and linear spread agree closely
        d = 180.0 + rng.normal(0.0, 5.0, 4000)
        assert circular_std_deg(d) == pytest.approx(d.std(), rel=0.02)


class TestAngularDifference:
    def test_wrap(self):
        assert float(angular_difference_deg(359.0, 1.0)) == pytest.approx(2.0)

    def test_symmetric(self):
        assert float(angular_difference_deg(10.0, 200.0)) == float(
            angular_difference_deg(200.0, 10.0)
        )

    def test_max_180(self, rng):
        a = rng.uniform(0, 360, 100)
        b = rng.uniform(0, 360, 100)
        assert (angular_difference_deg(a, b) <= 180.0).all()
