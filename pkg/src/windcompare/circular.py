"""Circular statistics for wind-direction data (degrees on [0, 360))."""

from __future__ import annotations

import numpy as np


def circular_mean_deg(angles: np.ndarray) -> float:
    """Directional mean of angles in degrees, result in [0, 360)."""
    rad = np.deg2rad(np.asarray(angles, dtype=np.float64))
    mean = np.rad2deg(np.arctan2(np.sin(rad).mean(), np.cos(rad).mean())) % 360.0
    # fmod can land exactly on 360.0 when the true mean is a hair below 0
    return float(mean) if mean < 360.0 else 0.0


def circular_std_deg(angles: np.ndarray) -> float:
    """Circular standard deviation sqrt(-2 ln R) in degrees.

    R is the mean resultant length of the unit vectors. Zero spread gives
    0; for R numerically >= 1 the result clamps to 0 rather than produce
    a NaN from log of a value just above 1.
    """
    rad = np.deg2rad(np.asarray(angles, dtype=np.float64))
    r = np.hypot(np.sin(rad).mean(), np.cos(rad).mean())
    if r >= 1.0:
        return 0.0
    if r <= 0.0:
        return float("inf")
    return float(np.rad2deg(np.sqrt(-2.0 * np.log(r))))


def angular_difference_deg(a, b):
    """Smallest absolute angle between directions, elementwise, in [0, 180]."""
    d = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    return np.minimum(d, 360.0 - d)
