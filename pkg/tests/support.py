"""Shared test helpers (kept out of conftest so plain imports stay unambiguous)."""

import numpy as np

from zsiqa.image import RgbImage


def rand_rgb(h, w, seed=0):
    rng = np.random.default_rng(seed)
    return RgbImage(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


# Twenty noise amplitudes in five well-separated bands, strictly increasing,
# so MOS ordering is unambiguous and scores have real gaps to clear.
SIGMAS = tuple(
    band * mult
    for band in (0.01, 0.02, 0.05, 0.1, 0.2)
    for mult in (1.0, 1.15, 1.3, 1.45)
)


def add_noise(pixels, sigma, field):
    """Additive Gaussian noise in [0,1] pixel units from a fixed field."""
    scaled = pixels.astype(np.float64) / 255.0 + sigma * field
    return np.clip(np.floor(scaled * 255.0 + 0.5), 0, 255).astype(np.uint8)
