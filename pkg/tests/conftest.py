import numpy as np
import pytest

from rww2.spectral import Grid, SpectralField, from_coefficients


def random_field(grid, rng, band=None, scale=1.0):
    """Random real field, optionally band-limited to |m| <= band."""
    c = scale * (rng.standard_normal(grid.n_modes) + 1j * rng.standard_normal(grid.n_modes))
    if band is not None:
        c[np.abs(grid.modes) > band] = 0.0
    return from_coefficients(c, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
