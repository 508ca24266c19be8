import numpy as np

from emergence.hilbert import wavefunction_from_samples


def gaussian(grid, center, spread, momentum=0.0, hbar=1.0):
    """Normalized Gaussian with position spread ``spread``."""
    x = grid.x
    return wavefunction_from_samples(
        grid, np.exp(-((x - center) ** 2) / (4 * spread ** 2) + 1j * momentum * x / hbar))
