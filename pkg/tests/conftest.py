import numpy as np
import pytest

import epiwave as ew


@pytest.fixture(scope="session")
def box_scenario():
    """Homogeneous 1-D benchmark: box contacts with total rate 2, unit recovery."""
    grid = ew.PeriodicGrid(dim=1, cell_points=64, window_radius=6)
    kernel = ew.separable_contact_kernel(2.0, 1.0)
    return {
        "grid": grid,
        "kernel": kernel,
        "transfer": ew.time_integrate_kernel(kernel, grid),
        "response": ew.saturating_exponential(),
    }


@pytest.fixture(scope="session")
def striped_scenario():
    """Genuinely periodic 1-D model: contact rate modulated along the lattice."""

    def source(x):
        return 1.0 + 0.5 * np.cos(2.0 * np.pi * x[:, 0])

    def recovery(y):
        return 1.0 + 0.25 * np.sin(2.0 * np.pi * y[:, 0])

    grid = ew.PeriodicGrid(dim=1, cell_points=64, window_radius=6)
    kernel = ew.separable_contact_kernel(
        2.0, 1.0, source_factor=source, decay=recovery
    )
    return {
        "grid": grid,
        "kernel": kernel,
        "transfer": ew.time_integrate_kernel(kernel, grid),
        "response": ew.saturating_exponential(),
    }
