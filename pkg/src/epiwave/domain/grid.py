"""Uniform midpoint grids on the periodicity cell and on a finite window.

All spatial quadrature in the package is the composite midpoint rule on
these grids. The periodicity cell is [0, 1)^d sampled at cell_points
midpoints per axis; the window is [-R, R)^d at the same spacing, used for
whole-line operators (ball restrictions, initial value problems). Window
nodes are exact integer translates of cell nodes, so periodic fields can
be evaluated on the window by index lookup instead of interpolation.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

_COORD_EPS = 1e-9


class PeriodicGrid:
    """Midpoint discretization of the unit cell and a window [-R, R)^d."""

    def __init__(self, dim: int = 1, cell_points: int = 64, window_radius: int = 8):
        if dim not in (1, 2):
            raise ValidationError(f"dim must be 1 or 2, got {dim}")
        if int(cell_points) != cell_points or cell_points < 8:
            raise ValidationError(
                f"cell_points must be an integer >= 8, got {cell_points}"
            )
        if int(window_radius) != window_radius or window_radius < 1:
            raise ValidationError(
                f"window_radius must be an integer >= 1, got {window_radius}"
            )
        self.dim = int(dim)
        self.cell_points = int(cell_points)
        self.window_radius = int(window_radius)
        self.spacing = 1.0 / self.cell_points
        self.weight = self.spacing**self.dim

        axis_cell = (np.arange(self.cell_points) + 0.5) * self.spacing
        n_axis = 2 * self.window_radius * self.cell_points
        axis_window = -self.window_radius + (np.arange(n_axis) + 0.5) * self.spacing

        self.cell_nodes = _mesh(axis_cell, self.dim)
        self.window_nodes = _mesh(axis_window, self.dim)

        # Index of each window node's periodic image among the cell nodes.
        axis_map = np.arange(n_axis) % self.cell_points
        if self.dim == 1:
            self.window_cell_map = axis_map
        else:
            a, b = np.meshgrid(axis_map, axis_map, indexing="ij")
            self.window_cell_map = (a * self.cell_points + b).ravel()

    @property
    def n_cell(self) -> int:
        return self.cell_nodes.shape[0]

    @property
    def n_window(self) -> int:
        return self.window_nodes.shape[0]

    def cell_field(self, fn) -> np.ndarray:
        """Evaluate a callable of position on the cell nodes."""
        return np.asarray(fn(self.cell_nodes), dtype=float)

    def window_field(self, fn) -> np.ndarray:
        """Evaluate a callable of position on the window nodes."""
        return np.asarray(fn(self.window_nodes), dtype=float)

    def periodic_on_window(self, cell_values: np.ndarray) -> np.ndarray:
        """Extend values given on cell nodes periodically to the window."""
        cell_values = np.asarray(cell_values)
        if cell_values.shape[0] != self.n_cell:
            raise ValidationError(
                f"expected {self.n_cell} cell values, got {cell_values.shape[0]}"
            )
        return cell_values[self.window_cell_map]

    def ball_indices(self, radius: float) -> np.ndarray:
        """Window node indices inside the closed Euclidean ball of given radius."""
        if radius <= 0:
            raise ValidationError(f"ball radius must be positive, got {radius}")
        if radius > self.window_radius:
            raise ValidationError(
                f"ball radius {radius} exceeds window radius {self.window_radius}"
            )
        r = np.linalg.norm(self.window_nodes, axis=1)
        return np.nonzero(r <= radius + _COORD_EPS)[0]

    def interior_indices(self, margin: float) -> np.ndarray:
        """Window nodes whose axis-aligned margin to the window edge exceeds margin."""
        if margin < 0:
            raise ValidationError(f"margin must be nonnegative, got {margin}")
        edge = self.window_radius - margin
        inside = np.all(np.abs(self.window_nodes) <= edge + _COORD_EPS, axis=1)
        return np.nonzero(inside)[0]

    def __repr__(self) -> str:
        return (
            f"PeriodicGrid(dim={self.dim}, cell_points={self.cell_points}, "
            f"window_radius={self.window_radius})"
        )


def _mesh(axis: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return axis[:, None].copy()
    xa, xb = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xa.ravel(), xb.ravel()])
