"""Uniform 2D grids and the scalar maps that live on them.

Arrays are stored row-major with shape ``(ny, nx)``: the first index runs
along y, the second along x, matching the line layout of the height-map
file format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError

MIN_NODES = 2  # file I/O accepts tiny maps; the solver demands SOLVER_MIN_NODES
SOLVER_MIN_NODES = 8


@dataclass(frozen=True)
class Grid:
    """Node layout: node (i, j) sits at (x0 + i*dx, y0 + j*dy), lengths in µm."""

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float

    def __post_init__(self):
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise ValidationError(f"grid needs at least {MIN_NODES} nodes per axis, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValidationError("grid spacing dx, dy must be positive")
        if not np.isclose(self.dx, self.dy, rtol=1e-9, atol=0.0):
            raise ConfigError(f"non-square cells: dx={self.dx} dy={self.dy}")

    @classmethod
    def centered(cls, width, height, dx, center=(0.0, 0.0)):
        """Grid whose cells tile ``width x height`` µm around ``center``."""
        nx = int(round(width / dx))
        ny = int(round(height / dx))
        x0 = center[0] - 0.5 * (nx - 1) * dx
        y0 = center[1] - 0.5 * (ny - 1) * dx
        return cls(nx, ny, dx, dx, x0, y0)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self):
        return self.y0 + self.dy * np.arange(self.ny)

    @property
    def center(self):
        return (self.x0 + 0.5 * (self.nx - 1) * self.dx, self.y0 + 0.5 * (self.ny - 1) * self.dy)

    @property
    def cell_area(self):
        return self.dx * self.dy

    def extent(self):
        """Outer cell boundaries ``(xmin, xmax, ymin, ymax)`` in µm."""
        return (
            self.x0 - 0.5 * self.dx,
            self.x0 + (self.nx - 0.5) * self.dx,
            self.y0 - 0.5 * self.dy,
            self.y0 + (self.ny - 0.5) * self.dy,
        )

    def mesh(self):
        return np.meshgrid(self.x, self.y)

    def contains(self, xmin, xmax, ymin, ymax, margin=0.0):
        """True when the rectangle plus ``margin`` lies inside the grid."""
        gx0, gx1, gy0, gy1 = self.extent()
        eps = 1e-9 * self.dx
        return (
            xmin - margin >= gx0 - eps
            and xmax + margin <= gx1 + eps
            and ymin - margin >= gy0 - eps
            and ymax + margin <= gy1 + eps
        )


def _checked_array(grid, values, name):
    arr = np.asarray(values, dtype=float)
    if arr.shape != grid.shape:
        raise ValidationError(f"{name} has shape {arr.shape}, grid expects {grid.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class HeightMap:
    """Polymer surface height in nm on ``grid``."""

    grid: Grid
    h: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _checked_array(self.grid, self.h, "height map")
        if np.any(arr < 0):
            raise ValidationError("heights must be non-negative")
        object.__setattr__(self, "h", arr)

    @property
    def max_height(self):
        return float(self.h.max())


@dataclass(frozen=True)
class PotentialMap:
    """Attractive potential depth V/h in THz on ``grid`` (subtracted in the Hamiltonian)."""

    grid: Grid
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _checked_array(self.grid, self.v, "potential map")
        if np.any(arr < 0):
            raise ValidationError("potential must be non-negative")
        object.__setattr__(self, "v", arr)

    @property
    def depth(self):
        return float(self.v.max())
