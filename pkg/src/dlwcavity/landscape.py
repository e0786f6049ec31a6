"""Height profiles of printed polymer structures and fabrication artifacts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import FormatError, GeometryError, ValidationError
from .grid import Grid, HeightMap

__all__ = [
    "Grid",
    "HeightMap",
    "SshGeometry",
    "DEFAULT_MARGIN",
    "make_box",
    "make_pillars",
    "ssh_centers",
    "make_ssh_chain",
    "make_paraboloid",
    "apply_voxel_smoothing",
    "quantize_dipin",
    "read_heightmap",
    "write_heightmap",
]

DEFAULT_MARGIN = 2.0  # µm between any structure and the grid boundary
HMAP_TOKEN = "HMAP1"


@dataclass(frozen=True)
class SshGeometry:
    """Pillar chain with alternating intra-cell (d_i) and inter-cell (d_o) spacings."""

    n_cells: int = 10
    d_i: float = 1.25  # µm
    d_o: float = 1.9  # µm
    r: float = 0.6  # µm
    h_s: float = 600.0  # nm

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValidationError("SSH chain needs at least 2 unit cells")
        if self.d_i <= 0 or self.d_o <= 0:
            raise ValidationError("pillar spacings must be positive")
        if self.r <= 0:
            raise ValidationError("pillar radius must be positive")
        if self.h_s < 0:
            raise ValidationError("pillar height must be non-negative")

    @property
    def n_sites(self):
        return 2 * self.n_cells

    @property
    def length(self):
        """Outer extent of the chain including the pillar radii (µm)."""
        return (self.n_cells - 1) * (self.d_i + self.d_o) + self.d_i + 2 * self.r

    def swapped(self):
        return SshGeometry(self.n_cells, self.d_o, self.d_i, self.r, self.h_s)


def _tol(grid):
    return 1e-6 * grid.dx


def make_box(grid: Grid, side, h_s, center=None, margin=DEFAULT_MARGIN) -> HeightMap:
    """Flat square of edge ``side`` µm and height ``h_s`` nm.

    A node belongs to the box when its center lies inside the square.
    """
    if side < 0 or h_s < 0:
        raise ValidationError("box side and height must be non-negative")
    if side == 0:
        return HeightMap(grid, np.zeros(grid.shape))
    cx, cy = grid.center if center is None else center
    half = 0.5 * side
    if not grid.contains(cx - half, cx + half, cy - half, cy + half, margin):
        raise GeometryError(f"box of side {side} µm plus {margin} µm margin exceeds the grid")
    X, Y = grid.mesh()
    inside = (np.abs(X - cx) <= half + _tol(grid)) & (np.abs(Y - cy) <= half + _tol(grid))
    return HeightMap(grid, np.where(inside, float(h_s), 0.0))


def make_pillars(grid: Grid, centers, r, h_s, margin=DEFAULT_MARGIN) -> HeightMap:
    """Union of flat cylinders; overlapping pillars merge at the same height."""
    if r <= 0 or h_s < 0:
        raise ValidationError("pillar radius must be positive and height non-negative")
    centers = [tuple(map(float, c)) for c in centers]
    X, Y = grid.mesh()
    inside = np.zeros(grid.shape, dtype=bool)
    r2 = (r + _tol(grid)) ** 2
    for cx, cy in centers:
        if not grid.contains(cx - r, cx + r, cy - r, cy + r, margin):
            raise GeometryError(f"pillar at ({cx}, {cy}) with {margin} µm margin exceeds the grid")
        inside |= (X - cx) ** 2 + (Y - cy) ** 2 <= r2
    return HeightMap(grid, np.where(inside, float(h_s), 0.0))


def ssh_centers(geo: SshGeometry, center=(0.0, 0.0)):
    """Pillar centers along x, gaps d_i, d_o, ..., d_i, centered on ``center``."""
    gaps = [geo.d_i if k % 2 == 0 else geo.d_o for k in range(geo.n_sites - 1)]
    xs = np.concatenate([[0.0], np.cumsum(gaps)])
    xs = xs - 0.5 * xs[-1] + center[0]
    return [(float(x), float(center[1])) for x in xs]


def make_ssh_chain(grid: Grid, geo: SshGeometry, center=None, margin=DEFAULT_MARGIN) -> HeightMap:
    center = grid.center if center is None else center
    half = 0.5 * geo.length
    if not grid.contains(center[0] - half, center[0] + half, center[1] - geo.r, center[1] + geo.r, margin):
        raise GeometryError(f"SSH chain of length {geo.length:.2f} µm plus margin exceeds the grid")
    return make_pillars(grid, ssh_centers(geo, center), geo.r, geo.h_s, margin=margin)


def make_paraboloid(grid: Grid, curvature, h_max, center=None) -> HeightMap:
    """Dome h = max(0, h_max - curvature·ρ²); curvature in nm/µm²."""
    if curvature <= 0 or h_max <= 0:
        raise ValidationError("paraboloid curvature and apex height must be positive")
    cx, cy = grid.center if center is None else center
    X, Y = grid.mesh()
    rho2 = (X - cx) ** 2 + (Y - cy) ** 2
    return HeightMap(grid, np.maximum(0.0, h_max - curvature * rho2))


def apply_voxel_smoothing(hmap: HeightMap, voxel_radius) -> HeightMap:
    """Blur with a Gaussian of standard deviation ``voxel_radius`` (nm).

    The map is zero-padded outside the grid, as if bare mirror continued.
    """
    if voxel_radius < 0:
        raise ValidationError("voxel radius must be non-negative")
    if voxel_radius == 0:
        return HeightMap(hmap.grid, hmap.h.copy())
    sigma = voxel_radius * 1e-3 / hmap.grid.dx
    out = ndimage.gaussian_filter(hmap.h, sigma=sigma, mode="constant", cval=0.0, truncate=5.0)
    return HeightMap(hmap.grid, np.clip(out, 0.0, None))


def quantize_dipin(hmap: HeightMap, step=230.0) -> HeightMap:
    """Snap heights to the nearest multiple of ``step`` nm (ties to even)."""
    if step <= 0:
        raise ValidationError("dip-in step must be positive")
    return HeightMap(hmap.grid, np.round(hmap.h / step) * step)


def write_heightmap(hmap, path, values=None):
    """Write the plain-text HMAP1 format.

    ``values`` overrides the stored heights, which lets potentials and mode
    fields reuse the same layout.
    """
    g = hmap.grid
    data = hmap.h if values is None else np.asarray(values, dtype=float)
    with open(path, "w") as f:
        f.write(f"{HMAP_TOKEN} {g.nx} {g.ny} {g.dx!r} {g.dy!r} {g.x0!r} {g.y0!r}\n")
        for row in data:
            f.write(" ".join(f"{v:.10g}" for v in row))
            f.write("\n")


def read_grid_values(path):
    """Parse an HMAP1 file into ``(Grid, values)`` without sign checks."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise FormatError("empty file", line=1)
    head = lines[0].split()
    if not head or head[0] != HMAP_TOKEN:
        raise FormatError(f"expected header token {HMAP_TOKEN}", line=1)
    if len(head) != 7:
        raise FormatError("header needs: HMAP1 nx ny dx_um dy_um x0_um y0_um", line=1)
    try:
        nx, ny = int(head[1]), int(head[2])
        dx, dy, x0, y0 = (float(t) for t in head[3:])
    except ValueError as exc:
        raise FormatError(f"bad header value ({exc})", line=1) from None
    rows = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(rows) != ny:
        raise FormatError(f"header declares ny={ny} rows, found {len(rows)}", line=len(lines))
    values = np.empty((ny, nx))
    for j, (lineno, ln) in enumerate(rows):
        toks = ln.split()
        if len(toks) != nx:
            raise FormatError(f"expected nx={nx} values, found {len(toks)}", line=lineno)
        try:
            values[j] = [float(t) for t in toks]
        except ValueError as exc:
            raise FormatError(str(exc), line=lineno) from None
    return Grid(nx, ny, dx, dy, x0, y0), values


def read_heightmap(path) -> HeightMap:
    grid, values = read_grid_values(path)
    return HeightMap(grid, values)
