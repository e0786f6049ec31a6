"""Transverse cavity modes from the 2D effective-mass Schrödinger operator.

The operator acts on frequencies (E/h in THz)::

    H = -K ∇² + (V_max - V(x, y))

with K = ħ/(4π m_ph) and Dirichlet walls at the grid boundary. Shifting by
the potential depth V_max keeps the spectrum non-negative, so eigenvalues are
frequencies above the bottom of the potential and bound modes sit below
``depth``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cavity import CavityParams
from .errors import ConfigError, SolverError, ValidationError
from .grid import SOLVER_MIN_NODES, Grid, PotentialMap

DEFAULT_SEED = 42
DEGENERACY_TOL = 1e-4  # THz
DENSE_MAX_NODES = 64 * 64
MAX_MODES = 512


@dataclass(frozen=True)
class Hamiltonian:
    matrix: sp.csr_matrix = field(repr=False)
    grid: Grid
    depth: float  # THz
    m_ph: float  # kg
    kinetic: float  # K/dx² in THz


@dataclass(frozen=True)
class ModeSet:
    """Eigenmodes ordered by frequency.

    ``freqs`` are measured from the potential minimum (THz). ``fields`` has
    shape ``(k, ny, nx)`` and each field is normalized to Σ|ψ|² dx dy = 1.
    """

    grid: Grid
    freqs: np.ndarray
    fields: np.ndarray = field(repr=False)
    depth: float
    m_ph: float

    def __len__(self):
        return len(self.freqs)

    def subset(self, indices):
        idx = np.asarray(indices, dtype=int)
        return ModeSet(self.grid, self.freqs[idx], self.fields[idx], self.depth, self.m_ph)

    def relative_freqs(self):
        """Frequencies measured from the lowest mode."""
        return self.freqs - self.freqs[0]

    def degenerate_groups(self, tol=DEGENERACY_TOL):
        """Runs of consecutive modes whose frequencies differ by less than ``tol``."""
        groups = []
        for i, nu in enumerate(self.freqs):
            if groups and nu - self.freqs[groups[-1][-1]] < tol:
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups


def kinetic_prefactor(m_ph, dx):
    """ħ/(4π m_ph dx²) in THz for dx in µm."""
    from .constants import HBAR

    return HBAR / (4.0 * np.pi * m_ph) / dx**2


def _laplacian_1d(n):
    return sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csr")


def assemble_hamiltonian(pmap: PotentialMap, cav: CavityParams) -> Hamiltonian:
    """Five-point finite-difference operator in THz with Dirichlet walls."""
    g = pmap.grid
    if not np.isclose(g.dx, g.dy, rtol=1e-9, atol=0.0):
        raise ConfigError(f"non-square cells: dx={g.dx} dy={g.dy}")
    if g.nx < SOLVER_MIN_NODES or g.ny < SOLVER_MIN_NODES:
        raise ConfigError(f"solver needs at least {SOLVER_MIN_NODES} nodes per axis")
    kin = kinetic_prefactor(cav.m_ph, g.dx)
    lap = sp.kron(sp.identity(g.ny), _laplacian_1d(g.nx)) + sp.kron(_laplacian_1d(g.ny), sp.identity(g.nx))
    depth = pmap.depth
    H = (-kin) * lap + sp.diags((depth - pmap.v).ravel())
    return Hamiltonian(H.tocsr(), g, depth, cav.m_ph, kin)


def _fix_phase(vecs):
    # largest-magnitude amplitude positive; first index wins ties
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def solve_lowest(H: Hamiltonian, k, tol=1e-8, seed=DEFAULT_SEED, method="lanczos") -> ModeSet:
    """Lowest ``k`` eigenpairs of ``H``.

    ``method="lanczos"`` runs implicitly restarted Lanczos in shift-invert
    mode around a shift just below the spectrum, started from a seeded
    Gaussian vector. ``method="dense"`` diagonalizes the full matrix and is
    limited to 64×64 grids.
    """
    n = H.matrix.shape[0]
    kmax = min(n // 10, MAX_MODES)
    if not 1 <= k <= kmax:
        raise ValidationError(f"k must lie in [1, {kmax}] for {n} nodes, got {k}")
    if not 1e-10 <= tol <= 1e-4:
        raise ValidationError(f"tol must lie in [1e-10, 1e-4], got {tol}")

    if method == "dense":
        if n > DENSE_MAX_NODES:
            raise ValidationError(f"dense solve limited to {DENSE_MAX_NODES} nodes, got {n}")
        w, v = scipy.linalg.eigh(H.matrix.toarray(), subset_by_index=[0, k - 1])
    elif method == "lanczos":
        w, v = _lanczos(H.matrix, k, tol, seed)
    else:
        raise ValidationError(f"unknown solver method {method!r}")

    order = np.argsort(w, kind="stable")
    w, v = w[order], _fix_phase(v[:, order])
    v = v / np.linalg.norm(v, axis=0)

    resid = np.linalg.norm(H.matrix @ v - v * w, axis=0)
    bad = resid > tol * np.maximum(np.abs(w), 1e-300)
    if np.any(bad):
        worst = float(np.max(resid / np.abs(w)))
        raise SolverError(f"{int(bad.sum())} eigenpairs exceed residual tolerance {tol:g} (worst {worst:.2e})", residual=worst)

    g = H.grid
    fields = (v.T / np.sqrt(g.cell_area)).reshape(k, g.ny, g.nx)
    return ModeSet(g, w, fields, H.depth, H.m_ph)


def _lanczos(A, k, tol, seed, maxiter=None):
    n = A.shape[0]
    v0 = np.random.default_rng(seed).standard_normal(n)
    # the operator is positive semidefinite; a shift below zero keeps the factorization definite
    sigma = -0.05
    try:
        w, v = spla.eigsh(A, k=k, sigma=sigma, which="LM", v0=v0, tol=tol * 1e-3, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise SolverError(f"Lanczos did not converge: {len(exc.eigenvalues)} of {k} eigenpairs", residual=np.inf) from None
    return w, v


def boundary_mass(modes: ModeSet, rings=3):
    """Probability in the outermost ``rings`` node rings, one value per mode."""
    f2 = modes.fields**2 * modes.grid.cell_area
    inner = f2[:, rings:-rings, rings:-rings].sum(axis=(1, 2))
    return f2.sum(axis=(1, 2)) - inner


def bound_filter(modes: ModeSet, rings=3, max_boundary_mass=1e-3) -> ModeSet:
    """Keep modes below the potential depth that stay clear of the grid walls."""
    if np.isinf(modes.depth):
        return modes
    keep = (modes.freqs < modes.depth) & (boundary_mass(modes, rings) < max_boundary_mass)
    return modes.subset(np.flatnonzero(keep))


def parity_residual(field, axis=1, odd=False):
    """Node-wise mismatch ‖ψ ∓ Pψ‖/‖ψ‖ under the mirror that flips ``axis``.

    Only meaningful when the grid is symmetric about its center.
    """
    mirrored = np.flip(field, axis=axis)
    diff = field + mirrored if odd else field - mirrored
    return float(np.linalg.norm(diff) / np.linalg.norm(field))


def export_modes(modes: ModeSet, directory, bound=None, fields=True):
    """Write ``modes.csv`` (index, nu_THz, bound) and one HMAP1 file per mode."""
    from .landscape import write_heightmap
    from .grid import HeightMap

    os.makedirs(directory, exist_ok=True)
    if bound is None:
        bound = np.ones(len(modes), dtype=bool)
    paths = []
    manifest = os.path.join(directory, "modes.csv")
    with open(manifest, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["index", "nu_THz", "bound"])
        for i, nu in enumerate(modes.freqs):
            w.writerow([i, f"{nu:.10g}", int(bool(bound[i]))])
    paths.append(manifest)
    if fields:
        shell = HeightMap(modes.grid, np.zeros(modes.grid.shape))
        for i in range(len(modes)):
            p = os.path.join(directory, f"mode_{i:03d}.hmap")
            write_heightmap(shell, p, values=modes.fields[i])
            paths.append(p)
    return paths
