"""Tight-binding picture of coupled pillars: double wells and SSH chains."""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares

from .cavity import derive_cavity, height_to_potential
from .eigensolver import (
    DEFAULT_SEED,
    ModeSet,
    assemble_hamiltonian,
    bound_filter,
    parity_residual,
    solve_lowest,
)
from .errors import (
    CalibrationWarning,
    CavityError,
    DomainError,
    ExtractionError,
    FormatError,
    ValidationError,
)
from .grid import Grid
from .landscape import DEFAULT_MARGIN, SshGeometry, make_pillars, ssh_centers

MIDGAP_FRACTION = 0.25
PARITY_TOL = 1e-2


@dataclass(frozen=True)
class TightBindingModel:
    """Nearest-neighbour chain: on-site ``e0`` and hoppings entering as -J (THz)."""

    n_sites: int
    e0: float
    couplings: tuple

    def __post_init__(self):
        c = tuple(float(j) for j in self.couplings)
        if self.n_sites < 2:
            raise ValidationError("need at least two sites")
        if len(c) != self.n_sites - 1:
            raise ValidationError(f"{self.n_sites} sites need {self.n_sites - 1} couplings, got {len(c)}")
        if any(j <= 0 for j in c):
            raise ValidationError("couplings must be positive")
        object.__setattr__(self, "couplings", c)

    @classmethod
    def ssh(cls, n_cells, e0, j_i, j_o):
        n = 2 * n_cells
        return cls(n, e0, tuple(j_i if k % 2 == 0 else j_o for k in range(n - 1)))

    @property
    def j_i(self):
        return self.couplings[0]

    @property
    def j_o(self):
        return self.couplings[1] if len(self.couplings) > 1 else self.couplings[0]

    def matrix(self):
        off = -np.asarray(self.couplings)
        return np.diag(np.full(self.n_sites, self.e0)) + np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class CouplingCurve:
    distances: np.ndarray
    couplings: np.ndarray
    source: str = "simulated"
    failures: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.distances, float)
        j = np.asarray(self.couplings, float)
        if d.shape != j.shape:
            raise ValidationError("distances and couplings differ in length")
        if np.any(np.diff(d) <= 0):
            raise ValidationError("distances must be ascending")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "couplings", j)

    @property
    def monotone_decreasing(self):
        j = self.couplings[np.isfinite(self.couplings)]
        return bool(np.all(np.diff(j) < 0))


def _fix_sign(vecs):
    idx = np.argmax(np.abs(vecs), axis=0)
    s = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    s[s == 0] = 1.0
    return vecs * s


def two_mode_eigen(e0, j):
    """Eigenpairs of [[e0, -j], [-j, e0]]: symmetric at e0-j, antisymmetric at e0+j."""
    if j <= 0:
        raise ValidationError("coupling must be positive")
    w, v = np.linalg.eigh(np.array([[e0, -j], [-j, e0]], dtype=float))
    v = _fix_sign(v)
    return w[0], w[1], v[:, 0], v[:, 1]


def extract_j(modes, check_parity=True):
    """Coupling as half the splitting of the two lowest modes.

    Accepts a :class:`ModeSet` or a plain sequence of frequencies. For a mode
    set centered on its grid, the ground mode must be even and the first
    excited mode odd under x -> -x; violations raise a CalibrationWarning.
    """
    freqs = np.sort(np.asarray(getattr(modes, "freqs", modes), float))
    if len(freqs) < 2:
        raise ExtractionError(f"need two bound modes, got {len(freqs)}")
    j = 0.5 * (freqs[1] - freqs[0])
    if len(freqs) > 2 and freqs[2] - freqs[1] < freqs[1] - freqs[0]:
        warnings.warn("third mode lies closer than the splitting; two-mode picture is doubtful", CalibrationWarning, stacklevel=2)
    if check_parity and isinstance(modes, ModeSet):
        even = parity_residual(modes.fields[0], axis=1)
        odd = parity_residual(modes.fields[1], axis=1, odd=True)
        if even > PARITY_TOL or odd > PARITY_TOL:
            warnings.warn(f"parity check failed (even residual {even:.2e}, odd residual {odd:.2e})", CalibrationWarning, stacklevel=2)
    return float(j)


def double_well_grid(d, r, dx, margin=DEFAULT_MARGIN):
    return Grid.centered(d + 2 * r + 2 * margin, 2 * r + 2 * margin, dx)


def double_well_modes(d, r=0.6, h_s=600.0, cav=None, dx=0.05, margin=DEFAULT_MARGIN, k=4, tol=1e-8, seed=DEFAULT_SEED):
    """Bound modes of two pillars at center distance ``d`` µm."""
    cav = derive_cavity() if cav is None else cav
    grid = double_well_grid(d, r, dx, margin)
    cx, cy = grid.center
    hmap = make_pillars(grid, [(cx - d / 2, cy), (cx + d / 2, cy)], r, h_s, margin=margin)
    H = assemble_hamiltonian(height_to_potential(hmap, cav), cav)
    return bound_filter(solve_lowest(H, k, tol=tol, seed=seed))


def coupling_sweep(d_list, r=0.6, h_s=600.0, cav=None, dx=0.05, margin=DEFAULT_MARGIN, k=4, tol=1e-8, seed=DEFAULT_SEED, workers=1):
    """J(d) from continuum solves; failed points are recorded as NaN with their error."""
    d = np.asarray(d_list, dtype=float)
    if np.any(np.diff(d) <= 0) or np.any(d < 0.1):
        raise ValidationError("distances must be ascending and at least 0.1 µm")
    cav = derive_cavity() if cav is None else cav

    def one(di):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CalibrationWarning)
            return extract_j(double_well_modes(di, r, h_s, cav, dx, margin, k, tol, seed))

    couplings = np.full(len(d), np.nan)
    failures = {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(one, di) for di in d]
        for i, fut in enumerate(futures):
            try:
                couplings[i] = fut.result()
            except CavityError as exc:
                failures[float(d[i])] = str(exc)
    return CouplingCurve(d, couplings, "simulated", failures)


def kink_location(curve: CouplingCurve):
    """Distance where the slope of log J changes most abruptly."""
    d, lj = curve.distances, np.log(curve.couplings)
    slope = np.diff(lj) / np.diff(d)
    mids = 0.5 * (d[1:] + d[:-1])
    curv = np.abs(np.diff(slope) / np.diff(mids))
    return float(d[1:-1][np.argmax(curv)])


@dataclass(frozen=True)
class SshSpectrum:
    freqs: np.ndarray
    vectors: np.ndarray = field(repr=False)  # columns are eigenvectors
    gap: float
    span: float
    midgap: np.ndarray  # indices into freqs


def ssh_spectrum(model: TightBindingModel) -> SshSpectrum:
    """Full diagonalization of the open chain.

    Midgap states are levels within 25% of the bulk gap half-width |J_i-J_o|
    of e0; the gap is measured between the remaining levels on either side.
    """
    d = np.full(model.n_sites, model.e0)
    e = -np.asarray(model.couplings)
    w, v = scipy.linalg.eigh_tridiagonal(d, e)
    v = _fix_sign(v)
    half = abs(model.j_i - model.j_o)
    midgap = np.flatnonzero(np.abs(w - model.e0) < MIDGAP_FRACTION * half)
    rest = np.delete(w, midgap)
    above, below = rest[rest >= model.e0], rest[rest < model.e0]
    gap = float(above.min() - below.max()) if len(above) and len(below) else 0.0
    return SshSpectrum(w, v, gap, float(w[-1] - w[0]), midgap)


def edge_localization(vector, cell=2):
    """Weight of a normalized site vector on the first and last unit cells."""
    a = np.abs(np.asarray(vector)) ** 2
    return float(a[:cell].sum() + a[-cell:].sum())


def winding_number(j_i, j_o, samples=256):
    """Times h(k) = j_i + j_o e^{ik} encircles the origin for k in [0, 2π)."""
    if np.isclose(j_i, j_o, rtol=1e-12, atol=0.0):
        raise DomainError("gap closes at j_i == j_o; winding number undefined")
    k = np.linspace(0.0, 2 * np.pi, samples + 1)
    h = j_i + j_o * np.exp(1j * k)
    phase = np.unwrap(np.angle(h))
    return int(round((phase[-1] - phase[0]) / (2 * np.pi)))


@dataclass(frozen=True)
class TbFit:
    model: TightBindingModel
    residual: float  # rms eigenvalue mismatch, THz
    relative_residual: float  # residual / continuum span


def calibrate_tb(modes, geo_or_cells) -> TbFit:
    """Least-squares (e0, J_i, J_o) matching sorted chain levels to continuum levels."""
    n_cells = getattr(geo_or_cells, "n_cells", geo_or_cells)
    n = 2 * n_cells
    target = np.sort(np.asarray(getattr(modes, "freqs", modes), float))
    if len(target) < n:
        raise ValidationError(f"need {n} modes to calibrate a {n}-site chain, got {len(target)}")
    target = target[:n]
    span = target[-1] - target[0]
    steps = np.diff(target)
    e0_guess = 0.5 * (target[0] + target[-1])
    gap_guess = steps.max()

    def resid(p):
        e0, ji, jo = p
        return scipy.linalg.eigvalsh_tridiagonal(np.full(n, e0), -np.array([ji if k % 2 == 0 else jo for k in range(n - 1)])) - target

    best = None
    big, small = 0.25 * (span + gap_guess), max(0.25 * (span - gap_guess), 1e-3 * span)
    for ji0, jo0 in ((big, small), (small, big)):
        sol = least_squares(resid, [e0_guess, ji0, jo0], bounds=([-np.inf, 1e-9, 1e-9], np.inf), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or sol.cost < best.cost:
            best = sol
    e0, ji, jo = best.x
    rms = float(np.sqrt(np.mean(best.fun**2)))
    rel = rms / span if span > 0 else 0.0
    if rel > 0.2:
        warnings.warn(f"tight-binding fit residual is {rel:.0%} of the span", CalibrationWarning, stacklevel=2)
    return TbFit(TightBindingModel.ssh(n_cells, e0, ji, jo), rms, rel)


@dataclass(frozen=True)
class ChainAnalysis:
    """Band structure read off continuum modes of a pillar chain."""

    freqs: np.ndarray
    edge_fraction: np.ndarray
    gap: float
    midgap: np.ndarray  # indices into freqs


def chain_edge_fraction(modes: ModeSet, geo: SshGeometry, center=None):
    """Fraction of each mode's intensity beyond the first and last unit cell boundaries."""
    center = modes.grid.center if center is None else center
    xs = np.array([c[0] for c in ssh_centers(geo, center)])
    left_cut = 0.5 * (xs[1] + xs[2])
    right_cut = 0.5 * (xs[-2] + xs[-3])
    X, _ = modes.grid.mesh()
    outer = (X < left_cut) | (X > right_cut)
    dens = modes.fields**2 * modes.grid.cell_area
    return dens[:, outer].sum(axis=1) / dens.sum(axis=(1, 2))


def analyze_chain(modes: ModeSet, geo: SshGeometry, center=None) -> ChainAnalysis:
    """Gap and midgap modes among the lowest 2·n_cells continuum modes.

    The two central levels count as midgap when each sits more than 25% of
    the surrounding gap away from both band edges.
    """
    n = geo.n_sites
    if len(modes) < n:
        raise ValidationError(f"need {n} modes for a {n}-pillar chain, got {len(modes)}")
    sub = modes.subset(range(n))
    f = sub.freqs
    frac = chain_edge_fraction(sub, geo, center)
    c = geo.n_cells
    lo, m1, m2, hi = f[c - 2], f[c - 1], f[c], f[c + 1]
    outer_gap = hi - lo
    if m1 - lo > MIDGAP_FRACTION * outer_gap and hi - m2 > MIDGAP_FRACTION * outer_gap:
        return ChainAnalysis(f, frac, float(outer_gap), np.array([c - 1, c]))
    return ChainAnalysis(f, frac, float(m2 - m1), np.array([], dtype=int))


def chain_modes(geo: SshGeometry, cav=None, dx=0.05, margin=DEFAULT_MARGIN, k=None, tol=1e-8, seed=DEFAULT_SEED):
    """Continuum modes of the pillar chain on a grid sized to the chain."""
    cav = derive_cavity() if cav is None else cav
    grid = Grid.centered(geo.length + 2 * margin, 2 * geo.r + 2 * margin, dx)
    from .landscape import make_ssh_chain

    hmap = make_ssh_chain(grid, geo, margin=margin)
    H = assemble_hamiltonian(height_to_potential(hmap, cav), cav)
    k = geo.n_sites + 4 if k is None else k
    return bound_filter(solve_lowest(H, k, tol=tol, seed=seed))


def write_coupling_curve(curve: CouplingCurve, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["d_um", "J_THz", "source"])
        for d, j in zip(curve.distances, curve.couplings):
            w.writerow([f"{d:.10g}", f"{j:.10g}", curve.source])


def write_ssh_levels(freqs, edge_fraction, midgap, path):
    mid = set(np.asarray(midgap).tolist())
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["index", "nu_THz", "edge_fraction", "midgap"])
        for i, (nu, e) in enumerate(zip(freqs, edge_fraction)):
            w.writerow([i, f"{nu:.10g}", f"{e:.10g}", int(i in mid)])


def write_tb_model(model: TightBindingModel, path):
    with open(path, "w") as f:
        f.write(f"n_sites = {model.n_sites}\n")
        f.write(f"e0 = {model.e0!r}\n")
        f.write("couplings = " + ", ".join(repr(j) for j in model.couplings) + "\n")


def read_tb_model(path) -> TightBindingModel:
    vals = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError("expected key = value", line=lineno)
            key = key.strip()
            if key in vals:
                raise FormatError(f"duplicate key {key!r}", line=lineno)
            vals[key] = value.strip()
    try:
        return TightBindingModel(int(vals["n_sites"]), float(vals["e0"]), tuple(float(t) for t in vals["couplings"].split(",")))
    except KeyError as exc:
        raise FormatError(f"missing key {exc.args[0]!r}") from None
