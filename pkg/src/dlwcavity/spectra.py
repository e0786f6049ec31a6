"""Synthetic position-space and momentum-space spectra.

Frequencies on the spectral axis are offsets from the lowest mode of the
set, the way spectrometer images are read.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .cavity import CavityParams
from .errors import ValidationError

DEFAULT_BIN = 0.05  # THz
DEFAULT_DISPERSION = 1.0  # µm per THz


@dataclass(frozen=True)
class SpectrumImage:
    """Intensity on a uniform (axis0 × frequency-offset) raster.

    ``intensity[i, b]`` is a density: summing ``intensity * axis0_step *
    axis1_step`` returns the total weight put into the image.
    """

    axis0_kind: str  # "position" (µm) or "momentum" (rad/µm)
    axis0: np.ndarray = field(repr=False)
    axis1: np.ndarray = field(repr=False)  # bin centers, THz
    intensity: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    @property
    def axis0_step(self):
        return float(self.axis0[1] - self.axis0[0])

    @property
    def axis1_step(self):
        return float(self.axis1[1] - self.axis1[0])

    def integral(self):
        return float(self.intensity.sum() * self.axis0_step * self.axis1_step)


def _check_weights(modes, weights):
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(modes),):
        raise ValidationError(f"got {w.size} weights for {len(modes)} modes")
    if np.any(w < 0):
        raise ValidationError("weights must be non-negative")
    return w


def _frequency_axis(lo, hi, bin_width):
    start = np.floor(lo / bin_width) * bin_width - bin_width
    nbins = int(np.ceil((hi - start) / bin_width)) + 2
    return start + bin_width * np.arange(nbins)


def _deposit(axis, positions, masses):
    """Linear (cloud-in-cell) deposition onto bin centers; conserves mass."""
    step = axis[1] - axis[0]
    u = (positions - axis[0]) / step
    i0 = np.floor(u).astype(int)
    frac = u - i0
    out = np.zeros(len(axis))
    for idx, wt in ((i0, 1.0 - frac), (i0 + 1, frac)):
        ok = (idx >= 0) & (idx < len(axis))
        np.add.at(out, idx[ok], masses[ok] * wt[ok])
    return out


def position_spectrum(modes, weights, dispersion=DEFAULT_DISPERSION, freq_bins=None, defocus=0.0) -> SpectrumImage:
    """Slitless spectrometer image along x.

    Each mode contributes its x-profile T_i(x) = ∫|ψ_i|² dy times its
    y-profile remapped onto frequency, Δν = (ν_i - ν_0) + (y - y_c)/dispersion,
    scaled by the mode weight. ``freq_bins`` are bin centers (THz); by default
    the axis covers every contribution with 0.05 THz bins. ``defocus`` (µm)
    blurs the x-profiles with a Gaussian.
    """
    w = _check_weights(modes, weights)
    if dispersion <= 0:
        raise ValidationError("dispersion must be positive")
    g = modes.grid
    yc = g.center[1]
    shift = (g.y - yc) / dispersion
    rel = modes.relative_freqs()
    if freq_bins is None:
        axis1 = _frequency_axis(rel.min() + shift.min(), rel.max() + shift.max(), DEFAULT_BIN)
    else:
        axis1 = np.asarray(freq_bins, dtype=float)
    step1 = axis1[1] - axis1[0]

    density = modes.fields**2
    image = np.zeros((g.nx, len(axis1)))
    for i in range(len(modes)):
        if w[i] == 0:
            continue
        tx = density[i].sum(axis=0) * g.dy
        if defocus > 0:
            tx = ndimage.gaussian_filter1d(tx, defocus / g.dx, mode="constant")
        py = density[i].sum(axis=1) * g.dx * g.dy
        k = _deposit(axis1, rel[i] + shift, py) / step1
        image += w[i] * np.outer(tx, k)
    meta = {"dispersion_um_per_THz": float(dispersion), "defocus_um": float(defocus)}
    return SpectrumImage("position", g.x.copy(), axis1, image, meta)


def mode_momentum_density(field, grid, pad=2):
    """|ψ̃(k_x, k_y)|² on the FFT grid, normalized so Σ|ψ̃|² dk_x dk_y /(2π)² = 1."""
    ny, nx = field.shape
    Nx, Ny = pad * nx, pad * ny
    ft = np.fft.fftshift(np.fft.fft2(field, s=(Ny, Nx))) * grid.dx * grid.dy
    kx = np.fft.fftshift(np.fft.fftfreq(Nx, d=grid.dx)) * 2 * np.pi
    ky = np.fft.fftshift(np.fft.fftfreq(Ny, d=grid.dy)) * 2 * np.pi
    return kx, ky, np.abs(ft) ** 2


def parseval_norm(field, grid, pad=2):
    kx, ky, p = mode_momentum_density(field, grid, pad)
    dkx, dky = kx[1] - kx[0], ky[1] - ky[0]
    return float(p.sum() * dkx * dky / (2 * np.pi) ** 2)


def mean_k_squared(field, grid, pad=2):
    """Intensity-weighted ⟨k_x² + k_y²⟩ in (rad/µm)²."""
    kx, ky, p = mode_momentum_density(field, grid, pad)
    KX, KY = np.meshgrid(kx, ky)
    return float(np.sum((KX**2 + KY**2) * p) / p.sum())


def na_cutoff(cav: CavityParams, na):
    """Largest transverse wave number collected by an objective of aperture ``na`` (rad/µm)."""
    return 2 * np.pi * na * cav.n_medium / (cav.lambda_cut * 1e-3)


def momentum_spectrum(modes, weights, cav: CavityParams, na=0.5, freq_bins=None, pad=2) -> SpectrumImage:
    """Momentum-resolved spectrum: |ψ̃_i(k_x, k_y)|² integrated over k_y at ν_i - ν_0.

    Columns with |k_x| above the objective cutoff are listed in
    ``metadata["blocked"]``; their intensity is kept so the image still
    integrates to Σ w_i.
    """
    w = _check_weights(modes, weights)
    if not 0 < na <= 1:
        raise ValidationError("numerical aperture must lie in (0, 1]")
    g = modes.grid
    rel = modes.relative_freqs()
    axis1 = _frequency_axis(rel.min(), rel.max(), DEFAULT_BIN) if freq_bins is None else np.asarray(freq_bins, float)
    step1 = axis1[1] - axis1[0]
    kx = None
    image = None
    for i in range(len(modes)):
        kx, ky, p = mode_momentum_density(modes.fields[i], g, pad)
        if image is None:
            image = np.zeros((len(kx), len(axis1)))
        if w[i] == 0:
            continue
        dky = ky[1] - ky[0]
        # density per unit k_x so that Σ p_x dk_x = 1
        px = p.sum(axis=0) * dky / (2 * np.pi) ** 2
        line = _deposit(axis1, np.array([rel[i]]), np.array([1.0])) / step1
        image += w[i] * np.outer(px, line)
    kmax = na_cutoff(cav, na)
    meta = {
        "na": float(na),
        "k_cutoff_rad_per_um": float(kmax),
        "blocked": np.flatnonzero(np.abs(kx) > kmax).tolist(),
    }
    return SpectrumImage("momentum", kx, axis1, image, meta)


def dispersion_curve(cav: CavityParams, k_samples):
    """Free-particle kinetic frequency ħk²/(4π m_ph) in THz for k in rad/µm."""
    k = np.asarray(k_samples, dtype=float)
    if not np.all(np.isfinite(k)):
        raise ValidationError("k samples must be finite")
    return np.column_stack([k, cav.kinetic_constant * k**2])


def write_spectrum(img: SpectrumImage, path):
    """CSV: one header comment, then one row per axis0 sample and one column per frequency bin."""
    with open(path, "w") as f:
        f.write(f"# {img.axis0_kind} {img.axis0[0]:.10g} {img.axis0_step:.10g} {img.axis1[0]:.10g} {img.axis1_step:.10g}\n")
        for row in img.intensity:
            f.write(",".join(f"{v:.8g}" for v in row))
            f.write("\n")


def read_spectrum(path):
    """Inverse of :func:`write_spectrum` (metadata is not stored)."""
    with open(path) as f:
        head = f.readline().lstrip("#").split()
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    kind = head[0]
    a0, s0, a1, s1 = (float(t) for t in head[1:5])
    axis0 = a0 + s0 * np.arange(data.shape[0])
    axis1 = a1 + s1 * np.arange(data.shape[1])
    return SpectrumImage(kind, axis0, axis1, data)


def write_curve(rows, path, header):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.10g}" for v in row])
