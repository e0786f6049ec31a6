"""Cavity constants and the two closed-form conversions.

Units: lengths in µm (heights in nm), frequencies in THz, energies reported
as E/h in THz, masses in kg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN, HBAR, PLANCK, SPEED_OF_LIGHT, THZ
from .errors import GeometryError, ValidationError
from .grid import HeightMap, PotentialMap


@dataclass(frozen=True)
class CavityParams:
    """One cavity configuration. Build it with :func:`derive_cavity`."""

    q: int
    lambda_cut: float  # nm, vacuum
    n_medium: float
    delta_n: float
    D0: float  # µm
    m_ph: float  # kg
    nu_cut: float  # THz
    temperature: float = 300.0  # K

    @property
    def kinetic_constant(self):
        """ħ/(4π m_ph) in µm²·THz, so that E_kin/h = kinetic_constant · k² with k in rad/µm."""
        # m²/s equals µm²·THz numerically
        return HBAR / (4.0 * math.pi * self.m_ph)

    @property
    def thermal_frequency(self):
        return thermal_frequency(self)


def derive_cavity(q=10, lambda_cut=580.0, n_medium=1.44, delta_n=0.11, temperature=300.0):
    """Derive mirror distance, photon mass and cutoff frequency.

    >>> cav = derive_cavity(10, 580.0, 1.44, 0.11)
    >>> round(cav.D0, 4)
    2.0139
    """
    if isinstance(q, bool) or int(q) != q or q < 1:
        raise ValidationError(f"q must be an integer >= 1, got {q!r}")
    if not 400.0 <= lambda_cut <= 800.0:
        raise ValidationError(f"lambda_cut must lie in [400, 800] nm, got {lambda_cut}")
    if not 1.0 < n_medium <= 2.0:
        raise ValidationError(f"n_medium must lie in (1, 2], got {n_medium}")
    if not -0.5 < delta_n < 0.5:
        raise ValidationError(f"delta_n must lie in (-0.5, 0.5), got {delta_n}")
    if not temperature > 0:
        raise ValidationError(f"temperature must be positive, got {temperature}")
    lam_m = lambda_cut * 1e-9
    return CavityParams(
        q=int(q),
        lambda_cut=float(lambda_cut),
        n_medium=float(n_medium),
        delta_n=float(delta_n),
        D0=q * lambda_cut / (2.0 * n_medium) * 1e-3,
        m_ph=PLANCK * n_medium**2 / (SPEED_OF_LIGHT * lam_m),
        nu_cut=SPEED_OF_LIGHT / lam_m / THZ,
        temperature=float(temperature),
    )


def potential_per_nm(cav):
    """V/h in THz produced by one nm of polymer height."""
    return cav.nu_cut * cav.delta_n / (cav.D0 * 1e3 * cav.n_medium)


def height_to_potential(hmap: HeightMap, cav: CavityParams) -> PotentialMap:
    """Convert polymer heights (nm) into potential depth V/h (THz).

    V/h = nu_cut · h_s · Δn / (D0 · n), which is the rest energy
    m_ph c_n² times the relative optical-path increase.
    """
    h = np.asarray(hmap.h, dtype=float)
    if np.any(h < 0):
        raise ValidationError("negative height in height map")
    d0_nm = cav.D0 * 1e3
    if h.size and h.max() >= d0_nm:
        raise GeometryError(f"structure height {h.max():.1f} nm does not fit below the mirror distance {d0_nm:.1f} nm")
    return PotentialMap(hmap.grid, h * potential_per_nm(cav))


def optical_path_increase(h_nm, cav):
    """Local optical path-length increase h·Δn/n in nm."""
    return np.asarray(h_nm) * cav.delta_n / cav.n_medium


def thermal_frequency(cav_or_temperature) -> float:
    """k_B T / h in THz. Accepts a :class:`CavityParams` or a temperature in K."""
    T = getattr(cav_or_temperature, "temperature", cav_or_temperature)
    if T < 0:
        raise ValidationError(f"temperature must be positive, got {T}")
    return BOLTZMANN * T / PLANCK / THZ
