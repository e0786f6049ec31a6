"""Bose-Einstein statistics over a discrete set of bound modes."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .cavity import thermal_frequency
from .errors import DomainError, SolverError, ValidationError

BRACKET_WIDTH = 100.0  # in units of k_B T / h
BRACKET_GAP = 1e-12  # THz, closest approach of mu to the ground mode
MAX_BISECTIONS = 400


@dataclass(frozen=True)
class Population:
    """Grand-canonical occupation of a mode list at chemical potential ``mu`` (THz)."""

    mu: float
    freqs: np.ndarray = field(repr=False)
    occupations: np.ndarray = field(repr=False)
    total_n: float
    condensate_fraction: float
    temperature: float
    degeneracy: np.ndarray = field(default=None, repr=False)


def _freqs(modes):
    return np.asarray(getattr(modes, "freqs", modes), dtype=float)


def be_occupation(nu, mu, T):
    """Mean photon number 1/(exp(h(ν-µ)/k_B T) - 1), frequencies in THz."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= mu):
        raise DomainError(f"chemical potential {mu} must lie below every mode frequency")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1((nu - mu) / thermal_frequency(T))
    return out if out.ndim else float(out)


def bin_degenerate(freqs, tol=1e-4):
    """Collapse frequencies closer than ``tol`` into (representative, multiplicity)."""
    freqs = np.sort(_freqs(freqs))
    reps, mult = [], []
    for nu in freqs:
        if reps and nu - reps[-1] < tol:
            mult[-1] += 1
        else:
            reps.append(nu)
            mult.append(1)
    return np.array(reps), np.array(mult)


def _check_modes(freqs, minimum=1):
    if freqs.ndim != 1 or len(freqs) < minimum:
        raise ValidationError(f"need at least {minimum} modes, got {len(freqs)}")
    if np.any(np.diff(freqs) < 0):
        raise ValidationError("mode frequencies must be sorted ascending")


def solve_mu(modes, total_n, T=300.0, degeneracy=None, rtol=1e-10) -> Population:
    """Chemical potential that puts ``total_n`` photons into ``modes``.

    Bisection on log(ν_ground - µ) over [1e-12 THz, 100 k_B T/h]; the photon
    number is monotone in µ so the bracket either holds the root or the
    request is out of numerical reach.
    """
    freqs = _freqs(modes)
    _check_modes(freqs)
    if not total_n > 0:
        raise ValidationError(f"total_n must be positive, got {total_n}")
    g = np.ones_like(freqs) if degeneracy is None else np.asarray(degeneracy, dtype=float)
    if g.shape != freqs.shape or np.any(g <= 0):
        raise ValidationError("degeneracy must be positive and match the mode list")

    nu0 = freqs[0]
    nth = thermal_frequency(T)

    def count(log_gap):
        return float(np.sum(g * be_occupation(freqs, nu0 - np.exp(log_gap), T)))

    lo, hi = np.log(BRACKET_GAP), np.log(BRACKET_WIDTH * nth)
    # count() falls as the gap grows
    if not count(hi) <= total_n <= count(lo):
        raise SolverError(f"photon number {total_n} not bracketed by mu in [nu0 - {BRACKET_WIDTH} kT/h, nu0 - {BRACKET_GAP}]")
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        n_mid = count(mid)
        if abs(n_mid - total_n) <= rtol * total_n or hi - lo < 1e-15:
            break
        if n_mid > total_n:
            lo = mid
        else:
            hi = mid
    mu = nu0 - np.exp(mid)
    occ = g * be_occupation(freqs, mu, T)
    return Population(
        mu=float(mu),
        freqs=freqs,
        occupations=occ,
        total_n=float(occ.sum()),
        condensate_fraction=float(occ[0] / occ.sum()),
        temperature=float(T),
        degeneracy=g,
    )


def critical_number(modes, T=300.0, degeneracy=None) -> float:
    """Saturated excited-state population Σ_{i>0} n_BE(ν_i, µ=ν_0)."""
    freqs = _freqs(modes)
    _check_modes(freqs, minimum=2)
    if T <= 0:
        return 0.0
    g = np.ones_like(freqs) if degeneracy is None else np.asarray(degeneracy, dtype=float)
    return float(np.sum(g[1:] * be_occupation(freqs[1:], freqs[0], T)))


def thermal_weights(modes, kind="boltzmann", T=300.0, total_n=None):
    """Per-mode spectral weights normalized to a maximum of 1.

    ``kind="boltzmann"`` gives exp(-h(ν_i-ν_0)/k_B T); ``kind="bose"`` uses the
    occupations of :func:`solve_mu` at ``total_n`` photons.
    """
    freqs = _freqs(modes)
    _check_modes(freqs)
    if kind == "boltzmann":
        w = np.exp(-(freqs - freqs[0]) / thermal_frequency(T))
    elif kind == "bose":
        if total_n is None:
            raise ValidationError("bose weights need total_n")
        w = solve_mu(freqs, total_n, T).occupations
    else:
        raise ValidationError(f"unknown weight kind {kind!r}")
    return w / w.max()


def write_population(pop: Population, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["index", "nu_THz", "occupation"])
        for i, (nu, n) in enumerate(zip(pop.freqs, pop.occupations)):
            w.writerow([i, f"{nu:.10g}", f"{n:.10g}"])
