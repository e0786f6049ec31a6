"""End-to-end pipeline for one scenario: landscape, modes, statistics, spectra."""

from __future__ import annotations

import hashlib
import json
import os
import platform
import time

import numpy as np
import scipy

from . import __version__
from .cavity import height_to_potential, thermal_frequency
from .config import Scenario
from .eigensolver import assemble_hamiltonian, bound_filter, export_modes, solve_lowest
from .grid import Grid, HeightMap
from .landscape import (
    SshGeometry,
    apply_voxel_smoothing,
    make_box,
    make_paraboloid,
    make_pillars,
    make_ssh_chain,
    quantize_dipin,
    read_heightmap,
    write_heightmap,
)
from .lattice import (
    analyze_chain,
    calibrate_tb,
    coupling_sweep,
    extract_j,
    kink_location,
    ssh_spectrum,
    write_coupling_curve,
    write_ssh_levels,
    write_tb_model,
)
from .spectra import dispersion_curve, momentum_spectrum, position_spectrum, write_curve, write_spectrum
from .thermo import critical_number, solve_mu, thermal_weights, write_population


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_heightmap(s: Scenario) -> HeightMap:
    """Height map for the scenario geometry, fabrication artifacts applied.

    Dip-in terraces are cut first and then blurred by the voxel, the order in
    which they arise during writing.
    """
    g, dx, margin = s.geometry, s.solver["dx"], s.solver["margin"]
    if s.kind == "box":
        grid = Grid.centered(g["side"] + 2 * margin, g["side"] + 2 * margin, dx)
        hmap = make_box(grid, g["side"], g["h_s"], margin=margin)
    elif s.kind == "double_well":
        d = g["d"][0]
        grid = Grid.centered(d + 2 * g["r"] + 2 * margin, 2 * g["r"] + 2 * margin, dx)
        cx, cy = grid.center
        hmap = make_pillars(grid, [(cx - d / 2, cy), (cx + d / 2, cy)], g["r"], g["h_s"], margin=margin)
    elif s.kind == "ssh":
        geo = ssh_geometry(s)
        grid = Grid.centered(geo.length + 2 * margin, 2 * geo.r + 2 * margin, dx)
        hmap = make_ssh_chain(grid, geo, margin=margin)
    elif s.kind == "paraboloid":
        radius = np.sqrt(g["h_max"] / g["curvature"])
        side = 2 * radius + 2 * margin
        grid = Grid.centered(side, side, dx)
        hmap = make_paraboloid(grid, g["curvature"], g["h_max"])
    else:
        hmap = read_heightmap(g["path"])
    fab = s.fabrication
    if fab["dipin_step"] > 0:
        hmap = quantize_dipin(hmap, fab["dipin_step"])
    if fab["voxel_radius"] > 0:
        hmap = apply_voxel_smoothing(hmap, fab["voxel_radius"])
    return hmap


def ssh_geometry(s: Scenario) -> SshGeometry:
    g = s.geometry
    return SshGeometry(g["n_cells"], g["d_i"], g["d_o"], g["r"], g["h_s"])


class _Outputs:
    def __init__(self, root):
        self.root = root
        self.files = []

    def path(self, name):
        p = os.path.join(self.root, name)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        self.files.append(p)
        return p

    def extend(self, paths):
        self.files.extend(paths)

    def mark_partial(self):
        for p in self.files:
            if os.path.exists(p):
                os.replace(p, p + ".partial")


def run_scenario(s: Scenario, out_dir=None, threads=1):
    """Run the pipeline and write every output under ``out_dir``.

    Returns the report dictionary that is also stored in ``manifest.json``.
    On failure every file written so far is renamed with a ``.partial``
    suffix and the exception propagates.
    """
    out_dir = out_dir or s.output or "out"
    os.makedirs(out_dir, exist_ok=True)
    outs = _Outputs(out_dir)
    timings = {}
    report = {"kind": s.kind}
    try:
        if s.kind == "double_well" and len(s.geometry["d"]) > 1:
            _run_sweep(s, outs, report, timings, threads)
        else:
            _run_pipeline(s, outs, report, timings)
    except BaseException:
        outs.mark_partial()
        raise
    manifest = {
        "inputs_sha256": hashlib.sha256((s.source + f"\nseed={s.seed}\n").encode()).hexdigest(),
        "config": os.path.abspath(s.path) if s.path else None,
        "seed": s.seed,
        "versions": {
            "dlwcavity": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "timings_s": timings,
        "results": report,
        "outputs": {os.path.relpath(p, out_dir): sha256_file(p) for p in outs.files},
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def _timed(timings, name):
    class _T:
        def __enter__(self):
            self.t = time.perf_counter()

        def __exit__(self, *exc):
            timings[name] = round(time.perf_counter() - self.t, 4)

    return _T()


def _run_sweep(s, outs, report, timings, threads):
    g = s.geometry
    with _timed(timings, "coupling_sweep"):
        curve = coupling_sweep(
            g["d"], g["r"], g["h_s"], s.cavity, s.solver["dx"], s.solver["margin"],
            k=s.solver["k"], tol=s.solver["tol"], seed=s.seed, workers=threads,
        )
    write_coupling_curve(curve, outs.path("coupling_curve.csv"))
    report["distances_um"] = curve.distances.tolist()
    report["couplings_THz"] = [round(float(j), 8) for j in curve.couplings]
    report["monotone_decreasing"] = curve.monotone_decreasing
    report["failures"] = curve.failures
    if len(curve.distances) >= 3 and np.all(np.isfinite(curve.couplings)):
        report["kink_um"] = kink_location(curve)


def _run_pipeline(s, outs, report, timings):
    cav = s.cavity
    with _timed(timings, "landscape"):
        hmap = build_heightmap(s)
    write_heightmap(hmap, outs.path("heightmap.hmap"))
    pmap = height_to_potential(hmap, cav)
    write_heightmap(hmap, outs.path("potential.hmap"), values=pmap.v)

    with _timed(timings, "solve"):
        H = assemble_hamiltonian(pmap, cav)
        modes = solve_lowest(H, s.solver["k"], tol=s.solver["tol"], seed=s.seed, method=s.solver["method"])
        bound = bound_filter(modes)
    is_bound = np.isin(modes.freqs, bound.freqs)
    outs.extend(export_modes(modes, os.path.join(outs.root, "modes"), bound=is_bound))
    report.update(
        depth_THz=round(pmap.depth, 8),
        n_modes=len(modes),
        n_bound=len(bound),
        reached_depth=bool(modes.freqs[-1] >= modes.depth),
    )

    T = cav.temperature
    if len(bound) >= 2:
        with _timed(timings, "thermo"):
            pop = solve_mu(bound, s.thermo["total_n"], T)
            report.update(
                mu_THz=round(pop.mu, 8),
                condensate_fraction=round(pop.condensate_fraction, 8),
                critical_number=round(critical_number(bound, T), 6),
                thermal_frequency_THz=round(thermal_frequency(T), 8),
            )
            write_population(pop, outs.path("population.csv"))
            if s.thermo["weights"] == "bose":
                weights = thermal_weights(bound, "bose", T, s.thermo["total_n"])
            else:
                weights = thermal_weights(bound, "boltzmann", T)
    else:
        weights = np.ones(len(bound))

    if len(bound):
        sp = s.spectra
        with _timed(timings, "spectra"):
            pos = position_spectrum(bound, weights, sp["dispersion"], defocus=sp["defocus"])
            mom = momentum_spectrum(bound, weights, cav, sp["na"])
        write_spectrum(pos, outs.path("spectrum_position.csv"))
        write_spectrum(mom, outs.path("spectrum_momentum.csv"))
        write_curve(dispersion_curve(cav, mom.axis0), outs.path("dispersion_curve.csv"), ["k_rad_per_um", "dnu_THz"])
        report["k_cutoff_rad_per_um"] = round(mom.metadata["k_cutoff_rad_per_um"], 8)

    if s.kind == "double_well" and len(bound) >= 2:
        report["J_THz"] = round(extract_j(bound), 8)
    if s.kind == "ssh":
        geo = ssh_geometry(s)
        chain = analyze_chain(bound, geo)
        write_ssh_levels(chain.freqs, chain.edge_fraction, chain.midgap, outs.path("ssh_levels.csv"))
        fit = calibrate_tb(bound, geo)
        write_tb_model(fit.model, outs.path("tb_model.txt"))
        tb = ssh_spectrum(fit.model)
        write_ssh_levels(tb.freqs, [_edge(v) for v in tb.vectors.T], tb.midgap, outs.path("tb_levels.csv"))
        report.update(
            gap_THz=round(chain.gap, 8),
            midgap_count=int(len(chain.midgap)),
            midgap_edge_fraction=[round(float(e), 6) for e in chain.edge_fraction[chain.midgap]],
            tb_e0_THz=round(fit.model.e0, 8),
            tb_j_i_THz=round(fit.model.j_i, 8),
            tb_j_o_THz=round(fit.model.j_o, 8),
            tb_relative_residual=round(fit.relative_residual, 8),
        )


def _edge(v):
    from .lattice import edge_localization

    return edge_localization(v)
