import numpy as np
import pytest

from dlwcavity import eigensolver
from dlwcavity.cavity import height_to_potential
from dlwcavity.constants import HBAR, PLANCK
from dlwcavity.eigensolver import (
    ModeSet,
    assemble_hamiltonian,
    bound_filter,
    boundary_mass,
    export_modes,
    kinetic_prefactor,
    parity_residual,
    solve_lowest,
)
from dlwcavity.errors import ConfigError, SolverError, ValidationError
from dlwcavity.grid import Grid, HeightMap, PotentialMap
from dlwcavity.landscape import make_box, read_grid_values
from dlwcavity.spectra import mean_k_squared

from .oracles import dirichlet_laplacian_loops, infinite_well_offsets, separable_box_offsets


def test_kinetic_prefactor(cav):
    # ħ²/(2 m dx²)/h with dx = 50 nm, evaluated in SI
    si = HBAR**2 / (2 * cav.m_ph * (50e-9) ** 2) / PLANCK / 1e12
    assert kinetic_prefactor(cav.m_ph, 0.05) == pytest.approx(si, rel=1e-12)
    assert si == pytest.approx(424.8, abs=0.1)


def test_zero_potential_operator_is_scaled_laplacian(cav):
    g = Grid(8, 9, 0.05, 0.05, 0.0, 0.0)
    H = assemble_hamiltonian(PotentialMap(g, np.zeros(g.shape)), cav)
    ref = -kinetic_prefactor(cav.m_ph, 0.05) * dirichlet_laplacian_loops(8, 9)
    np.testing.assert_allclose(H.matrix.toarray(), ref, rtol=1e-14)
    assert (H.matrix - H.matrix.T).count_nonzero() == 0


def test_uniform_potential_shift_is_a_gauge(cav, rng):
    g = Grid(10, 10, 0.05, 0.05, 0.0, 0.0)
    v = rng.uniform(0, 5, g.shape)
    H1 = assemble_hamiltonian(PotentialMap(g, v), cav)
    H2 = assemble_hamiltonian(PotentialMap(g, v + 2.5), cav)
    eye = np.eye(g.nx * g.ny)
    raw1 = H1.matrix.toarray() - H1.depth * eye
    raw2 = H2.matrix.toarray() - H2.depth * eye
    np.testing.assert_allclose(raw2, raw1 - 2.5 * eye, atol=1e-12)
    np.testing.assert_allclose(H2.matrix.toarray(), H1.matrix.toarray(), atol=1e-12)


def test_operator_needs_square_cells(cav):
    g = Grid(10, 10, 0.05, 0.05, 0.0, 0.0)
    pm = PotentialMap(g, np.zeros(g.shape))
    object.__setattr__(g, "dy", 0.07)
    with pytest.raises(ConfigError):
        assemble_hamiltonian(pm, cav)


def test_free_ground_state_is_half_sine_product(cav):
    g = Grid(40, 30, 0.1, 0.1, 0.0, 0.0)
    H = assemble_hamiltonian(PotentialMap(g, np.zeros(g.shape)), cav)
    m = solve_lowest(H, 3, tol=1e-10)
    K = kinetic_prefactor(cav.m_ph, 0.1)
    exact = K * (4 * np.sin(np.pi / (2 * 41)) ** 2 + 4 * np.sin(np.pi / (2 * 31)) ** 2)
    assert m.freqs[0] == pytest.approx(exact, rel=1e-9)
    i, j = np.arange(1, 41), np.arange(1, 31)
    psi = np.outer(np.sin(np.pi * j / 31), np.sin(np.pi * i / 41))
    psi /= np.sqrt((psi**2).sum() * g.cell_area)
    np.testing.assert_allclose(m.fields[0], psi, atol=1e-7)


def test_lanczos_agrees_with_dense(cav, rng):
    g = Grid.centered(3.2, 3.2, 0.05)  # 64 x 64
    X, Y = g.mesh()
    v = 8.0 * np.exp(-(X**2 + 2 * Y**2)) + rng.uniform(0, 0.01, g.shape)
    H = assemble_hamiltonian(PotentialMap(g, v), cav)
    a = solve_lowest(H, 8, tol=1e-9, method="lanczos")
    b = solve_lowest(H, 8, tol=1e-9, method="dense")
    np.testing.assert_allclose(a.freqs, b.freqs, rtol=1e-9)
    overlaps = np.abs(np.einsum("kij,kij->k", a.fields, b.fields)) * g.cell_area
    np.testing.assert_allclose(overlaps, 1.0, atol=1e-6)


def test_solver_argument_checks(cav):
    g = Grid(10, 10, 0.05, 0.05, 0.0, 0.0)
    H = assemble_hamiltonian(PotentialMap(g, np.zeros(g.shape)), cav)
    with pytest.raises(ValidationError):
        solve_lowest(H, 11)
    with pytest.raises(ValidationError):
        solve_lowest(H, 2, tol=1e-3)
    with pytest.raises(ValidationError):
        solve_lowest(H, 2, method="qr")
    big = assemble_hamiltonian(PotentialMap(Grid(70, 70, 0.05, 0.05, 0, 0), np.zeros((70, 70))), cav)
    with pytest.raises(ValidationError):
        solve_lowest(big, 2, method="dense")


def test_unconverged_pairs_raise_with_residual(cav, monkeypatch):
    g = Grid(12, 12, 0.05, 0.05, 0.0, 0.0)
    H = assemble_hamiltonian(PotentialMap(g, np.zeros(g.shape)), cav)

    def sloppy(A, k, tol, seed, maxiter=None):
        w, v = np.linalg.eigh(A.toarray())
        return w[:k], v[:, :k] + 1e-3

    monkeypatch.setattr(eigensolver, "_lanczos", sloppy)
    with pytest.raises(SolverError) as err:
        solve_lowest(H, 3)
    assert err.value.residual > 1e-8


def test_solve_is_deterministic(cav):
    g = Grid.centered(3.0, 3.0, 0.05)
    X, Y = g.mesh()
    H = assemble_hamiltonian(PotentialMap(g, 5.0 * (X**2 + Y**2 < 1)), cav)
    a, b = solve_lowest(H, 6), solve_lowest(H, 6)
    np.testing.assert_array_equal(a.freqs, b.freqs)
    np.testing.assert_array_equal(a.fields, b.fields)


def test_box_modes_normalized_and_orthogonal(box_modes):
    g = box_modes.grid
    flat = box_modes.fields.reshape(len(box_modes), -1)
    gram = flat @ flat.T * g.cell_area
    np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-8)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) <= 1e-6
    assert np.all(np.diff(box_modes.freqs) >= 0)


def test_box_offsets_match_separable_finite_well(cav, box_modes):
    ref = separable_box_offsets(box_modes.depth, 10.0, cav.kinetic_constant, 10)
    got = box_modes.relative_freqs()[:10]
    np.testing.assert_allclose(got[1:], ref[1:], rtol=5e-3)


def test_box_ground_below_infinite_well(cav, box_modes):
    inf_ground = 2 * cav.kinetic_constant * np.pi**2 / 100.0
    assert box_modes.freqs[0] <= inf_ground + 1e-6
    # level offsets shrink relative to the hard-wall box because the mode leaks into the walls
    ratio = box_modes.relative_freqs()[1:10] / infinite_well_offsets(10.0, cav.kinetic_constant, 10)[1:]
    assert np.all(ratio < 1.0)


def test_box_bound_mode_count(cav, box_modes, box_bound):
    weyl = cav.m_ph * 100e-12 * box_modes.depth * 1e12 * PLANCK / (2 * np.pi * HBAR**2)
    assert weyl == pytest.approx(70, abs=1)
    assert abs(len(box_bound) - weyl) <= 0.1 * weyl
    assert box_modes.freqs[-1] > box_modes.depth  # the solve went past the last bound mode


def test_box_modes_mirror_parity(box_bound):
    for group in box_bound.degenerate_groups():
        if len(group) != 1:
            continue
        f = box_bound.fields[group[0]]
        assert min(parity_residual(f, axis=1), parity_residual(f, axis=1, odd=True)) < 1e-4


def test_kinetic_energy_bounded_by_frequency(cav, box_bound):
    for i in range(len(box_bound)):
        kin = cav.kinetic_constant * mean_k_squared(box_bound.fields[i], box_bound.grid)
        assert kin <= box_bound.freqs[i] * 1.01


def test_single_pillar_binds_one_mode(pillar_modes):
    assert pillar_modes.depth == pytest.approx(11.76, abs=0.01)
    assert len(bound_filter(pillar_modes)) == 1


def test_bound_filter_drops_wall_hugging_modes(cav):
    g = Grid(20, 20, 0.1, 0.1, 0.0, 0.0)
    H = assemble_hamiltonian(PotentialMap(g, np.zeros(g.shape)), cav)
    free = solve_lowest(H, 4)
    assert np.all(boundary_mass(free) > 1e-3)
    assert len(bound_filter(free)) == 0
    unbounded = ModeSet(free.grid, free.freqs, free.fields, np.inf, free.m_ph)
    assert bound_filter(unbounded) is unbounded


def test_bound_filter_drops_modes_above_depth(box_modes):
    kept = bound_filter(box_modes)
    assert np.all(kept.freqs < box_modes.depth)
    assert len(kept) < len(box_modes)


def test_mesh_halving_is_stable(cav, box_modes):
    from .conftest import solve_box

    fine = solve_box(cav, 0.025, 6)
    np.testing.assert_allclose(fine.freqs[:5], box_modes.freqs[:5], rtol=0.01)


def test_export_modes(tmp_path, pillar_modes):
    paths = export_modes(pillar_modes, tmp_path, bound=[True] + [False] * 5)
    lines = (tmp_path / "modes.csv").read_text().splitlines()
    assert lines[0] == "index,nu_THz,bound"
    assert lines[1].endswith(",1") and lines[2].endswith(",0")
    grid, vals = read_grid_values(tmp_path / "mode_000.hmap")
    assert grid == pillar_modes.grid
    np.testing.assert_allclose(vals, pillar_modes.fields[0], rtol=1e-8, atol=1e-12)
    assert len(paths) == 7


def test_deep_box_approaches_infinite_well(cav):
    # the 475 nm box is too shallow for hard-wall offsets; a 2000 THz wall recovers them
    g = Grid.centered(11.0, 11.0, 0.05)
    X, Y = g.mesh()
    inside = (np.abs(X - g.center[0]) <= 5.0) & (np.abs(Y - g.center[1]) <= 5.0)
    modes = solve_lowest(assemble_hamiltonian(PotentialMap(g, np.where(inside, 2000.0, 0.0)), cav), 10)
    ref = infinite_well_offsets(10.0, cav.kinetic_constant, 10)
    np.testing.assert_allclose(modes.relative_freqs()[1:], ref[1:], rtol=0.05)
