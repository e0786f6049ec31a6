import numpy as np
import pytest

from dlwcavity.cavity import thermal_frequency
from dlwcavity.constants import HBAR
from dlwcavity.eigensolver import ModeSet
from dlwcavity.errors import ValidationError
from dlwcavity.grid import Grid
from dlwcavity.landscape import SshGeometry
from dlwcavity.lattice import analyze_chain, chain_edge_fraction, chain_modes
from dlwcavity.spectra import (
    dispersion_curve,
    mean_k_squared,
    momentum_spectrum,
    na_cutoff,
    parseval_norm,
    position_spectrum,
    read_spectrum,
    write_curve,
    write_spectrum,
)
from dlwcavity.thermo import thermal_weights


def _blob_modes(points, freqs, sigma=0.08):
    g = Grid.centered(6.0, 6.0, 0.02)
    X, Y = g.mesh()
    fields = []
    for x0, y0 in points:
        f = np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (4 * sigma**2))
        fields.append(f / np.sqrt((f**2).sum() * g.cell_area))
    return ModeSet(g, np.asarray(freqs, float), np.array(fields), 10.0, 7.9e-36)


def test_point_mode_gives_one_blob():
    modes = _blob_modes([(0.0, 0.0), (1.2, 0.0)], [0.5, 2.0])
    img = position_spectrum(modes, [0.0, 1.0], dispersion=1.0)
    i, b = np.unravel_index(np.argmax(img.intensity), img.intensity.shape)
    assert img.axis0[i] == pytest.approx(1.2, abs=0.02)
    assert img.axis1[b] == pytest.approx(1.5, abs=0.05)


def test_position_image_conserves_weight(box_bound, rng):
    w = rng.uniform(0, 1, len(box_bound))
    img = position_spectrum(box_bound, w)
    assert img.integral() == pytest.approx(w.sum(), rel=1e-6)
    assert np.all(img.intensity >= 0)


def test_position_image_linear_in_weights(box_bound, rng):
    w1, w2 = rng.uniform(0, 1, (2, len(box_bound)))
    a = position_spectrum(box_bound, w1).intensity
    b = position_spectrum(box_bound, w2).intensity
    c = position_spectrum(box_bound, w1 + w2).intensity
    np.testing.assert_allclose(c, a + b, rtol=1e-12, atol=1e-12 * c.max())


def test_weight_length_checked(box_bound):
    with pytest.raises(ValidationError):
        position_spectrum(box_bound, [1.0])
    with pytest.raises(ValidationError):
        position_spectrum(box_bound, np.ones(len(box_bound)), dispersion=0.0)
    with pytest.raises(ValidationError):
        momentum_spectrum(box_bound, np.ones(len(box_bound)), None, na=0.0)


def test_box_light_stays_inside_box(box_bound):
    w = thermal_weights(box_bound, "bose", total_n=469.0)
    img = position_spectrum(box_bound, w)
    xc = box_bound.grid.center[0]
    inside = np.abs(img.axis0 - xc) <= 5.0
    assert img.intensity[inside].sum() / img.intensity.sum() >= 0.99


def test_defocus_blurs_but_conserves(box_bound):
    w = np.ones(len(box_bound))
    sharp = position_spectrum(box_bound, w)
    soft = position_spectrum(box_bound, w, defocus=0.3)
    assert soft.integral() == pytest.approx(sharp.integral(), rel=1e-4)
    assert soft.intensity.max() < sharp.intensity.max()


def test_parseval_per_mode(box_bound):
    for f in box_bound.fields:
        assert parseval_norm(f, box_bound.grid) == pytest.approx(1.0, rel=1e-6)
        tx = (f**2).sum(axis=0) * box_bound.grid.dy
        assert tx.sum() * box_bound.grid.dx == pytest.approx(1.0, rel=1e-6)


def test_momentum_ground_peaks_at_zero(cav, box_bound):
    img = momentum_spectrum(box_bound.subset([0]), [1.0], cav, na=0.5)
    assert abs(img.axis0[np.argmax(img.intensity.sum(axis=1))]) < 1e-12
    assert img.integral() == pytest.approx(1.0, rel=1e-6)


def test_momentum_image_metadata(cav, box_bound):
    img = momentum_spectrum(box_bound, np.ones(len(box_bound)), cav, na=0.3)
    kmax = na_cutoff(cav, 0.3)
    assert img.metadata["k_cutoff_rad_per_um"] == pytest.approx(kmax)
    blocked = np.zeros(len(img.axis0), bool)
    blocked[img.metadata["blocked"]] = True
    np.testing.assert_array_equal(blocked, np.abs(img.axis0) > kmax)
    assert img.integral() == pytest.approx(len(box_bound), rel=1e-6)


def test_kinetic_part_below_mode_frequency(cav, box_bound):
    for i, f in enumerate(box_bound.fields):
        assert cav.kinetic_constant * mean_k_squared(f, box_bound.grid) <= 1.01 * box_bound.freqs[i]


def test_thermal_light_under_the_parabola(cav, box_bound):
    w = thermal_weights(box_bound, "bose", total_n=144.0)
    img = momentum_spectrum(box_bound, w, cav)
    K, NU = np.meshgrid(img.axis0, img.axis1, indexing="ij")
    below = NU <= cav.kinetic_constant * K**2 + thermal_frequency(300.0)
    assert img.intensity[below].sum() / img.intensity.sum() >= 0.9


def test_dispersion_curve(cav):
    k = np.array([0.0, 2 * np.pi / 10, 4 * np.pi / 10])
    curve = dispersion_curve(cav, k)
    assert curve[0, 1] == 0.0
    # ħ k² /(4π m) evaluated in SI units, k = 2π/(10 µm)
    si = HBAR * (2 * np.pi / 10e-6) ** 2 / (4 * np.pi * cav.m_ph) / 1e12
    assert curve[1, 1] == pytest.approx(si, rel=1e-12)
    assert si == pytest.approx(0.419, abs=0.001)
    assert curve[2, 1] == pytest.approx(4 * curve[1, 1], rel=1e-12)
    with pytest.raises(ValidationError):
        dispersion_curve(cav, [np.inf])


def test_spectrum_csv_round_trip(tmp_path, box_bound):
    img = position_spectrum(box_bound.subset(range(5)), np.ones(5))
    p = tmp_path / "s.csv"
    write_spectrum(img, p)
    head = p.read_text().splitlines()[0].split()
    assert head[0] == "#" and head[1] == "position" and len(head) == 6
    back = read_spectrum(p)
    np.testing.assert_allclose(back.axis0, img.axis0, atol=1e-9)
    np.testing.assert_allclose(back.axis1, img.axis1, atol=1e-9)
    np.testing.assert_allclose(back.intensity, img.intensity, rtol=1e-7, atol=1e-12)
    c = tmp_path / "c.csv"
    write_curve([[0.0, 0.0], [1.0, 2.0]], c, ["k", "dnu"])
    assert c.read_text().splitlines() == ["k,dnu", "0,0", "1,2"]


@pytest.fixture(scope="module")
def ssh_pair(cav):
    trivial = SshGeometry(10, 1.25, 1.9)
    nontrivial = trivial.swapped()
    return {geo: chain_modes(geo, cav) for geo in (trivial, nontrivial)}


def _gap_window(chain):
    f, c = chain.freqs, len(chain.freqs) // 2
    if len(chain.midgap):
        return f[c - 2], f[c + 1]
    return f[c - 1], f[c]


def test_ssh_images_gap_content(ssh_pair):
    for geo, modes in ssh_pair.items():
        chain = analyze_chain(modes, geo)
        lo, hi = _gap_window(chain)
        w = thermal_weights(modes, "boltzmann")
        img = position_spectrum(modes, w, dispersion=10.0)
        nu = img.axis1 + modes.freqs[0]
        band = (nu > lo + 0.2) & (nu < hi - 0.2)
        frac = img.intensity[:, band].sum() / img.intensity.sum()
        if geo.d_i < geo.d_o:
            assert len(chain.midgap) == 0
            assert frac < 0.05
        else:
            assert len(chain.midgap) == 2
            assert np.all(chain_edge_fraction(modes.subset(chain.midgap), geo) >= 0.6)
            # midgap light sits on the outer unit cells
            x = img.axis0 - modes.grid.center[0]
            edge_x = np.abs(x) > 0.5 * geo.length - geo.r - geo.d_i - 0.5 * geo.d_o
            gap_light = img.intensity[:, band]
            assert gap_light[edge_x].sum() / gap_light.sum() >= 0.6
