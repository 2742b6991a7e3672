import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma

from radfield.grids import LineGrid, ScalarField3, UniformGrid3, sphere_quadrature
from radfield.sobolev import (DataPair, RadiationProfile, cutoff_minus, cutoff_plus, cutoff_sweep,
                              cutoff_window, ds_frac, ds_frac_line, hdot_norm_line, hdot_norm_r3,
                              hdot_norm_sq_cyl, hdot_norm_sq_line, hdot_norm_sq_r3, pair_norm)

GAUSS = lambda x, y, z: np.exp(-(x * x + y * y + z * z))  # noqa: E731


def gauss3_sq(beta):
    # (2 pi)^-3 int |xi|^{2 beta} (pi^{3/2} e^{-|xi|^2/4})^2 d xi
    return 0.5 * np.pi * 2 ** (beta + 0.5) * gamma(beta + 1.5)


def gauss1_sq(beta):
    return 2 ** (beta - 0.5) * gamma(beta + 0.5)


@pytest.fixture(scope="module")
def grid():
    return UniformGrid3(64, 8.0)


def test_zero_norms(grid):
    assert hdot_norm_r3(ScalarField3.zeros(grid), 0.3) == 0.0
    assert pair_norm(DataPair(ScalarField3.zeros(grid), ScalarField3.zeros(grid), 0.8)) == 0.0


@pytest.mark.parametrize("beta,expected", [(0.0, (np.pi / 2) ** 1.5), (1.0, 3 * (np.pi / 2) ** 1.5)])
def test_gaussian_r3_closed_form(grid, beta, expected):
    f = ScalarField3.from_function(grid, GAUSS)
    assert abs(hdot_norm_sq_r3(f, beta) / expected - 1) < 5e-3


@pytest.mark.parametrize("beta", [0.3, 0.8])
def test_gaussian_r3_fractional(grid, beta):
    f = ScalarField3.from_function(grid, GAUSS)
    assert abs(hdot_norm_sq_r3(f, beta) / gauss3_sq(beta) - 1) < 5e-3


@pytest.mark.parametrize("beta", [-0.6, -0.2])
def test_gaussian_r3_zero_mode_bias_rate(beta):
    # the excluded xi = 0 cell carries a deficit ~ dxi^{3 + 2 beta}
    errs = []
    for L in (8.0, 16.0):
        g = UniformGrid3(int(8 * L), L)
        errs.append(1 - hdot_norm_sq_r3(ScalarField3.from_function(g, GAUSS), beta) / gauss3_sq(beta))
    assert errs[1] > 0
    assert abs(errs[0] / errs[1] / 2 ** (3 + 2 * beta) - 1) < 0.03


def test_pair_norm_examples(grid):
    f = ScalarField3.from_function(grid, GAUSS)
    z = ScalarField3.zeros(grid)
    assert abs(pair_norm(DataPair(f, z, 1.0)) / np.sqrt(3 * (np.pi / 2) ** 1.5) - 1) < 5e-3
    assert abs(pair_norm(DataPair(z, f, 1.0)) / (np.pi / 2) ** 0.75 - 1) < 5e-3


@pytest.mark.parametrize("beta", [0.0, 0.4, 0.9])
def test_line_gaussian_closed_form(beta):
    line = LineGrid(2 ** 15, 1024.0)
    g = np.exp(-line.s() ** 2)
    assert abs(hdot_norm_sq_line(line, g, beta) / gauss1_sq(beta) - 1) < 5e-3


@pytest.mark.parametrize("beta", [-0.4, 0.0, 0.4])
def test_line_zero_mode_bias_rate(beta):
    errs = []
    for S in (64.0, 128.0):
        line = LineGrid(int(32 * S), S)
        errs.append(1 - hdot_norm_sq_line(line, np.exp(-line.s() ** 2), beta) / gauss1_sq(beta))
    assert abs(errs[0] / errs[1] / 2 ** (1 + 2 * beta) - 1) < 1e-3


def test_line_norm_matches_direct_multiplier():
    line = LineGrid(512, 16.0)
    s = line.s()
    g = np.exp(-s * s) * np.cos(3 * s)
    for beta in (-0.3, 0.2, 0.7):
        G = np.fft.fft(g) * line.ds
        nu = 2 * np.pi * np.fft.fftfreq(line.m, d=line.ds)
        keep = nu != 0
        direct = np.sum(np.abs(nu[keep]) ** (2 * beta) * np.abs(G[keep]) ** 2) * line.dnu / (2 * np.pi)
        assert abs(hdot_norm_sq_line(line, g, beta) - direct) < 1e-6 * direct


def test_cyl_example():
    line = LineGrid(2048, 32.0)
    sph = sphere_quadrature(8, 16)
    s = line.s()
    G = RadiationProfile.from_zonal(line, sph, 0.5 * s * np.exp(-s * s))
    assert abs(2 * hdot_norm_sq_cyl(G, 0.0) / (np.pi / 2) ** 1.5 - 1) < 5e-3


def test_cyl_is_weighted_sum():
    line = LineGrid(256, 8.0)
    sph = sphere_quadrature(4, 8)
    G = RadiationProfile.from_function(line, sph, lambda s, om: np.exp(-s * s) * (1 + om[..., 0] + om[..., 2] ** 2))
    per = hdot_norm_sq_line(line, G.values, 0.3)
    assert np.isclose(hdot_norm_sq_cyl(G, 0.3), np.dot(per, sph.weights), rtol=1e-13)


def test_frac_derivative_on_pure_tone():
    line = LineGrid(512, 16.0)
    s = line.s()
    nu = 40 * line.dnu
    g = np.sin(nu * s)
    assert np.abs(ds_frac_line(line, g, 1.0) - nu * g).max() < 1e-10
    assert np.abs(ds_frac_line(line, g, 0.5) - np.sqrt(nu) * g).max() < 1e-10


def test_frac_derivative_inverse_and_identity():
    line = LineGrid(512, 16.0)
    sph = sphere_quadrature(4, 8)
    s = line.s()
    g = np.exp(-s * s) * s
    G = RadiationProfile.from_zonal(line, sph, g)
    back = ds_frac(ds_frac(G, 0.6), -0.6)
    assert np.abs(back.column() - g).max() < 1e-8
    # alpha = 0: only the mean is removed
    assert np.abs(ds_frac_line(line, g + 1.0, 0.0) - (g + 1.0 - np.mean(g + 1.0))).max() < 1e-12


def test_cutoffs():
    line = LineGrid(256, 8.0)
    sph = sphere_quadrature(4, 8)
    s = line.s()
    bump = np.where(np.abs(s) < 1, np.exp(-1 / np.maximum(1 - s * s, 1e-300)), 0.0)
    G = RadiationProfile.from_zonal(line, sph, bump)
    assert np.array_equal(cutoff_window(G, -1.0, 1.0).column(), bump)
    assert not np.any(cutoff_minus(cutoff_plus(G, 0.3), 0.3).values)
    with pytest.raises(ValueError):
        cutoff_plus(G, 0.0)
    with pytest.raises(ValueError):
        cutoff_window(G, 1.0, 1.0)


def test_cutoff_gaussian_uniform_in_r():
    line = LineGrid(2 ** 14, 256.0)
    g = np.exp(-line.s() ** 2)[:, None]
    ratios = cutoff_sweep(line, g, [0.1, 1.0, 10.0], 0.4)
    assert np.all(ratios <= 1.5)


_vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=64, max_size=64)


@given(_vec, _vec, st.floats(-0.9, 0.9), st.floats(-5, 5))
def test_norm_triangle_and_homogeneity(a, b, beta, c):
    line = LineGrid(64, 4.0)
    a, b = np.array(a), np.array(b)
    na, nb = hdot_norm_line(line, a, beta), hdot_norm_line(line, b, beta)
    nab = hdot_norm_line(line, a + b, beta)
    assert nab <= na + nb + 1e-10 * (1 + na + nb)
    assert abs(hdot_norm_line(line, c * a, beta) - abs(c) * na) <= 1e-10 * (1 + abs(c) * na)


def test_beta_range_rejected():
    line = LineGrid(64, 4.0)
    with pytest.raises(ValueError):
        hdot_norm_sq_cyl(RadiationProfile.from_zonal(line, sphere_quadrature(2, 4), np.ones(64)), 1.5)
