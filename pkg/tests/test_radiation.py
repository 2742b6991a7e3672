import numpy as np
import pytest

from radfield import corpus as C
from radfield.freewave import RadialPair, evolve, radial_profile
from radfield.grids import LineGrid, ScalarField3, UniformGrid3, sphere_quadrature
from radfield.radiation import (adjoint_radon, ansatz_adjoint, ansatz_embed, check_resolution,
                                forward, inverse_fourier, inverse_radon3, profile_at, reflect,
                                spectral_taper, synthesize)
from radfield.sobolev import (DataPair, RadiationProfile, hdot_norm_cyl, hdot_norm_sq_cyl,
                              hdot_norm_sq_r3, l2_inner_cyl, pair_norm)

GAUSS = lambda x, y, z: np.exp(-(x * x + y * y + z * z))  # noqa: E731


def rel_pair(p, q, beta):
    d = DataPair(ScalarField3(p.grid, p.u0.values - q.u0.values),
                 ScalarField3(p.grid, p.u1.values - q.u1.values))
    return pair_norm(d, beta) / pair_norm(p, beta)


@pytest.fixture(scope="module")
def setup():
    g = UniformGrid3(64, 16.0)
    return g, sphere_quadrature(24, 48), LineGrid(1024, 32.0)


def test_forward_zero(setup):
    g, sph, line = setup
    z = ScalarField3.zeros(g)
    G = forward(DataPair(z, z), sph, line)
    assert not np.any(G.values)


def test_resolution_precondition(setup):
    g, sph, _ = setup
    z = ScalarField3.zeros(g)
    with pytest.raises(ValueError):
        forward(DataPair(z, z), sph, LineGrid(64, 32.0))
    with pytest.raises(ValueError):
        check_resolution(g, LineGrid(64, 32.0))


@pytest.mark.parametrize("which", [0, 1])
def test_forward_matches_radial_oracle(setup, which):
    g, sph, line = setup
    f = lambda r: np.exp(-r * r)  # noqa: E731
    rp = RadialPair.from_functions(0.005, 40.0, f if which == 0 else None, f if which == 1 else None)
    p = DataPair.from_functions(g, GAUSS if which == 0 else None, GAUSS if which == 1 else None)
    G = forward(p, sph, line)
    R = radial_profile(rp, line, sph)
    diff = G.replace(G.values - R.values)
    assert hdot_norm_cyl(diff, -0.2) / hdot_norm_cyl(R, -0.2) < 0.02
    assert forward.last_residue < 1e-6


def test_isometry_single_pair(setup):
    g, sph, line = setup
    p = C.gaussian_corpus(g)[2][1]
    G = forward(p, sph, line)
    for b in (0.6, 0.8, 1.0):
        assert abs(2 * hdot_norm_sq_cyl(G, b - 1) / pair_norm(p, b) ** 2 - 1) < 0.02


def test_reflection_identity(setup):
    g, sph, line = setup
    p = C.gaussian_corpus(g)[2][1]
    Gp = forward(p, sph, line, "plus")
    Gm = forward(p, sph, line, "minus")
    R = reflect(Gm)
    assert R.direction == "plus"
    assert np.abs(R.values - Gp.values).max() < 1e-10 * np.abs(Gp.values).max()


def test_fourier_round_trip(setup):
    g, sph, line = setup
    p = C.gaussian_corpus(g)[0][1]
    q = inverse_fourier(forward(p, sph, line), g)
    assert rel_pair(p, q, 0.8) < 0.03


def test_fourier_round_trip_profile_side(setup):
    g, sph, line = setup
    s = line.s()
    G = RadiationProfile.from_zonal(line, sph, 0.5 * s * np.exp(-s * s))
    G2 = forward(inverse_fourier(G, g), sph, line)
    assert hdot_norm_cyl(G2.replace(G2.values - G.values), -0.2) / hdot_norm_cyl(G, -0.2) < 0.03


def test_inverse_zero(setup):
    g, sph, line = setup
    Z = RadiationProfile.from_zonal(line, sph, np.zeros(line.m))
    assert not np.any(inverse_fourier(Z, g).u0.values)


def test_radon_route_small():
    g = UniformGrid3(32, 8.0)
    sph = sphere_quadrature(16, 32)
    line = LineGrid(512, 16.0)
    rp = RadialPair.from_functions(0.005, 20.0, lambda r: np.exp(-r * r), None)
    Gm = radial_profile(rp, line, sph, "minus")
    p = DataPair.from_functions(g, GAUSS, None)
    q = inverse_radon3(Gm, g)
    assert rel_pair(p, q, 0.8) < 0.03
    qf = inverse_fourier(Gm, g)
    assert rel_pair(qf, q, 0.8) < 0.03


def test_synthesize_matches_evolve_and_is_radial():
    g = UniformGrid3(32, 8.0)
    sph = sphere_quadrature(16, 32)
    line = LineGrid(512, 16.0)
    rp = RadialPair.from_functions(0.005, 20.0, lambda r: np.exp(-r * r), None)
    Gm = radial_profile(rp, line, sph, "minus")
    p = DataPair.from_functions(g, GAUSS, None)
    u2 = synthesize(Gm, 2.0, g)
    ref = evolve(p, 2.0).u0
    err = np.sqrt(hdot_norm_sq_r3(ScalarField3(g, u2.values - ref.values), 0.8) / hdot_norm_sq_r3(ref, 0.8))
    assert err < 0.03
    u0 = synthesize(Gm, 0.0, g).values
    assert np.abs(u0 - inverse_radon3(Gm, g, support_rel=1e-12).u0.values).max() < 1e-3 * np.abs(u0).max()


def test_synthesize_radial_symmetry():
    g = UniformGrid3(16, 4.0)
    sph = sphere_quadrature(16, 32)
    line = LineGrid(256, 8.0)
    G = C.bump_profile(line, sph, -1.0, 1.0)
    v = synthesize(G, 0.5, g).values[1:, 1:, 1:]
    # on the centred sub-grid every coordinate permutation and reflection is a symmetry
    spread = max(np.abs(v - np.transpose(v, (1, 0, 2))).max(), np.abs(v - v[::-1]).max(),
                 np.abs(v - np.transpose(v, (2, 1, 0))).max())
    assert spread < 1e-6 * max(np.abs(v).max(), 1e-300) + 1e-12


def test_adjoint_radon_zonal_indicator():
    g = UniformGrid3(16, 4.0)
    sph = sphere_quadrature(24, 48)
    line = LineGrid(2048, 16.0)
    G = C.indicator_profile(line, sph, 0.0, 1.0)
    T = adjoint_radon(G, g).values
    r = g.radius()
    sel = r >= 1.0
    assert np.abs(T[sel] * r[sel] / (2 * np.pi) - 1).max() < 0.01


def test_adjoint_radon_vanishes_inside_support_gap():
    g = UniformGrid3(16, 4.0)
    sph = sphere_quadrature(12, 24)
    line = LineGrid(1024, 16.0)
    G = RadiationProfile.from_function(line, sph, lambda s, om: C.bump(s, 2.0, 3.0) * (1 + om[..., 1]))
    T = adjoint_radon(G, g).values
    assert np.all(T[g.radius() < 2.0] == 0.0)
    Z = RadiationProfile.from_zonal(line, sph, np.zeros(line.m))
    assert not np.any(adjoint_radon(Z, g).values)


def test_ansatz_embed_definition_and_zero():
    g = UniformGrid3(16, 4.0)
    sph = sphere_quadrature(8, 16)
    line = LineGrid(256, 8.0)
    G = RadiationProfile.from_function(line, sph, lambda s, om: np.exp(-s * s) * (1 + 0.3 * om[..., 2]))
    a0, sp = ansatz_embed(G, 0.0, g)
    x, y, z = g.coords()
    r = g.radius()
    nz = r > 0
    dirs = np.stack(np.broadcast_arrays(x / np.where(nz, r, 1), y / np.where(nz, r, 1), z / np.where(nz, r, 1)), -1)
    ref = profile_at(G, r, dirs) / np.where(nz, r, 1.0)
    assert np.allclose(a0.values[nz], ref[nz])
    Z = G.replace(np.zeros_like(G.values))
    a0, sp = ansatz_embed(Z, 3.0, g)
    assert not np.any(a0.values) and not any(np.any(c.values) for c in sp)


def test_ansatz_duality():
    g = UniformGrid3(64, 8.0)
    sph = sphere_quadrature(32, 64)
    line = LineGrid(4096, 16.0)
    rng = C.rng(7)
    c = rng.uniform(-0.5, 0.5, size=3)
    f = ScalarField3.from_function(g, lambda x, y, z: GAUSS(x - c[0], y - c[1], z - c[2]))
    k0 = rng.uniform(0.5, 1.5)
    G = RadiationProfile.from_function(
        line, sph, lambda s, om: np.exp(-(s - k0) ** 2) * (1 + 0.5 * om[..., 0] - 0.3 * om[..., 2]))
    t = 2.0
    a0, sp = ansatz_embed(G, t, g)
    comps = [a0, *sp]
    for k in range(4):
        lhs = float(np.sum(f.values * comps[k].values) * g.h ** 3)
        A = ansatz_adjoint(f, t, k, line, sph)
        sign = 1.0 if k == 0 else -1.0
        rhs = sign * l2_inner_cyl(A, G)
        assert abs(lhs - rhs) <= 0.01 * abs(lhs), k


def test_taper_profile():
    nu = np.linspace(-10, 10, 401)
    w = spectral_taper(nu, 8.0, 0.5)
    assert np.all(w[np.abs(nu) <= 4.0] == 1.0) and np.all(w[np.abs(nu) >= 8.0] == 0.0)
    assert np.all(np.diff(w[nu >= 0]) <= 0)
