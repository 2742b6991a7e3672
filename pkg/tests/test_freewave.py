import numpy as np
import pytest

from radfield.freewave import (RadialPair, WrapAroundWarning, evolve, evolve_radial, gradient,
                               radial_energy, radial_profile_values, radial_to_grid)
from radfield.grids import ScalarField3, UniformGrid3
from radfield.sobolev import DataPair, pair_norm

GAUSS = lambda x, y, z: np.exp(-(x * x + y * y + z * z))  # noqa: E731


def dalembert_gauss(r, t):
    return ((r + t) * np.exp(-(r + t) ** 2) + (r - t) * np.exp(-(r - t) ** 2)) / (2 * r)


def test_evolve_zero_time_is_identity():
    g = UniformGrid3(16, 6.0)
    p = DataPair.from_functions(g, GAUSS, None)
    out = evolve(p, 0.0)
    assert out.u0 is p.u0 and out.u1 is p.u1


def test_evolve_gaussian_d_alembert():
    g = UniformGrid3(128, 16.0)
    p = DataPair.from_functions(g, GAUSS, None)
    u = evolve(p, 2.0).u0.values
    r = g.radius()
    sel = (r >= 0.5) & (r <= 4.0)
    assert np.abs(u[sel] - dalembert_gauss(r[sel], 2.0)).max() < 1e-4


def test_evolve_preserves_pair_norm():
    g = UniformGrid3(64, 16.0)
    p = DataPair.from_functions(g, GAUSS, lambda x, y, z: x * GAUSS(x, y, z), beta=0.8)
    q = evolve(p, 5.0)
    assert abs(pair_norm(q, 0.8) / pair_norm(p, 0.8) - 1) < 5e-3


def test_evolve_warns_on_wraparound():
    g = UniformGrid3(16, 4.0)
    p = DataPair.from_functions(g, GAUSS, None)
    with pytest.warns(WrapAroundWarning):
        out = evolve(p, 3.0, support_radius=2.0)
    assert "wraparound" in out.diagnostics


def test_spectral_gradient():
    g = UniformGrid3(64, 8.0)
    f = ScalarField3.from_function(g, GAUSS)
    x, y, z = g.coords()
    gx, gy, gz = gradient(f)
    assert np.abs(gx.values + 2 * x * f.values).max() < 1e-9
    assert np.abs(gz.values + 2 * z * f.values).max() < 1e-9


@pytest.mark.parametrize("t", [0.7, 3.0, 9.5])
def test_radial_d_alembert_exact(t):
    p = RadialPair.from_functions(0.005, 20.0, lambda r: np.exp(-r * r), None)
    q = evolve_radial(p, t)
    r = q.r[1:]
    assert np.abs(q.u0[1:] - dalembert_gauss(r, t)).max() < 1e-8


def test_radial_energy_conserved():
    p = RadialPair.from_functions(0.005, 20.0, lambda r: np.exp(-r * r), lambda r: r * np.exp(-r * r))
    e0 = radial_energy(p)
    for t in (1.0, 4.0):
        assert abs(radial_energy(evolve_radial(p, t)) / e0 - 1) < 1e-8


def test_radial_evolve_rejects_short_domain():
    p = RadialPair.from_functions(0.01, 6.0, lambda r: np.exp(-r * r), None)
    with pytest.raises(ValueError):
        evolve_radial(p, 5.0)


def test_radial_profiles_closed_form():
    s = np.linspace(-6, 6, 241)
    p0 = RadialPair.from_functions(0.005, 20.0, lambda r: np.exp(-r * r), None)
    p1 = RadialPair.from_functions(0.005, 20.0, None, lambda r: np.exp(-r * r))
    assert np.abs(radial_profile_values(p0, s, "plus") + 0.5 * (1 - 2 * s * s) * np.exp(-s * s)).max() < 1e-6
    assert np.abs(radial_profile_values(p1, s, "plus") - 0.5 * s * np.exp(-s * s)).max() < 1e-6


def test_radial_profiles_zero_and_reflection():
    z = RadialPair.from_functions(0.01, 5.0, None, None)
    assert not np.any(radial_profile_values(z, np.linspace(-3, 3, 31)))
    p = RadialPair.from_functions(0.005, 20.0, lambda r: np.exp(-r * r), lambda r: r * r * np.exp(-r * r))
    s = np.linspace(-5, 5, 201)
    assert np.abs(radial_profile_values(p, s, "plus") + radial_profile_values(p, -s, "minus")).max() < 1e-12


def test_radial_to_grid_samples():
    p = RadialPair.from_functions(0.01, 10.0, lambda r: np.exp(-r * r), None)
    g = UniformGrid3(32, 5.0)
    d = radial_to_grid(p, g)
    assert np.abs(d.u0.values - np.exp(-g.radius() ** 2)).max() < 1e-6
