"""Test data: Gaussian pairs, smooth bumps, indicator and synthetic-tail profiles."""
from __future__ import annotations

import numpy as np

from .freewave import RadialPair
from .grids import LineGrid, SphereGrid, UniformGrid3
from .sobolev import DataPair, RadiationProfile


def rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; every random draw in the package flows from here."""
    return np.random.Generator(np.random.Philox(int(seed)))


def gaussian(x, y, z, c=(0.0, 0.0, 0.0)):
    return np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2))


def gaussian_corpus(grid: UniformGrid3, seed: int = 0):
    """Three pairs: ``(e^{-|x|^2}, 0)``, ``(0, e^{-|x|^2})`` and a shifted, tilted pair.

    The third pair has ``u0`` centred at a seeded point with ``|c|`` in
    ``[0.25, 0.5]`` and ``u1 = a x3 e^{-|x|^2}`` with ``a`` in ``[0.5, 1]``.
    """
    g = rng(seed)
    d = g.normal(size=3)
    c = d / np.linalg.norm(d) * g.uniform(0.25, 0.5)
    amp = g.uniform(0.5, 1.0)
    return [
        ("gauss-u0", DataPair.from_functions(grid, gaussian, None)),
        ("gauss-u1", DataPair.from_functions(grid, None, gaussian)),
        ("gauss-shifted", DataPair.from_functions(
            grid, lambda x, y, z: gaussian(x, y, z, c), lambda x, y, z: amp * z * gaussian(x, y, z))),
    ]


def radial_gaussian_corpus(dr: float = 0.005, r_max: float = 40.0):
    """Radial versions of the first two Gaussian pairs."""
    f = lambda r: np.exp(-r * r)  # noqa: E731
    return [("gauss-u0", RadialPair.from_functions(dr, r_max, f, None)),
            ("gauss-u1", RadialPair.from_functions(dr, r_max, None, f))]


def bump(s, a: float = 0.0, b: float = 1.0):
    """``exp(-1/(x(1-x)))`` rescaled to ``(a, b)``; C-infinity with support ``[a, b]``."""
    x = (np.asarray(s, dtype=float) - a) / (b - a)
    inside = (x > 0) & (x < 1)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


def cell_indicator(s, a: float, b: float, ds: float):
    """Cell averages of ``1_(a, b)`` over ``[s - ds/2, s + ds/2]``.

    Point samples of an indicator lose up to a cell of mass at each
    end; the averages integrate exactly under the trapezoid rule.
    """
    s = np.asarray(s, dtype=float)
    lo = np.maximum(s - ds / 2, a)
    hi = np.minimum(s + ds / 2, b)
    return np.clip(hi - lo, 0.0, None) / ds


def indicator_profile(line: LineGrid, sphere: SphereGrid, a=0.0, b=1.0, direction="minus"):
    return RadiationProfile.from_zonal(line, sphere, cell_indicator(line.s(), a, b, line.ds), direction)


def bump_profile(line: LineGrid, sphere: SphereGrid, a=0.0, b=1.0, direction="minus"):
    return RadiationProfile.from_zonal(line, sphere, bump(line.s(), a, b), direction)


def compact_profiles(line: LineGrid, sphere: SphereGrid, a=0.0, b=1.0):
    """Five profiles supported in ``[a, b]``: zonal and direction-dependent."""
    w = b - a
    return [
        ("bump", bump_profile(line, sphere, a, b)),
        ("indicator", indicator_profile(line, sphere, a, b)),
        ("bump-tilted", RadiationProfile.from_function(
            line, sphere, lambda s, om: bump(s, a, b) * (1.0 + 0.5 * om[..., 2]), "minus")),
        ("bump-narrow", RadiationProfile.from_function(
            line, sphere, lambda s, om: bump(s, a + 0.25 * w, b - 0.25 * w) * (1.0 + 0.0 * om[..., 0]),
            "minus")),
        ("bump-oscillating", RadiationProfile.from_function(
            line, sphere, lambda s, om: bump(s, a, b) * np.sin(2 * np.pi * (s - a) / w
                                                               + np.pi * om[..., 0]), "minus")),
    ]


def smooth_step(s, a: float, b: float):
    """C-infinity step: 0 for ``s <= a``, 1 for ``s >= b``."""
    x = np.clip((np.asarray(s, dtype=float) - a) / (b - a), 0.0, 1.0)
    f = lambda y: np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)  # noqa: E731
    return f(x) / (f(x) + f(1.0 - x))


def pointwise_tail_exponent(sigma: float, p: float) -> float:
    """Pointwise decay ``s^-e`` whose cut-off norms in ``H^{s_p - 1}`` decay like ``r^-sigma``."""
    sp = 1.5 - 2.0 / (p - 1.0)
    return sigma + 1.5 - sp


def synthetic_tail(s, exponent: float, onset: float = 1.0, amp: float = 0.1, ramp: float = 1.0):
    """``amp * s^-exponent`` for ``s >= onset + ramp``, smoothly switched on from ``onset``."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s > 0, s, 1.0)
    return amp * smooth_step(s, onset, onset + ramp) * np.where(s > 0, safe ** (-exponent), 0.0)


def tail_profile_values(s, exponent: float, onset: float = 1.0, amp: float = 0.1):
    """Compact bump on ``(0, 1)`` plus a synthetic tail on ``s > onset``."""
    return bump(s, 0.0, 1.0) + synthetic_tail(s, exponent, onset, amp)


def radial_pair_from_profile(dr: float, r_max: float, gplus) -> RadialPair:
    """Radial data whose positive profile is ``gplus`` (a callable on the line).

    Inverts ``G+ = (v1 - v0')/2`` with ``G-(s) = -G+(-s)``:
    ``v1(r) = G+(r) - G+(-r)`` and ``v0(r) = -int_0^r (G+(s) + G+(-s)) ds``.
    """
    r = dr * np.arange(int(round(r_max / dr)) + 1)
    gp, gm = gplus(r), gplus(-r)
    v1 = gp - gm
    dv0 = -(gp + gm)
    v0 = np.concatenate([[0.0], np.cumsum(0.5 * (dv0[1:] + dv0[:-1]) * dr)])
    return RadialPair.from_v(dr, v0, v1)


def line_corpus(s, seed: int = 0) -> np.ndarray:
    """Ten profiles on the line, one per column: Gaussians over scales and offsets, bumps, a chirp."""
    g = rng(seed)
    s = np.asarray(s, dtype=float)
    cols = []
    for w in (0.25, 1.0, 4.0, 16.0):
        c = g.uniform(-1.0, 1.0) * w
        cols.append(np.exp(-((s - c) / w) ** 2))
    cols.append(s * np.exp(-s * s))
    cols.append(bump(s, -1.0, 3.0))
    cols.append(bump(s, 0.5, 40.0) - 0.5 * bump(s, -20.0, 0.0))
    cols.append(np.exp(-np.abs(s) / 8.0) * np.cos(s))
    cols.append(np.exp(-(s / 6.0) ** 2) * np.sin(2.0 * s + 0.1 * s * s))
    cols.append(1.0 / (1.0 + (s / 2.0) ** 4))
    return np.column_stack(cols)
