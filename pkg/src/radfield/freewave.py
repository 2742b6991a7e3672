"""Linear wave propagation: spectral on 3D boxes, exact d'Alembert for radial data."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.interpolate import make_interp_spline
from scipy.integrate import simpson

from . import grids
from .grids import LineGrid, ScalarField3, SpectralField3, SphereGrid
from .sobolev import DataPair, RadiationProfile


class WrapAroundWarning(UserWarning):
    """Evolution time lets periodic images reach the region of interest."""


def _propagate(F0, F1, k, t):
    c = np.cos(t * k)
    sk = np.sin(t * k)
    sinc = np.empty_like(k)
    nz = k > 0
    sinc[nz] = sk[nz] / k[nz]
    sinc[~nz] = t
    return c * F0 + sinc * F1, -k * sk * F0 + c * F1


def evolve(p: DataPair, t: float, support_radius: float | None = None) -> DataPair:
    """Free wave state ``(u(t), u_t(t))`` by exact spectral propagation on the box.

    At ``xi = 0`` the propagator uses its limit ``sin(t k)/k -> t``. When
    ``|t| + support_radius`` exceeds the half width a :class:`WrapAroundWarning`
    is issued and recorded in ``diagnostics``.
    """
    g = p.grid
    diag = {}
    if support_radius is not None and abs(t) + support_radius > g.half_width:
        msg = f"|t| + support = {abs(t) + support_radius:g} exceeds half width {g.half_width:g}"
        warnings.warn(msg, WrapAroundWarning, stacklevel=2)
        diag["wraparound"] = msg
    if t == 0:
        return DataPair(p.u0, p.u1, p.beta, diag)
    F0 = sfft.rfftn(p.u0.values, workers=grids._WORKERS)
    F1 = sfft.rfftn(p.u1.values, workers=grids._WORKERS)
    k = _rfft_k(g)
    A, B = _propagate(F0, F1, k, t)
    shape = p.u0.values.shape
    u = sfft.irfftn(A, s=shape, workers=grids._WORKERS)
    ut = sfft.irfftn(B, s=shape, workers=grids._WORKERS)
    return DataPair(ScalarField3(g, u), ScalarField3(g, ut), p.beta, diag)


def _rfft_axes(g):
    kx = 2.0 * np.pi * sfft.fftfreq(g.n, d=g.h)
    kz = 2.0 * np.pi * sfft.rfftfreq(g.n, d=g.h)
    return kx, kz


def _rfft_k(g):
    kx, kz = _rfft_axes(g)
    return np.sqrt(kx[:, None, None] ** 2 + kx[None, :, None] ** 2 + kz[None, None, :] ** 2)


def gradient(f: ScalarField3):
    """Spectral gradient ``(d_1 f, d_2 f, d_3 f)``."""
    g = f.grid
    F = sfft.rfftn(f.values, workers=grids._WORKERS)
    kx, kz = _rfft_axes(g)
    # Nyquist components have no odd-derivative partner
    kx = kx.copy()
    kx[g.n // 2] = 0.0
    kz = kz.copy()
    kz[-1] = 0.0
    ks = (kx[:, None, None], kx[None, :, None], kz[None, None, :])
    shape = f.values.shape
    return tuple(ScalarField3(g, sfft.irfftn(1j * kk * F, s=shape, workers=grids._WORKERS)) for kk in ks)


# ---------------------------------------------------------------- radial ---


@dataclass(frozen=True, eq=False)
class RadialPair:
    """Radial data ``(u0(r), u1(r))`` on the uniform grid ``r_i = i * dr``."""

    dr: float
    u0: np.ndarray
    u1: np.ndarray

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        u1 = np.asarray(self.u1, dtype=float)
        if u0.shape != u1.shape or u0.ndim != 1 or u0.size < 8:
            raise ValueError("u0, u1 must be 1D arrays of equal length >= 8")
        if not (np.all(np.isfinite(u0)) and np.all(np.isfinite(u1))):
            raise ValueError("radial data must be finite")
        if not self.dr > 0:
            raise ValueError("dr must be positive")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "u1", u1)

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(self.u0.size)

    @property
    def r_max(self) -> float:
        return self.dr * (self.u0.size - 1)

    @property
    def v0(self) -> np.ndarray:
        return self.r * self.u0

    @property
    def v1(self) -> np.ndarray:
        return self.r * self.u1

    @classmethod
    def from_functions(cls, dr, r_max, f0=None, f1=None) -> "RadialPair":
        r = dr * np.arange(int(round(r_max / dr)) + 1)
        z = np.zeros_like(r)
        return cls(dr, z if f0 is None else f0(r) + z, z if f1 is None else f1(r) + z)

    @classmethod
    def from_v(cls, dr, v0, v1) -> "RadialPair":
        """Build from ``v = r u``; the origin value uses the derivative of ``v``."""
        v0 = np.asarray(v0, dtype=float)
        v1 = np.asarray(v1, dtype=float)
        r = dr * np.arange(v0.size)
        u0 = np.empty_like(v0)
        u1 = np.empty_like(v1)
        u0[1:] = v0[1:] / r[1:]
        u1[1:] = v1[1:] / r[1:]
        u0[0] = origin_slope(v0, dr)
        u1[0] = origin_slope(v1, dr)
        return cls(dr, u0, u1)

    def support_radius(self, rel: float = 1e-14) -> float:
        a = np.maximum(np.abs(self.v0), np.abs(self.v1))
        peak = max(a.max(), np.abs(self.u0).max(), np.abs(self.u1).max())
        if peak == 0:
            return 0.0
        idx = np.nonzero(a > rel * peak)[0]
        return float(self.r[idx[-1]]) if idx.size else 0.0


def origin_slope(v: np.ndarray, dr: float) -> float:
    """``v'(0)`` for an odd function from samples at ``r >= 0`` (4th order)."""
    return float((8.0 * v[1] - v[2]) / (6.0 * dr))


def odd_spline(r: np.ndarray, v: np.ndarray):
    """Cubic spline of the odd extension of ``v`` sampled on ``r >= 0``."""
    s = np.concatenate([-r[:0:-1], r])
    vals = np.concatenate([-v[:0:-1], v])
    return make_interp_spline(s, vals, k=3)


def _eval_odd(spl, x, r_max, parity=1):
    """Evaluate an odd-extension spline, zero beyond ``r_max`` (parity for derivatives)."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= r_max
    return np.where(inside, spl(np.clip(x, -r_max, r_max)), 0.0)


def evolve_radial(p: RadialPair, t: float) -> RadialPair:
    """Exact d'Alembert solution of ``v = r u`` with odd extension across ``r = 0``."""
    if p.support_radius() + abs(t) > p.r_max + 1e-12:
        raise ValueError(f"r_max {p.r_max:g} too small: need at least {p.support_radius() + abs(t):g}")
    if t == 0:
        return p
    r = p.r
    R = p.r_max
    s0 = odd_spline(r, p.v0)
    s1 = odd_spline(r, p.v1)
    d0 = s0.derivative()
    W = s1.antiderivative()
    ev = lambda spl, x: _eval_odd(spl, x, R)  # noqa: E731
    a, b = r + t, r - t

    def prim(x):
        # antiderivative of odd v1 is even; constant beyond the data range
        x = np.clip(np.abs(x), 0.0, R)
        return W(x)

    v = 0.5 * (ev(s0, a) + ev(s0, b)) + 0.5 * (prim(a) - prim(b))
    vt = 0.5 * (ev(d0, a) - ev(d0, b)) + 0.5 * (ev(s1, a) + ev(s1, b))
    out = RadialPair.from_v(p.dr, v, vt)
    # exact origin limit: u(0,t) = v0'(t) + v1(t), u_t(0,t) = v0''(t) + v1'(t)
    d1 = s1.derivative()
    dd0 = d0.derivative()
    u0 = out.u0.copy()
    u1 = out.u1.copy()
    u0[0] = float(ev(d0, t) + ev(s1, t))
    u1[0] = float(ev(dd0, t) + ev(d1, t))
    return RadialPair(p.dr, u0, u1)


def radial_energy(p: RadialPair) -> float:
    """``int (v_t^2 + v_r^2) dr`` for the state; ``v_r`` from the odd cubic spline, Simpson in ``r``."""
    vr = odd_spline(p.r, p.v0).derivative()(p.r)
    return float(simpson(p.v1 ** 2 + vr ** 2, dx=p.dr))


def radial_profile_values(p: RadialPair, s: np.ndarray, direction: str = "plus") -> np.ndarray:
    """Exact radial profiles: ``G+ = (v1 - v0')/2``, ``G- = (v1 + v0')/2``."""
    R = p.r_max
    s0 = odd_spline(p.r, p.v0)
    s1 = odd_spline(p.r, p.v1)
    d0 = s0.derivative()
    v1 = _eval_odd(s1, s, R)
    dv0 = _eval_odd(d0, s, R)
    if direction == "plus":
        return 0.5 * (v1 - dv0)
    if direction == "minus":
        return 0.5 * (v1 + dv0)
    raise ValueError("direction must be 'plus' or 'minus'")


def radial_profile(p: RadialPair, line: LineGrid, sphere: SphereGrid,
                   direction: str = "plus") -> RadiationProfile:
    g = radial_profile_values(p, line.s(), direction)
    return RadiationProfile.from_zonal(line, sphere, g, direction)


def radial_to_grid(p: RadialPair, grid) -> DataPair:
    """Sample radial data on a 3D box by cubic interpolation in ``r``."""
    rr = grid.radius()
    R = p.r_max
    out = []
    for u in (p.u0, p.u1):
        spl = make_interp_spline(np.concatenate([-p.r[:0:-1], p.r]),
                                 np.concatenate([u[:0:-1], u]), k=3)
        out.append(ScalarField3(grid, np.where(rr <= R, spl(np.minimum(rr, R)), 0.0)))
    return DataPair(out[0], out[1])
