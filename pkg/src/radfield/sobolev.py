"""Homogeneous Sobolev norms on R^3 and on R x S^2, fractional s-derivatives, cut-offs."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import grids
from .grids import LineGrid, ScalarField3, SphereGrid, UniformGrid3


@dataclass(frozen=True, eq=False)
class DataPair:
    """Wave state ``(u0, u1)`` tagged with a Sobolev exponent ``beta``."""

    u0: ScalarField3
    u1: ScalarField3
    beta: float = 1.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.u0.grid != self.u1.grid:
            raise ValueError("u0 and u1 must live on the same grid")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")

    @property
    def grid(self) -> UniformGrid3:
        return self.u0.grid

    @classmethod
    def from_functions(cls, grid, f0, f1, beta=1.0):
        zero = lambda x, y, z: 0.0 * x  # noqa: E731
        return cls(ScalarField3.from_function(grid, f0 or zero),
                   ScalarField3.from_function(grid, f1 or zero), beta)

    def with_beta(self, beta: float) -> "DataPair":
        return DataPair(self.u0, self.u1, beta)


@dataclass(frozen=True, eq=False)
class RadiationProfile:
    """Samples ``G(s_i, omega_j)``; ``values`` has shape ``(m, n_dirs)``.

    Direction-independent profiles may be stored as a broadcast view (stride 0
    along the direction axis); norms then work on a single column.
    """

    line: LineGrid
    sphere: SphereGrid
    values: np.ndarray
    direction: str = "plus"

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.dtype != float:
            v = np.asarray(v, dtype=float)
        if v.shape != (self.line.m, self.sphere.size):
            raise ValueError(f"expected {(self.line.m, self.sphere.size)} samples, got {v.shape}")
        if self.direction not in ("plus", "minus"):
            raise ValueError("direction must be 'plus' or 'minus'")
        if not np.all(np.isfinite(v[:, :1] if self.is_zonal_view(v) else v)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", v)

    @staticmethod
    def is_zonal_view(v) -> bool:
        return v.ndim == 2 and v.shape[1] > 1 and v.strides[1] == 0

    @property
    def zonal(self) -> bool:
        return self.is_zonal_view(self.values)

    @classmethod
    def from_zonal(cls, line, sphere, g, direction="plus") -> "RadiationProfile":
        g = np.asarray(g, dtype=float).reshape(-1, 1)
        return cls(line, sphere, np.broadcast_to(g, (line.m, sphere.size)), direction)

    @classmethod
    def from_function(cls, line, sphere, fn, direction="plus") -> "RadiationProfile":
        """``fn(s, omega)`` with ``s`` of shape ``(m, 1)`` and ``omega`` of shape ``(1, N, 3)``."""
        s = line.s()[:, None]
        om = sphere.nodes[None, :, :]
        vals = np.broadcast_to(fn(s, om), (line.m, sphere.size))
        return cls(line, sphere, np.array(vals, dtype=float), direction)

    def column(self) -> np.ndarray:
        """The single profile of a zonal field."""
        return self.values[:, 0]

    def replace(self, values, direction=None) -> "RadiationProfile":
        return RadiationProfile(self.line, self.sphere, values, direction or self.direction)

    def _map(self, fn) -> "RadiationProfile":
        if self.zonal:
            return RadiationProfile.from_zonal(self.line, self.sphere, fn(self.values[:, :1])[:, 0],
                                               self.direction)
        return self.replace(fn(self.values))


# ------------------------------------------------------------ R^3 norms ---


def _check_beta(beta, lo=-1.0, hi=1.0):
    if not lo <= beta <= hi:
        raise ValueError(f"exponent {beta} outside [{lo}, {hi}]")


def hdot_norm_sq_spectral(F: grids.SpectralField3, beta: float) -> float:
    g = F.grid
    k = g.freq_radius()
    w = np.zeros_like(k)
    nz = k > 0
    w[nz] = k[nz] ** (2.0 * beta)
    return float(np.sum(w * np.abs(F.coeffs) ** 2) / (2.0 * g.half_width) ** 3)


def hdot_norm_sq_r3(f: ScalarField3, beta: float) -> float:
    _check_beta(beta)
    g = f.grid
    # real FFT: only |f^| matters; phase conventions drop out
    F = sfft.rfftn(f.values, workers=grids._WORKERS)
    kx = 2.0 * np.pi * sfft.fftfreq(g.n, d=g.h)
    kz = 2.0 * np.pi * sfft.rfftfreq(g.n, d=g.h)
    k2 = kx[:, None, None] ** 2 + kx[None, :, None] ** 2 + kz[None, None, :] ** 2
    w = np.zeros_like(k2)
    nz = k2 > 0
    w[nz] = k2[nz] ** beta
    mult = np.full(kz.shape, 2.0)
    mult[0] = 1.0
    if g.n % 2 == 0:
        mult[-1] = 1.0
    total = np.sum(w * np.abs(F) ** 2 * mult[None, None, :])
    return float(total * g.h ** 6 / (2.0 * g.half_width) ** 3)


def hdot_norm_r3(f: ScalarField3, beta: float) -> float:
    """``((2 pi)^-3 int |xi|^{2 beta} |f^(xi)|^2 dxi)^{1/2}`` without the xi=0 mode."""
    return float(np.sqrt(hdot_norm_sq_r3(f, beta)))


def pair_norm(p: DataPair, beta: float | None = None) -> float:
    b = p.beta if beta is None else beta
    return float(np.sqrt(hdot_norm_sq_r3(p.u0, b) + hdot_norm_sq_r3(p.u1, b - 1.0)))


def vector_norm(fields, beta: float) -> float:
    return float(np.sqrt(sum(hdot_norm_sq_r3(f, beta) for f in fields)))


# ---------------------------------------------------------- line norms ---


def _nu_weights(line: LineGrid, alpha: float) -> np.ndarray:
    nu = np.abs(line.nu_fft())
    w = np.zeros_like(nu)
    nz = nu > 0
    w[nz] = nu[nz] ** alpha
    return w


def hdot_norm_sq_line(line: LineGrid, g: np.ndarray, beta: float) -> np.ndarray:
    """Per-column squared ``H^beta(R)`` norms of samples along axis 0."""
    g = np.asarray(g, dtype=float)
    G = sfft.rfft(g, axis=0, workers=grids._WORKERS) * line.ds
    w = _nu_weights(line, 2.0 * beta)[: G.shape[0]]
    mult = np.full(G.shape[0], 2.0)
    mult[0] = 1.0
    mult[-1] = 1.0
    shape = (-1,) + (1,) * (g.ndim - 1)
    dens = (w * mult).reshape(shape) * np.abs(G) ** 2
    return dens.sum(axis=0) * line.dnu / (2.0 * np.pi)


def hdot_norm_line(line: LineGrid, g: np.ndarray, beta: float):
    return np.sqrt(hdot_norm_sq_line(line, g, beta))


def ds_frac_line(line: LineGrid, g: np.ndarray, alpha: float) -> np.ndarray:
    return grids.line_multiplier(line, np.asarray(g, dtype=float), _nu_weights(line, alpha))


def ds_frac(G: RadiationProfile, alpha: float) -> RadiationProfile:
    """Fractional derivative ``|nu|^alpha`` in ``s`` (nu=0 mode removed)."""
    _check_beta(alpha)
    return G._map(lambda v: ds_frac_line(G.line, v, alpha))


def hdot_norm_sq_cyl(G: RadiationProfile, beta: float) -> float:
    _check_beta(beta)
    if G.zonal:
        return float(hdot_norm_sq_line(G.line, G.values[:, 0], beta) * G.sphere.weights.sum())
    per = hdot_norm_sq_line(G.line, G.values, beta)
    return float(np.dot(per, G.sphere.weights))


def hdot_norm_cyl(G: RadiationProfile, beta: float) -> float:
    """``H^beta(R x S^2) = L^2(S^2; H^beta(R))`` by sphere quadrature."""
    return float(np.sqrt(hdot_norm_sq_cyl(G, beta)))


def l2_inner_cyl(F: RadiationProfile, G: RadiationProfile) -> float:
    return float(np.dot((F.values * G.values).sum(axis=0), F.sphere.weights) * F.line.ds)


# ------------------------------------------------------------- cut-offs ---


def indicator_plus(s: np.ndarray, r: float) -> np.ndarray:
    return (s > r).astype(float)


def indicator_minus(s: np.ndarray, r: float) -> np.ndarray:
    return (s < -r).astype(float)


def indicator_window(s: np.ndarray, a: float, b: float) -> np.ndarray:
    return ((s > a) & (s < b)).astype(float)


def cutoff_plus(G: RadiationProfile, r: float) -> RadiationProfile:
    """Keep ``s > r``."""
    if not r > 0:
        raise ValueError("r must be positive")
    chi = indicator_plus(G.line.s(), r)[:, None]
    return G._map(lambda v: v * chi)


def cutoff_minus(G: RadiationProfile, r: float) -> RadiationProfile:
    """Keep ``s < -r``."""
    if not r > 0:
        raise ValueError("r must be positive")
    chi = indicator_minus(G.line.s(), r)[:, None]
    return G._map(lambda v: v * chi)


def cutoff_window(G: RadiationProfile, a: float, b: float) -> RadiationProfile:
    """Keep ``a < s < b``."""
    if not a < b:
        raise ValueError("need a < b")
    chi = indicator_window(G.line.s(), a, b)[:, None]
    return G._map(lambda v: v * chi)


def cutoff_sweep(line: LineGrid, profiles: np.ndarray, radii, beta: float, side: str = "plus") -> np.ndarray:
    """``max_j ||P_r g_j|| / ||g_j||`` in ``H^beta(R)`` for each ``r``; ``profiles`` has one column per ``g_j``."""
    if not -0.5 < beta < 0.5:
        warnings.warn("cut-offs are uniformly bounded only for -1/2 < beta < 1/2", stacklevel=2)
    s = line.s()
    ind = indicator_plus if side == "plus" else indicator_minus
    g = np.asarray(profiles, dtype=float)
    base = hdot_norm_line(line, g, beta)
    out = []
    for r in radii:
        cut = g * ind(s, float(r))[:, None]
        out.append(float(np.max(hdot_norm_line(line, cut, beta) / base)))
    return np.array(out)
