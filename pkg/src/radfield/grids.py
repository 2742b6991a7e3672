"""Uniform grids, Fourier transforms, sphere quadrature and interpolation.

Conventions
-----------
The spatial Fourier transform is ``f^(xi) = int exp(+i xi.x) f(x) dx`` with no
prefactor, discretized as a Riemann sum on the periodic box ``[-L, L)^3``. The
inverse carries the ``(2 pi)^-3`` factor. The partial transform in ``s`` used
for radiation profiles follows the same sign convention.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy import ndimage
from scipy.special import roots_legendre

DECAY_THRESHOLD = 1e-8

_WORKERS = 1


def set_workers(n: int) -> None:
    """Thread count for FFTs (results do not depend on it)."""
    global _WORKERS
    _WORKERS = max(1, int(n))


class BoundaryDecayWarning(UserWarning):
    """Field does not decay at the box boundary; whole-space integrals are biased."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class UniformGrid3:
    """Periodic box ``[-L, L)^3`` with ``n`` points per axis."""

    n: int
    half_width: float

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 8 and _is_pow2(int(self.n))):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def dxi(self) -> float:
        return np.pi / self.half_width

    def axis(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n)

    def freq_axis(self) -> np.ndarray:
        return self.dxi * (np.arange(self.n) - self.n // 2)

    def coords(self):
        x = self.axis()
        return np.meshgrid(x, x, x, indexing="ij", sparse=True)

    def radius(self) -> np.ndarray:
        x, y, z = self.coords()
        return np.sqrt(x * x + y * y + z * z)

    def freq_coords(self):
        k = self.freq_axis()
        return np.meshgrid(k, k, k, indexing="ij", sparse=True)

    def freq_radius(self) -> np.ndarray:
        a, b, c = self.freq_coords()
        return np.sqrt(a * a + b * b + c * c)

    def padded(self, factor: int) -> "UniformGrid3":
        return UniformGrid3(self.n * factor, self.half_width * factor)


@dataclass(frozen=True, eq=False)
class ScalarField3:
    grid: UniformGrid3
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = self.grid.n
        if v.shape != (n, n, n):
            raise ValueError(f"expected shape {(n, n, n)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: UniformGrid3, fn) -> "ScalarField3":
        x, y, z = grid.coords()
        return cls(grid, np.broadcast_to(fn(x, y, z), (grid.n,) * 3).astype(float))

    @classmethod
    def zeros(cls, grid: UniformGrid3) -> "ScalarField3":
        return cls(grid, np.zeros((grid.n,) * 3))

    def boundary_max(self) -> float:
        v = np.abs(self.values)
        return float(max(v[0].max(), v[:, 0].max(), v[:, :, 0].max(),
                         v[-1].max(), v[:, -1].max(), v[:, :, -1].max()))

    def check_decay(self, threshold: float = DECAY_THRESHOLD) -> bool:
        """Warn (not raise) when boundary values exceed ``threshold`` times the peak."""
        peak = float(np.abs(self.values).max())
        ok = peak == 0.0 or self.boundary_max() <= threshold * peak
        if not ok:
            warnings.warn(
                f"field does not decay at the box boundary (ratio {self.boundary_max() / peak:.2e})",
                BoundaryDecayWarning, stacklevel=2)
        return ok


@dataclass(frozen=True, eq=False)
class SpectralField3:
    """Fourier samples on ``(pi/L) * {-n/2, ..., n/2-1}^3`` (centred ordering)."""

    grid: UniformGrid3
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n,) * 3:
            raise ValueError("coefficient array has wrong shape")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)


def _checker(n: int) -> np.ndarray:
    return 1.0 - 2.0 * (np.arange(n) % 2)


def _checker3(n: int) -> np.ndarray:
    s = _checker(n)
    return s[:, None, None] * s[None, :, None] * s[None, None, :]


def dft3(f: ScalarField3) -> SpectralField3:
    g = f.grid
    raw = sfft.ifftn(f.values, norm="forward", workers=_WORKERS)
    coeffs = sfft.fftshift(raw) * _checker3(g.n) * g.h ** 3
    return SpectralField3(g, coeffs)


def idft3_complex(F: SpectralField3) -> np.ndarray:
    g = F.grid
    raw = sfft.fftn(sfft.ifftshift(F.coeffs * _checker3(g.n)), workers=_WORKERS)
    return raw / (2.0 * g.half_width) ** 3


def idft3(F: SpectralField3) -> ScalarField3:
    return ScalarField3(F.grid, idft3_complex(F).real)


def pad_field(f: ScalarField3, factor: int) -> ScalarField3:
    """Embed ``f`` in a box ``factor`` times larger (zero outside), same spacing."""
    if factor == 1:
        return f
    g = f.grid
    big = g.padded(factor)
    out = np.zeros((big.n,) * 3)
    o = (big.n - g.n) // 2
    out[o:o + g.n, o:o + g.n, o:o + g.n] = f.values
    return ScalarField3(big, out)


# ---------------------------------------------------------------- sphere ---


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Gauss-Legendre in cos(theta) times uniform azimuth.

    Node ``j = i * n_phi + k`` has ``cos(theta) = mu[i]`` and ``phi = 2 pi k / n_phi``.
    """

    n_theta: int
    n_phi: int
    mu: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    def antipode_index(self) -> np.ndarray:
        """Index of ``-omega_j`` for every node (requires even ``n_phi``)."""
        if self.n_phi % 2:
            raise ValueError("sphere grid lacks antipodal closure (odd n_phi)")
        i, k = np.divmod(np.arange(self.size), self.n_phi)
        return (self.n_theta - 1 - i) * self.n_phi + (k + self.n_phi // 2) % self.n_phi

    def integrate(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        return np.tensordot(np.moveaxis(values, axis, -1), self.weights, axes=([-1], [0]))


def sphere_quadrature(n_theta: int, n_phi: int) -> SphereGrid:
    if n_theta < 4 or n_phi < 8:
        raise ValueError("need n_theta >= 4 and n_phi >= 8")
    mu, wmu = roots_legendre(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - mu ** 2)
    nodes = np.stack([
        (st[:, None] * np.cos(phi)[None, :]).ravel(),
        (st[:, None] * np.sin(phi)[None, :]).ravel(),
        np.repeat(mu, n_phi),
    ], axis=1)
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    weights = np.repeat(wmu, n_phi) * (2.0 * np.pi / n_phi)
    return SphereGrid(n_theta, n_phi, mu, phi, nodes, weights)


def sphere_interp_matrix_coords(sphere: SphereGrid, directions: np.ndarray):
    """Bilinear weights on the (mu, phi) lattice for arbitrary unit vectors.

    Returns ``(idx, w)`` with shape ``(..., 4)``; value = sum(w * values[idx]).
    Beyond the outermost Gauss-Legendre rings the ring is held constant.
    """
    d = np.asarray(directions, dtype=float)
    mu = np.clip(d[..., 2], -1.0, 1.0)
    phi = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2.0 * np.pi)
    nodes_mu = sphere.mu
    i1 = np.clip(np.searchsorted(nodes_mu, mu), 1, sphere.n_theta - 1)
    i0 = i1 - 1
    tmu = np.clip((mu - nodes_mu[i0]) / (nodes_mu[i1] - nodes_mu[i0]), 0.0, 1.0)
    dphi = 2.0 * np.pi / sphere.n_phi
    fk = phi / dphi
    k0 = np.floor(fk).astype(int) % sphere.n_phi
    tphi = fk - np.floor(fk)
    k1 = (k0 + 1) % sphere.n_phi
    np_ = sphere.n_phi
    idx = np.stack([i0 * np_ + k0, i0 * np_ + k1, i1 * np_ + k0, i1 * np_ + k1], axis=-1)
    w = np.stack([(1 - tmu) * (1 - tphi), (1 - tmu) * tphi, tmu * (1 - tphi), tmu * tphi], axis=-1)
    return idx, w


# ------------------------------------------------------------------ line ---


@dataclass(frozen=True)
class LineGrid:
    """``m`` points ``s_i = -S_max + i * ds`` covering ``[-S_max, S_max)``."""

    m: int
    s_max: float

    def __post_init__(self):
        if not (self.m >= 16 and _is_pow2(int(self.m))):
            raise ValueError("m must be a power of two >= 16")
        if not self.s_max > 0:
            raise ValueError("s_max must be positive")

    @property
    def ds(self) -> float:
        return 2.0 * self.s_max / self.m

    @property
    def dnu(self) -> float:
        return np.pi / self.s_max

    @property
    def nu_max(self) -> float:
        return self.dnu * (self.m // 2)

    def s(self) -> np.ndarray:
        return -self.s_max + self.ds * np.arange(self.m)

    def nu(self) -> np.ndarray:
        """Centred frequency axis ``(pi/S_max) * (k - m/2)``."""
        return self.dnu * (np.arange(self.m) - self.m // 2)

    def nu_fft(self) -> np.ndarray:
        """Frequencies in numpy FFT order."""
        return 2.0 * np.pi * sfft.fftfreq(self.m, d=self.ds)


def line_forward(line: LineGrid, g: np.ndarray) -> np.ndarray:
    """``(F g)(nu_k) = int exp(i nu s) g(s) ds`` on the centred axis, along axis 0."""
    raw = sfft.ifft(g, axis=0, norm="forward", workers=_WORKERS)
    sign = _checker(line.m).reshape((-1,) + (1,) * (g.ndim - 1))
    return sfft.fftshift(raw, axes=0) * sign * line.ds


def line_inverse(line: LineGrid, G: np.ndarray) -> np.ndarray:
    """Inverse of :func:`line_forward` (complex output)."""
    sign = _checker(line.m).reshape((-1,) + (1,) * (G.ndim - 1))
    raw = sfft.fft(sfft.ifftshift(G * sign, axes=0), axis=0, workers=_WORKERS)
    return raw / (2.0 * line.s_max)


def line_multiplier(line: LineGrid, g: np.ndarray, mult: np.ndarray) -> np.ndarray:
    """Apply a real even Fourier multiplier (given in FFT order) along axis 0."""
    shape = (-1,) + (1,) * (g.ndim - 1)
    G = sfft.rfft(g, axis=0, workers=_WORKERS)
    half = mult[: G.shape[0]].reshape(shape)
    return sfft.irfft(G * half, n=line.m, axis=0, workers=_WORKERS)


# --------------------------------------------------------- interpolation ---


def _check_nan(a):
    if np.isnan(a).any():
        raise ValueError("NaN in samples")


_PAD = 24


def spline_coeffs(samples: np.ndarray) -> np.ndarray:
    """Cubic B-spline coefficients along axis 0.

    The samples are extended by ``_PAD`` points on each side with the cubic
    through the four outermost samples before prefiltering, so cubic data are
    reproduced exactly away from the padded margin.
    """
    y = np.asarray(samples, dtype=float)
    m = y.shape[0]
    k = np.arange(1, _PAD + 1, dtype=float)
    # Lagrange weights for extrapolating node -k from nodes 0..3
    t = -k
    L = [((t - 1) * (t - 2) * (t - 3)) / -6.0, (t * (t - 2) * (t - 3)) / 2.0,
         (t * (t - 1) * (t - 3)) / -2.0, (t * (t - 1) * (t - 2)) / 6.0]
    shape = (-1,) + (1,) * (y.ndim - 1)
    left = sum(L[a].reshape(shape) * y[a] for a in range(4))[::-1]
    right = sum(L[a].reshape(shape) * y[m - 1 - a] for a in range(4))
    ext = np.concatenate([left, y, right], axis=0)
    return ndimage.spline_filter1d(ext, order=3, axis=0, mode="mirror")


def _bspline3_weights(t):
    t2 = t * t
    t3 = t2 * t
    w0 = (1 - t) ** 3 / 6.0
    w1 = (3 * t3 - 6 * t2 + 4) / 6.0
    w2 = (-3 * t3 + 3 * t2 + 3 * t + 1) / 6.0
    w3 = t3 / 6.0
    return w0, w1, w2, w3


def eval_spline_columns(coeffs: np.ndarray, pos: np.ndarray, cols=None) -> np.ndarray:
    """Evaluate splines from :func:`spline_coeffs` at fractional node indices ``pos``.

    ``coeffs`` has shape ``(m + 2*pad,)`` or ``(m + 2*pad, N)``; for 2D
    coefficients ``cols`` selects the column per query (broadcast against
    ``pos``). Queries outside ``[0, m-1]`` return 0.
    """
    m = coeffs.shape[0] - 2 * _PAD
    pos = np.asarray(pos, dtype=float)
    inside = (pos >= 0.0) & (pos <= m - 1)
    p = np.where(inside, pos, 0.0) + _PAD
    base = np.floor(p)
    t = p - base
    i = base.astype(np.int64)
    w = _bspline3_weights(t)
    out = 0.0
    for off, wk in zip((-1, 0, 1, 2), w):
        j = i + off
        out = out + wk * (coeffs[j] if cols is None else coeffs[j, cols])
    return np.where(inside, out, 0.0)


def interp1(line: LineGrid, samples: np.ndarray, s) -> np.ndarray:
    """Cubic spline interpolation of ``samples`` (shape ``(m,)``); 0 outside."""
    samples = np.asarray(samples, dtype=float)
    _check_nan(samples)
    c = spline_coeffs(samples)
    return eval_spline_columns(c, (np.asarray(s, dtype=float) + line.s_max) / line.ds)


def interp3(F: SpectralField3, xi: np.ndarray, order: int = 1) -> np.ndarray:
    """Interpolate centred Fourier samples at points ``xi`` (shape ``(..., 3)``).

    ``order=1`` is trilinear; ``order=3`` uses cubic splines. 0 outside the grid.
    """
    _check_nan(F.coeffs.real)
    _check_nan(F.coeffs.imag)
    g = F.grid
    xi = np.asarray(xi, dtype=float)
    pos = xi / g.dxi + g.n // 2
    coords = np.moveaxis(pos, -1, 0).reshape(3, -1)
    kw = dict(order=order, mode="constant", cval=0.0, prefilter=order > 1)
    re = ndimage.map_coordinates(F.coeffs.real, coords, **kw)
    im = ndimage.map_coordinates(F.coeffs.imag, coords, **kw)
    out = (re + 1j * im).reshape(xi.shape[:-1])
    inside = np.all((pos >= 0) & (pos <= g.n - 1), axis=-1)
    return np.where(inside, out, 0.0)


def cubic_spline_sampler(F: SpectralField3):
    """Return a function evaluating cubic-spline interpolation of ``F`` at many points.

    The spline prefilter is computed once.
    """
    g = F.grid
    # drop the unpaired -Nyquist planes: the rest is symmetric about xi = 0,
    # so the prefilter commutes with xi -> -xi
    c = F.coeffs[1:, 1:, 1:]
    cre = ndimage.spline_filter(c.real, order=3, mode="grid-constant")
    cim = ndimage.spline_filter(c.imag, order=3, mode="grid-constant")

    def sample(xi: np.ndarray) -> np.ndarray:
        pos = np.asarray(xi, dtype=float) / g.dxi + g.n // 2
        coords = np.moveaxis(pos - 1.0, -1, 0).reshape(3, -1)
        kw = dict(order=3, mode="grid-constant", cval=0.0, prefilter=False)
        re = ndimage.map_coordinates(cre, coords, **kw)
        im = ndimage.map_coordinates(cim, coords, **kw)
        out = (re + 1j * im).reshape(pos.shape[:-1])
        inside = np.all((pos >= 1) & (pos <= g.n - 1), axis=-1)
        return np.where(inside, out, 0.0)

    return sample
