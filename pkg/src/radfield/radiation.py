"""Radiation profiles of free waves in R^3: Fourier and Radon routes, ansatz operators.

Sign conventions: all transforms here use ``exp(+i ...)`` in the forward
direction. Under that convention the profile of radial data is
``G+(s) = (v1(s) - v0'(s))/2`` with ``v = r u`` oddly extended, and the
Fourier-side formulas below carry ``exp(-i tau)`` where the ``exp(-i ...)``
literature writes ``exp(+i tau)``.
"""
from __future__ import annotations

import numpy as np
import numba
from scipy import ndimage

from . import grids
from .grids import (LineGrid, ScalarField3, SpectralField3, SphereGrid, UniformGrid3,
                    cubic_spline_sampler, dft3, idft3, pad_field, spline_coeffs,
                    eval_spline_columns, sphere_interp_matrix_coords, _PAD)
from .sobolev import DataPair, RadiationProfile, hdot_norm_sq_cyl, hdot_norm_sq_r3

DIM = 3
C_D = 1.0 / (2.0 * (2.0 * np.pi) ** ((DIM - 1) / 2))  # 1/(4 pi)
TAU = (DIM - 1) * np.pi / 4.0  # pi/2


def _chi_plus(nu):
    return (nu > 0).astype(float)


def _chi_minus(nu):
    return (nu < 0).astype(float)


def profile_spectrum(nu, u0h, u1h, direction: str):
    """``F G(nu, omega)`` from ``u0^(nu omega)``, ``u1^(nu omega)``."""
    phase = np.exp(-1j * TAU) * _chi_minus(nu) + np.exp(1j * TAU) * _chi_plus(nu)
    amp = np.abs(nu) ** ((DIM - 1) / 2)
    if direction == "plus":
        return -C_D * amp * phase * (-1j * nu * u0h - u1h)
    if direction == "minus":
        return C_D * amp * phase * (-1j * nu * u0h + u1h)
    raise ValueError("direction must be 'plus' or 'minus'")


def data_spectrum(nu, FG, FG_anti, direction: str):
    """Invert :func:`profile_spectrum` for ``nu > 0``.

    ``FG`` is ``F G(nu, omega)`` and ``FG_anti`` is ``F G(-nu, -omega)``.
    Returns ``(u0^(nu omega), u1^(nu omega))``.
    """
    a = np.exp(-1j * TAU) * FG
    b = np.exp(1j * TAU) * FG_anti
    sign = -1j if direction == "plus" else 1j
    u0h = sign / (2 * C_D) * nu ** (-(DIM + 1) / 2) * (a - b)
    u1h = 1.0 / (2 * C_D) * nu ** (-(DIM - 1) / 2) * (a + b)
    return u0h, u1h


def check_resolution(grid: UniformGrid3, line: LineGrid):
    need = np.pi / grid.h
    if line.nu_max < need:
        raise ValueError(f"line grid resolves nu up to {line.nu_max:.4g}; need nu_max >= {need:.4g} "
                         f"(increase m or decrease S_max)")


def spectral_taper(nu: np.ndarray, nu_cut: float, start: float) -> np.ndarray:
    """1 for ``|nu| <= start * nu_cut``, smooth (C-infinity) roll-off to 0 at ``nu_cut``."""
    a = np.abs(nu) / nu_cut
    w = np.ones_like(a)
    roll = (a > start) & (a < 1.0)
    x = (a[roll] - start) / (1.0 - start)
    with np.errstate(over="ignore"):
        w[roll] = 1.0 / (1.0 + np.exp(1.0 / (1.0 - x) - 1.0 / x))
    w[a >= 1.0] = 0.0
    return w


def _hermitian_part(F: SpectralField3) -> SpectralField3:
    """Drop the unpaired -Nyquist planes so that interpolation commutes with xi -> -xi."""
    c = F.coeffs.copy()
    c[0, :, :] = 0.0
    c[:, 0, :] = 0.0
    c[:, :, 0] = 0.0
    return SpectralField3(F.grid, c)


def forward(p: DataPair, sphere: SphereGrid, line: LineGrid, direction: str = "plus",
            pad: int = 2, taper: float | None = None) -> RadiationProfile:
    """Radiation profile by sampling the data spectra along rays ``nu * omega``.

    The data are zero-padded by ``pad`` before the 3D transform and the spectra
    are sampled with cubic splines. With ``taper`` set, the line spectrum is
    rolled off smoothly between ``taper * pi/h`` and ``pi/h``. The imaginary residue of the inverse line
    transform, relative to the real part, is stored in ``forward.last_residue``.
    """
    g = p.grid
    check_resolution(g, line)
    p.u0.check_decay()
    p.u1.check_decay()
    F0 = _hermitian_part(dft3(pad_field(p.u0, pad)))
    F1 = _hermitian_part(dft3(pad_field(p.u1, pad)))
    nu = line.nu()
    kmax = np.sqrt(3.0) * np.pi / g.h
    keep = np.nonzero(np.abs(nu) <= kmax)[0]
    pts = nu[keep][:, None, None] * sphere.nodes[None, :, :]
    u0h = cubic_spline_sampler(F0)(pts)
    u1h = cubic_spline_sampler(F1)(pts)
    FG = np.zeros((line.m, sphere.size), dtype=complex)
    FG[keep] = profile_spectrum(nu[keep][:, None], u0h, u1h, direction)
    if taper is not None:
        FG *= spectral_taper(nu, np.pi / g.h, taper)[:, None]
    Gc = grids.line_inverse(line, FG)
    re = np.linalg.norm(Gc.real)
    forward.last_residue = float(np.linalg.norm(Gc.imag) / re) if re > 0 else 0.0
    return RadiationProfile(line, sphere, np.ascontiguousarray(Gc.real), direction)


forward.last_residue = 0.0


def _polar_tables(G: RadiationProfile):
    """``u0^``, ``u1^`` on the polar lattice ``nu_k >= 0`` times sphere nodes."""
    line, sphere = G.line, G.sphere
    anti = sphere.antipode_index()
    FG = grids.line_forward(line, np.asarray(G.values))
    m = line.m
    k = np.arange(m // 2 + 1, m)
    nu = line.nu()[k]
    FG_pos = FG[k]
    FG_neg = FG[m - k][:, anti]
    u0h, u1h = data_spectrum(nu[:, None], FG_pos, FG_neg, G.direction)
    # prepend the nu = 0 row: spectra of decaying data are continuous and direction
    # independent there; quadratic extrapolation from the first three rows
    lim = lambda u: np.dot(sphere.weights, 3 * u[0] - 3 * u[1] + u[2]) / sphere.weights.sum()  # noqa: E731
    z0 = np.full((1, sphere.size), lim(u0h))
    z1 = np.full((1, sphere.size), lim(u1h))
    return np.concatenate([z0, u0h]), np.concatenate([z1, u1h])


def inverse_fourier(G: RadiationProfile, grid: UniformGrid3) -> DataPair:
    """Data ``(u0, u1)`` on ``grid`` whose radiation profile is ``G``."""
    line, sphere = G.line, G.sphere
    t0, t1 = _polar_tables(G)
    k = grid.freq_radius()
    a, b, c = grid.freq_coords()
    dirs = np.stack(np.broadcast_arrays(a, b, c), axis=-1)
    safe = np.where(k > 0, k, 1.0)
    dirs = dirs / safe[..., None]
    dirs[k == 0] = (0.0, 0.0, 1.0)
    idx, w = sphere_interp_matrix_coords(sphere, dirs)
    pos = k / line.dnu
    out = []
    for tab in (t0, t1):
        cre = spline_coeffs(tab.real)
        cim = spline_coeffs(tab.imag)
        val = np.zeros(k.shape, dtype=complex)
        for q in range(4):
            val += w[..., q] * (eval_spline_columns(cre, pos, idx[..., q])
                                + 1j * eval_spline_columns(cim, pos, idx[..., q]))
        out.append(idft3(SpectralField3(grid, val)))
    return DataPair(out[0], out[1])


# ---------------------------------------------------------- Radon route ---


@numba.njit(cache=True, fastmath=True)
def _ring(tabs, i, x0, x1, x2, e1, e2, mu, cps, sps, mu_nodes, n_phi, acc, scale):
    """``acc[k] += scale * mean_psi tabs[k, i, omega(mu, psi)]`` (bilinear in angle)."""
    nt = mu_nodes.shape[0]
    K = tabs.shape[0]
    st = np.sqrt(max(0.0, 1.0 - mu * mu))
    f = scale / cps.shape[0]
    two_pi = 2.0 * np.pi
    for q in range(cps.shape[0]):
        c = st * cps[q]
        d = st * sps[q]
        wx = mu * x0 + c * e1[0] + d * e2[0]
        wy = mu * x1 + c * e1[1] + d * e2[1]
        wz = min(1.0, max(-1.0, mu * x2 + c * e1[2] + d * e2[2]))
        i1 = np.searchsorted(mu_nodes, wz)
        i1 = min(max(i1, 1), nt - 1)
        i0 = i1 - 1
        tm = min(1.0, max(0.0, (wz - mu_nodes[i0]) / (mu_nodes[i1] - mu_nodes[i0])))
        phi = np.arctan2(wy, wx)
        if phi < 0.0:
            phi += two_pi
        fk = phi * n_phi / two_pi
        k0f = np.floor(fk)
        tp = fk - k0f
        k0 = int(k0f) % n_phi
        k1 = (k0 + 1) % n_phi
        ia = i0 * n_phi
        ib = i1 * n_phi
        w00 = f * (1.0 - tm) * (1.0 - tp)
        w01 = f * (1.0 - tm) * tp
        w10 = f * tm * (1.0 - tp)
        w11 = f * tm * tp
        for k in range(K):
            acc[k] += (w00 * tabs[k, i, ia + k0] + w01 * tabs[k, i, ia + k1]
                       + w10 * tabs[k, i, ib + k0] + w11 * tabs[k, i, ib + k1])


@numba.njit(cache=True)
def _ring_frac(tabs, pos, x0, x1, x2, e1, e2, mu, cps, sps, mu_nodes, n_phi, acc):
    """Ring means at fractional s-node ``pos`` (linear in s) written into ``acc``."""
    m = tabs.shape[1]
    acc[:] = 0.0
    if pos < 0.0 or pos > m - 1:
        return
    i = min(int(np.floor(pos)), m - 2)
    t = pos - i
    _ring(tabs, i, x0, x1, x2, e1, e2, mu, cps, sps, mu_nodes, n_phi, acc, 1.0 - t)
    _ring(tabs, i + 1, x0, x1, x2, e1, e2, mu, cps, sps, mu_nodes, n_phi, acc, t)


@numba.njit(cache=True)
def _backproject_aligned(tabs, s0, ds, i_lo, i_hi, mu_nodes, n_phi, weights, pts, shift, n_psi,
                         stride):
    """``int_{S^2} G_k(x . omega + shift, omega) d omega`` for every table ``k`` and point.

    The sphere is parametrised about ``x/|x|``; the polar variable becomes
    ``s = x . omega`` and is integrated by the trapezoid rule on every
    ``stride``-th s-node (partial end cells at ``s = +-|x|``), the azimuth by
    the uniform rule with ``n_psi`` nodes.
    """
    K = tabs.shape[0]
    m = tabs.shape[1]
    npt = pts.shape[0]
    out = np.zeros((K, npt))
    psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
    cps = np.cos(psi)
    sps = np.sin(psi)
    D = stride * ds
    I_lo = i_lo // stride
    I_hi = min(-(-i_hi // stride), (m - 1) // stride)
    acc = np.zeros(K)
    cur = np.zeros(K)
    prev = np.zeros(K)
    end = np.zeros(K)
    e1 = np.zeros(3)
    e2 = np.zeros(3)
    for p in range(npt):
        x0 = pts[p, 0]
        x1 = pts[p, 1]
        x2 = pts[p, 2]
        rho = np.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
        if rho < 1e-12:
            pos = (shift - s0) / ds
            if pos >= 0.0 and pos <= m - 1:
                i = min(int(np.floor(pos)), m - 2)
                t = pos - i
                for k in range(K):
                    v = 0.0
                    for j in range(weights.shape[0]):
                        v += weights[j] * ((1.0 - t) * tabs[k, i, j] + t * tabs[k, i + 1, j])
                    out[k, p] = v
            continue
        x0 /= rho
        x1 /= rho
        x2 /= rho
        # orthonormal frame about x/|x|
        if abs(x2) < 0.9:
            e1[0] = -x1
            e1[1] = x0
            e1[2] = 0.0
        else:
            e1[0] = 0.0
            e1[1] = -x2
            e1[2] = x1
        nrm = np.sqrt(e1[0] ** 2 + e1[1] ** 2 + e1[2] ** 2)
        e1 /= nrm
        e2[0] = x1 * e1[2] - x2 * e1[1]
        e2[1] = x2 * e1[0] - x0 * e1[2]
        e2[2] = x0 * e1[1] - x1 * e1[0]
        # coarse nodes s0 + I*D strictly inside (-rho, rho) + shift; zero outside [I_lo, I_hi]
        lo_s = -rho + shift
        hi_s = rho + shift
        a = int(np.floor((lo_s - s0) / D)) + 1
        b = int(np.ceil((hi_s - s0) / D)) - 1
        a2 = max(a, I_lo - 1)
        b2 = min(b, I_hi + 1)
        if b2 < a2:
            if a > I_hi or b < I_lo:
                continue
            _ring_frac(tabs, (lo_s - s0) / ds, x0, x1, x2, e1, e2, -1.0, cps, sps, mu_nodes, n_phi, prev)
            _ring_frac(tabs, (hi_s - s0) / ds, x0, x1, x2, e1, e2, 1.0, cps, sps, mu_nodes, n_phi, end)
            for k in range(K):
                out[k, p] = 2.0 * np.pi * (prev[k] + end[k])
            continue
        if a2 > a:
            prev_s = s0 + a2 * D
            prev[:] = 0.0
            first = a2 + 1
        else:
            prev_s = lo_s
            _ring_frac(tabs, (lo_s - s0) / ds, x0, x1, x2, e1, e2, -1.0, cps, sps, mu_nodes, n_phi, prev)
            first = a
        acc[:] = 0.0
        for I in range(first, b2 + 1):
            si = s0 + I * D
            cur[:] = 0.0
            if I >= I_lo and I <= I_hi:
                _ring(tabs, I * stride, x0, x1, x2, e1, e2, (si - shift) / rho, cps, sps,
                      mu_nodes, n_phi, cur, 1.0)
            for k in range(K):
                acc[k] += 0.5 * (si - prev_s) * (prev[k] + cur[k])
                prev[k] = cur[k]
            prev_s = si
        if b2 == b:
            _ring_frac(tabs, (hi_s - s0) / ds, x0, x1, x2, e1, e2, 1.0, cps, sps, mu_nodes, n_phi, end)
            for k in range(K):
                acc[k] += 0.5 * (hi_s - prev_s) * (prev[k] + end[k])
        for k in range(K):
            out[k, p] = 2.0 * np.pi * acc[k] / rho
    return out


def s_derivative(line: LineGrid, values: np.ndarray) -> np.ndarray:
    """Spectral ``d/ds`` along axis 0."""
    import scipy.fft as sfft
    k = sfft.rfftfreq(line.m, d=line.ds) * 2.0 * np.pi
    k[-1] = 0.0
    shape = (-1,) + (1,) * (values.ndim - 1)
    F = sfft.rfft(values, axis=0, workers=grids._WORKERS)
    return sfft.irfft(1j * k.reshape(shape) * F, n=line.m, axis=0, workers=grids._WORKERS)


def check_support(G: RadiationProfile, margin: int = 4, rel: float = 1e-3):
    v = np.abs(np.asarray(G.values))
    peak = v.max()
    if peak == 0:
        return
    edge = max(v[:margin].max(), v[-margin:].max())
    if edge > rel * peak:
        raise ValueError("profile support touches the s-grid boundary")


def support_indices(values: np.ndarray, rel: float = 1e-12):
    """Index range outside which every column is below ``rel`` times the peak."""
    col = np.abs(values).max(axis=1)
    peak = col.max()
    nz = np.nonzero(col > rel * peak)[0] if peak > 0 else np.array([], dtype=int)
    if nz.size == 0:
        return 1, 0
    return max(int(nz[0]) - 1, 0), min(int(nz[-1]) + 1, values.shape[0] - 1)


def backproject(G: RadiationProfile, pts: np.ndarray, values=None, shift: float = 0.0,
                n_psi: int = 16, support_rel: float = 1e-12, stride: int = 2) -> np.ndarray:
    """``int_{S^2} V(x . omega + shift, omega) d omega`` at points ``pts`` (shape ``(..., 3)``).

    ``values`` is one sample array or a list of them (default: the samples of
    ``G``); a list returns a stacked result. Samples below ``support_rel``
    times the peak are treated as outside the support.
    """
    line, sphere = G.line, G.sphere
    many = isinstance(values, (list, tuple))
    vals = [G.values] if values is None else (list(values) if many else [values])
    tabs = np.ascontiguousarray(np.stack([np.broadcast_to(v, (line.m, sphere.size)) for v in vals]),
                                dtype=float)
    i_lo, i_hi = support_indices(np.abs(tabs).max(axis=0), support_rel)
    pts = np.asarray(pts, dtype=float)
    flat = np.ascontiguousarray(pts.reshape(-1, 3))
    out = _backproject_aligned(tabs, -line.s_max, line.ds, i_lo, i_hi, sphere.mu, sphere.n_phi,
                               sphere.weights, flat, float(shift), int(n_psi), int(stride))
    out = out.reshape((len(vals),) + pts.shape[:-1])
    return out if many else out[0]


def _grid_points(grid: UniformGrid3) -> np.ndarray:
    x, y, z = grid.coords()
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def _backproject_profile(G: RadiationProfile, grid: UniformGrid3, values, shift=0.0, support_rel=1e-12):
    return backproject(G, _grid_points(grid), values, shift, support_rel=support_rel)


def adjoint_radon(G: RadiationProfile, grid: UniformGrid3, support_rel: float = 1e-12) -> ScalarField3:
    """``T G(x) = int_{S^2} G(x . omega, omega) d omega``."""
    check_support(G)
    return ScalarField3(grid, _backproject_profile(G, grid, G.values, 0.0, support_rel))


def synthesize(G: RadiationProfile, t: float, grid: UniformGrid3,
               support_rel: float = 1e-12) -> ScalarField3:
    """Free wave at time ``t`` from its negative-direction profile."""
    if G.direction != "minus":
        G = reflect(G)
    check_support(G)
    return ScalarField3(grid, _backproject_profile(G, grid, G.values, t, support_rel) / (2.0 * np.pi))


def inverse_radon3(G: RadiationProfile, grid: UniformGrid3, support_rel: float = 1e-3) -> DataPair:
    """Data from ``G-`` by back-projection of ``G-`` and ``d_s G-``.

    Profiles computed by :func:`forward` carry a band-limit tail of order 1e-4
    of the peak; the default ``support_rel`` trims it, which keeps the cost
    low and changes the result well below the discretisation error.
    """
    if G.direction != "minus":
        G = reflect(G)
    check_support(G)
    vals = G.values[:, :1] if G.zonal else G.values
    dG = s_derivative(G.line, np.asarray(vals))
    u0, u1 = _backproject_profile(G, grid, [G.values, dG], 0.0, support_rel) / (2.0 * np.pi)
    return DataPair(ScalarField3(grid, u0), ScalarField3(grid, u1))


def reflect(G: RadiationProfile) -> RadiationProfile:
    """``G+(s, omega) = -G-(-s, -omega)``; swaps the direction tag."""
    m = G.line.m
    idx = (m - np.arange(m)) % m
    anti = G.sphere.antipode_index()
    other = "minus" if G.direction == "plus" else "plus"
    if G.zonal:
        return RadiationProfile.from_zonal(G.line, G.sphere, -G.values[idx, 0], other)
    return RadiationProfile(G.line, G.sphere, -np.asarray(G.values)[idx][:, anti], other)


# ------------------------------------------------------------- ansatz ---


def profile_at(G: RadiationProfile, s: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Evaluate ``G(s, omega)`` off-grid: cubic in ``s``, bilinear in angle."""
    line = G.line
    pos = (np.asarray(s, dtype=float) + line.s_max) / line.ds
    if G.zonal:
        return eval_spline_columns(spline_coeffs(G.values[:, 0]), pos)
    idx, w = sphere_interp_matrix_coords(G.sphere, directions)
    coeffs = spline_coeffs(np.asarray(G.values))
    out = np.zeros(np.shape(pos))
    for q in range(4):
        out += w[..., q] * eval_spline_columns(coeffs, pos, idx[..., q])
    return out


def ansatz_embed(G: RadiationProfile, t: float, grid: UniformGrid3):
    """``|x|^-1 G(|x| - t, x/|x|) * (1, -x/|x|)`` as (time part, [three space parts])."""
    if t < 0:
        raise ValueError("t must be non-negative")
    x, y, z = grid.coords()
    rho = grid.radius()
    safe = np.where(rho > 0, rho, 1.0)
    dirs = np.stack(np.broadcast_arrays(x / safe, y / safe, z / safe), axis=-1)
    val = profile_at(G, rho - t, dirs) / safe
    val[rho == 0] = 0.0
    comps = [-(c / safe) * val for c in (x, y, z)]
    return ScalarField3(grid, val), [ScalarField3(grid, np.broadcast_to(c, val.shape)) for c in comps]


def ansatz_adjoint(f: ScalarField3, t: float, k: int, line: LineGrid,
                   sphere: SphereGrid) -> RadiationProfile:
    """``(s + t) f((s + t) omega) omega_k`` for ``s > -t``, else 0 (``omega_0 = 1``)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if k not in (0, 1, 2, 3):
        raise ValueError("k must be 0..3")
    g = f.grid
    s = line.s()
    rad = s + t
    pts = rad[:, None, None] * sphere.nodes[None, :, :]
    coef = ndimage.spline_filter(f.values, order=3, mode="grid-constant")
    pos = (pts + g.half_width) / g.h
    vals = ndimage.map_coordinates(coef, np.moveaxis(pos, -1, 0).reshape(3, -1), order=3,
                                   mode="grid-constant", cval=0.0, prefilter=False)
    vals = vals.reshape(line.m, sphere.size)
    weight = np.where(rad > 0, rad, 0.0)[:, None]
    om = np.ones(sphere.size) if k == 0 else sphere.nodes[:, k - 1]
    return RadiationProfile(line, sphere, weight * vals * om[None, :], "plus")


def ansatz_residual(p: DataPair, G: RadiationProfile, t: float, beta: float | None = None) -> float:
    """``E(t) = ||grad_{t,x} u(t) - A G(t)||`` in ``(H^{beta-1})^4`` for the free wave with data ``p``.

    ``G`` is the positive profile of ``p``; the gradient is spectral.
    """
    from .freewave import evolve, gradient

    if G.direction != "plus":
        raise ValueError("need the positive-direction profile")
    beta = p.beta if beta is None else beta
    st = evolve(p, t)
    a0, a_sp = ansatz_embed(G, t, p.grid)
    parts = [st.u1.values - a0.values]
    parts += [gu.values - a.values for gu, a in zip(gradient(st.u0), a_sp)]
    tot = sum(hdot_norm_sq_r3(ScalarField3(p.grid, d), beta - 1.0) for d in parts)
    return float(np.sqrt(tot))


def ansatz_embed_ratio(G: RadiationProfile, t: float, grid: UniformGrid3, beta: float) -> float:
    """``||A G||_{(H^{beta-1})^4} / ||G||_{H^{beta-1}}``."""
    a0, a_sp = ansatz_embed(G, t, grid)
    num = sum(hdot_norm_sq_r3(a, beta - 1.0) for a in [a0, *a_sp])
    return float(np.sqrt(num / hdot_norm_sq_cyl(G, beta - 1.0)))


def ansatz_adjoint_ratio(f: ScalarField3, t: float, k: int, line: LineGrid, sphere: SphereGrid,
                         beta: float) -> float:
    """``||A_k^* f||_{H^beta(R x S^2)} / ||f||_{H^beta}``."""
    A = ansatz_adjoint(f, t, k, line, sphere)
    return float(np.sqrt(hdot_norm_sq_cyl(A, beta) / hdot_norm_sq_r3(f, beta)))
