"""Exterior space-time norms and decay scans for free waves built from radiation profiles."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.integrate import simpson

from .grids import ScalarField3, SphereGrid, UniformGrid3, sphere_quadrature
from .sobolev import DataPair, RadiationProfile, hdot_norm_cyl
from . import radiation


def critical_exponent(p: float) -> float:
    """``s_p = 3/2 - 2/(p - 1)``."""
    _check_power(p)
    return 1.5 - 2.0 / (p - 1.0)


def _check_power(p):
    if not 3.0 < p < 5.0:
        raise ValueError(f"power p={p} outside (3, 5)")


def y_exponents(p: float):
    """``(q_t, q_x)`` of the Y norm."""
    sp = critical_exponent(p)
    return 2.0 * p / (sp + 1.0), 2.0 * p / (2.0 - sp)


def z_exponents(p: float):
    """``(q_t, q_x)`` of the Z norm."""
    sp = critical_exponent(p)
    return 2.0 / (sp + 1.0), 2.0 / (2.0 - sp)


# ------------------------------------------------------------------ slabs ---


@dataclass(frozen=True, eq=False)
class SpaceTimeSlab:
    """Snapshots ``u(t_k)`` on one 3D grid at uniformly spaced times."""

    grid: UniformGrid3
    times: np.ndarray
    u: np.ndarray  # (K, n, n, n)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two times")
        dt = np.diff(t)
        if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * abs(dt[0]):
            raise ValueError("times must be uniformly spaced and increasing")
        n = self.grid.n
        if u.shape != (t.size, n, n, n):
            raise ValueError("snapshot array does not match grid and times")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "u", u)

    @classmethod
    def from_snapshots(cls, times, snapshots) -> "SpaceTimeSlab":
        """From a list of :class:`DataPair` states (only ``u0`` is used) or fields."""
        fields = [s.u0 if isinstance(s, DataPair) else s for s in snapshots]
        grids = {f.grid for f in fields}
        if len(grids) != 1:
            raise ValueError("snapshots live on different grids")
        return cls(fields[0].grid, times, np.stack([f.values for f in fields]))

    @classmethod
    def from_profile(cls, G: RadiationProfile, grid: UniformGrid3, times) -> "SpaceTimeSlab":
        """Free wave synthesised from its negative-direction profile at each time."""
        return cls(grid, times, np.stack([radiation.synthesize(G, float(t), grid).values
                                          for t in times]))


@dataclass(frozen=True, eq=False)
class RadialSlab:
    """Radial snapshots ``u(r_i, t_k)`` on uniform ``r`` and ``t`` grids."""

    r: np.ndarray
    times: np.ndarray
    u: np.ndarray  # (K, nr)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        t = np.asarray(self.times, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if u.shape != (t.size, r.size):
            raise ValueError("snapshot array does not match r and times")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "u", u)


def _spatial_norms(slab, qx: float, r):
    """Per-snapshot ``(int_{|x| > |t| + r} |u|^qx dx)`` (Riemann sums)."""
    t = slab.times
    if isinstance(slab, SpaceTimeSlab):
        g = slab.grid
        rad = g.radius()
        out = np.empty(t.size)
        for k in range(t.size):
            vals = np.abs(slab.u[k]) ** qx
            if r is not None:
                vals = np.where(rad > abs(t[k]) + r, vals, 0.0)
            out[k] = vals.sum() * g.h ** 3
        return out
    rr = slab.r
    dr = rr[1] - rr[0]
    w = 4.0 * np.pi * rr ** 2 * dr
    w[0] *= 0.5
    w[-1] *= 0.5
    dens = np.abs(slab.u) ** qx * w[None, :]
    if r is not None:
        dens = np.where(rr[None, :] > np.abs(t)[:, None] + r, dens, 0.0)
    return dens.sum(axis=1)


def mixed_norm(slab, qt: float, qx: float, r: float | None = None) -> float:
    """``L^qt_t L^qx_x`` norm, spatially restricted to ``|x| > |t| + r`` when ``r`` is given."""
    if r is not None and r < 0:
        raise ValueError("exterior radius must be non-negative")
    inner = _spatial_norms(slab, qx, r) ** (qt / qx)
    return float(np.trapezoid(inner, slab.times) ** (1.0 / qt))


def y_norm(slab, p: float, r: float | None = None) -> float:
    return mixed_norm(slab, *y_exponents(p), r)


def z_norm(slab, p: float, r: float | None = None) -> float:
    return mixed_norm(slab, *z_exponents(p), r)


# ------------------------------------------------------------- decay fit ---


@dataclass(frozen=True, eq=False)
class DecayScan:
    """Values ``v_k`` at increasing radii with a weighted log-log power fit."""

    radii: np.ndarray
    values: np.ndarray
    exponent: float
    intercept: float
    residual: float
    extra: dict = field(default_factory=dict)

    def fitted(self, r) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(r, dtype=float) ** self.exponent


def fit_decay(radii, values, upweight: float = 2.0, extra=None) -> DecayScan:
    """Least squares of ``log v`` on ``log r``; the two largest radii get weight ``upweight``.

    Non-positive values make the fit undefined (exponent and intercept are NaN).
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != v.shape:
        raise ValueError("radii and values must be matching 1D arrays")
    if r.size < 4:
        raise ValueError("a decay fit needs at least 4 points")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly increasing")
    if np.any(v < 0):
        raise ValueError("values must be non-negative")
    if np.any(v <= 0):
        return DecayScan(r, v, float("nan"), float("nan"), float("nan"), dict(extra or {}))
    w = np.ones_like(r)
    w[-2:] = upweight
    x, y = np.log(r), np.log(v)
    slope, icpt = np.polyfit(x, y, 1, w=np.sqrt(w))
    res = float(np.sqrt(np.sum(w * (y - slope * x - icpt) ** 2) / np.sum(w)))
    return DecayScan(r, v, float(slope), float(icpt), res, dict(extra or {}))


def growth_factor(values) -> float:
    """``max`` over the upper half of a sequence divided by ``max`` over the lower half."""
    v = np.asarray(values, dtype=float)
    h = v.size // 2
    lo = v[:h].max()
    return float(v[h:].max() / lo) if lo > 0 else (0.0 if v[h:].max() == 0 else float("inf"))


# -------------------------------------------------- profile support ---


def profile_support(G: RadiationProfile, rel: float = 1e-12):
    """Smallest ``(a, b)`` outside which ``|G|`` is below ``rel`` times its peak."""
    col = np.abs(np.asarray(G.values[:, :1] if G.zonal else G.values)).max(axis=1)
    peak = col.max()
    if peak == 0:
        return 0.0, 0.0
    nz = np.nonzero(col > rel * peak)[0]
    s = G.line.s()
    return float(s[max(nz[0] - 1, 0)]), float(s[min(nz[-1] + 1, s.size - 1)])


def _check_support_in(G: RadiationProfile, a: float, b: float):
    if not 0 <= a < b:
        raise ValueError("need 0 <= a < b")
    lo, hi = profile_support(G)
    ds = G.line.ds
    if lo < a - ds - 1e-12 or hi > b + ds + 1e-12:
        raise ValueError(f"profile support [{lo:g}, {hi:g}] not inside ({a:g}, {b:g})")


def zonal_primitive(G: RadiationProfile):
    """Antiderivative ``Phi(s) = int_{-inf}^s g`` of a zonal profile, as a callable."""
    if not G.zonal:
        raise ValueError("profile is not zonal")
    s, g = G.line.s(), G.column()
    nz = np.nonzero(g)[0]
    if nz.size == 0:
        nz = np.array([0])
    # exact zeros outside the window contribute nothing; keep a few nodes of margin
    i0, i1 = max(nz[0] - 4, 0), min(nz[-1] + 5, s.size)
    if i1 - i0 < 8:
        i0, i1 = max(min(i0, s.size - 8), 0), min(max(i1, 8), s.size)
    s, g = s[i0:i1], g[i0:i1]
    spl = make_interp_spline(s, g, k=3).antiderivative()
    total = float(spl(s[-1]))

    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= s[0], 0.0, np.where(x >= s[-1], total, spl(np.clip(x, s[0], s[-1]))))

    phi.mass = total
    return phi


def zonal_adjoint_radon(G: RadiationProfile, rho) -> np.ndarray:
    """``T G`` of a zonal profile at radius ``rho > 0``: ``(2 pi / rho) int_{-rho}^{rho} g``."""
    phi = zonal_primitive(G)
    rho = np.asarray(rho, dtype=float)
    return 2.0 * np.pi * (phi(rho) - phi(-rho)) / rho


def zonal_wave(G: RadiationProfile, rho, t) -> np.ndarray:
    """Free wave with zonal negative profile: ``(Phi(t + rho) - Phi(t - rho)) / rho``."""
    phi = zonal_primitive(G)
    rho = np.asarray(rho, dtype=float)
    return (phi(t + rho) - phi(t - rho)) / rho


# ------------------------------------------------------ L^6 scan ---


def _shell_grid(r_lo: float, r_hi: float, n: int) -> np.ndarray:
    return np.geomspace(r_lo, r_hi, n)


def _radial_tail_integral(rho_max, value_at_max, power, decay):
    """``int_{rho_max}^inf rho^2 (C rho^-decay)^power d rho`` with ``C`` matched at ``rho_max``."""
    C = value_at_max * rho_max ** decay
    k = decay * power - 3.0
    if k <= 0:
        return float("inf")
    return float(C ** power * rho_max ** (-k) / k)


def l6_exterior_scan(G: RadiationProfile, radii, a: float, b: float, rho_max_factor: float = 8.0,
                     n_rho: int = 241, sphere: SphereGrid | None = None) -> DecayScan:
    """``int_{|x| > R} |T G|^6 dx`` per radius ``R``, with the lemma ratio in ``extra``.

    Zonal profiles use the exact reduction ``T G(rho) = (2 pi/rho) int_{-rho}^{rho} g``;
    others are back-projected on shells ``rho * theta_j`` of an outer sphere
    grid. Beyond ``rho_max = rho_max_factor * max(radii)`` the tail uses the
    ``rho^-1`` far-field law matched at ``rho_max``.
    """
    radii = np.asarray(radii, dtype=float)
    _check_support_in(G, a, b)
    if np.any(radii < b):
        raise ValueError("radii must be >= b")
    rho_max = rho_max_factor * radii.max()
    values = np.empty(radii.size)
    peak = np.abs(np.asarray(G.values[:, :1] if G.zonal else G.values)).max()
    if peak == 0:
        values[:] = 0.0
        return fit_decay(radii, values, extra={"ratio": np.zeros_like(radii)})
    if G.zonal:
        def shell_mean(rho):
            return np.abs(zonal_adjoint_radon(G, rho)) ** 6
    else:
        outer = sphere or sphere_quadrature(16, 32)

        def shell_mean(rho):
            pts = rho[:, None, None] * outer.nodes[None, :, :]
            vals = radiation.backproject(G, pts)
            return (np.abs(vals) ** 6) @ outer.weights / (4.0 * np.pi)

    for i, R in enumerate(radii):
        rho = _shell_grid(R, rho_max, n_rho)
        dens = 4.0 * np.pi * rho ** 2 * shell_mean(rho)
        # Simpson in log(rho)
        inner = simpson(dens * rho, x=np.log(rho))
        tail_val = dens[-1] / (4.0 * np.pi * rho[-1] ** 2)
        values[i] = inner + 4.0 * np.pi * _radial_tail_integral(rho[-1], tail_val ** (1 / 6), 6.0, 1.0)
    g_l2 = np.sqrt(np.asarray(
        np.sum(np.asarray(G.values[:, :1] if G.zonal else G.values) ** 2, axis=0)) * G.line.ds)
    g_l2 = float(np.sqrt(np.dot(np.broadcast_to(g_l2 ** 2, (G.sphere.size,)), G.sphere.weights)))
    bound = (b - a) ** 2 * radii ** -2.0 * g_l2 ** 6
    return fit_decay(radii, values, extra={"ratio": values / bound, "l2": g_l2})


def indicator_l6_closed_form(R) -> np.ndarray:
    """``int_{|x|>R} (2 pi/|x|)^6 dx = 4 pi (2 pi)^6 / (3 R^3)`` for ``g = 1_(0,1)``."""
    return 4.0 * np.pi * (2.0 * np.pi) ** 6 / (3.0 * np.asarray(R, dtype=float) ** 3)


# ------------------------------------------------ exterior Y scan ---


def _time_tail(t_last, f_last, f_prev, t_prev):
    """``int_{t_last}^inf f`` for a power law through two samples (inf if it does not decay)."""
    if f_last <= 0:
        return 0.0
    if f_prev <= f_last:
        return float("inf")
    k = np.log(f_prev / f_last) / np.log(t_last / t_prev)
    if k <= 1:
        return float("inf")
    return float(f_last * t_last / (k - 1.0))


def _time_nodes(t_near: float, t_max: float, dt: float, growth: float = 1.0 / 32) -> np.ndarray:
    """Symmetric nodes: spacing ``dt`` up to ``t_near``, then ``growth * |t|``."""
    nt = int(np.ceil(min(t_near, t_max) / dt))
    pos = list(dt * np.arange(nt + 1))
    while pos[-1] < t_max:
        pos.append(pos[-1] + max(dt, growth * pos[-1]))
    pos = np.array(pos)
    return np.concatenate([-pos[:0:-1], pos])


def exterior_y_zonal(G: RadiationProfile, p: float, R: float, t_max: float | None = None,
                     dt: float | None = None, n_rho: int = 161) -> float:
    """Exterior Y norm over ``{|x| > |t| + R}``, ``t`` in R, of the wave with zonal profile ``G``.

    ``G`` is the negative-direction profile. Spatial integrals use Simpson in
    ``log rho``, split where ``t +- rho`` crosses a support end, up to where the
    wave equals ``M/rho`` exactly (``M`` the mass of ``G``), then the closed-form
    tail. Times beyond ``t_max`` use a power law fitted to the last two samples;
    the default ``t_max`` passes the support, after which that law is exact.
    """
    qt, qx = y_exponents(p)
    phi = zonal_primitive(G)
    M = phi.mass
    lo, hi = profile_support(G)
    dt = dt or min(0.25, R / 8.0)
    extent = max(abs(lo), abs(hi))
    t_max = t_max or 2.0 * extent + 4.0 * R
    t = _time_nodes(4.0 * R + extent if extent < 64 * R else 4.0 * R, t_max, dt)
    n_seg = max(n_rho // 4 * 2 + 1, 9)
    inner = np.empty(t.size)
    for k, tk in enumerate(t):
        r0 = abs(tk) + R
        # beyond r1 both Phi arguments leave the support: u = M / rho
        r1 = max(r0, hi - tk, tk - lo)
        acc = 0.0
        if r1 > r0:
            cuts = {r0, r1}
            for e in (lo, hi):
                for c in (e - tk, tk - e):
                    if r0 < c < r1:
                        cuts.add(c)
            cuts = sorted(cuts)
            for a, b in zip(cuts[:-1], cuts[1:]):
                if b <= a * (1 + 1e-12):
                    continue
                rho = np.geomspace(a, b, n_rho if len(cuts) == 2 else n_seg)
                u = (phi(tk + rho) - phi(tk - rho)) / rho
                acc += simpson(4.0 * np.pi * rho ** 3 * np.abs(u) ** qx, x=np.log(rho))
        acc += 4.0 * np.pi * abs(M) ** qx * r1 ** (3.0 - qx) / (qx - 3.0)
        inner[k] = acc
    f = inner ** (qt / qx)
    total = np.trapezoid(f, t)
    total += _time_tail(t[-1], f[-1], f[-2], t[-2]) + _time_tail(-t[0], f[0], f[1], -t[1])
    return float(total ** (1.0 / qt))


def exterior_y_general(G: RadiationProfile, p: float, R: float, t_max: float, dt: float = 0.5,
                       n_rho: int = 49, rho_span: float = 16.0, sphere: SphereGrid | None = None) -> float:
    """As :func:`exterior_y_zonal` for any profile, by back-projection on shells.

    For each time the wave is sampled on ``rho in [|t| + R, |t| + R + rho_span * R]``
    times an outer sphere grid; beyond that the ``rho^-1`` far-field law is
    matched to the last shell.
    """
    qt, qx = y_exponents(p)
    outer = sphere or sphere_quadrature(12, 24)
    nt = int(np.ceil(t_max / dt))
    t = np.linspace(-nt * dt, nt * dt, 2 * nt + 1)
    inner = np.empty(t.size)
    for k, tk in enumerate(t):
        r0 = abs(tk) + R
        rho = np.geomspace(r0, r0 + rho_span * R, n_rho)
        pts = rho[:, None, None] * outer.nodes[None, :, :]
        u = radiation.backproject(G, pts, shift=float(tk)) / (2.0 * np.pi)
        shell = (np.abs(u) ** qx) @ outer.weights
        acc = simpson(rho ** 3 * shell, x=np.log(rho))
        acc += _radial_tail_integral(rho[-1], (shell[-1] / (4.0 * np.pi)) ** (1.0 / qx), qx, 1.0) * 4.0 * np.pi
        inner[k] = acc
    f = inner ** (qt / qx)
    total = np.trapezoid(f, t)
    total += _time_tail(t[-1], f[-1], f[-2], t[-2]) + _time_tail(-t[0], f[0], f[1], -t[1])
    return float(total ** (1.0 / qt))


def lemma_y_scan(G: RadiationProfile, p: float, radii, a: float, b: float,
                 t_max: float | None = None, **kw) -> DecayScan:
    """Exterior Y norm per radius with the ratio to ``((b-a)/R)^{(p-3)/(2p)} ||G||``.

    ``G`` is the negative-direction profile, supported in ``(a, b)``; the
    norm of ``G`` is taken in ``H^{s_p - 1}``. Time runs over ``[-t_max, t_max]``
    (default four times the largest radius) plus a fitted power-law tail.
    """
    _check_power(p)
    _check_support_in(G, a, b)
    radii = np.asarray(radii, dtype=float)
    t_max = t_max or 4.0 * radii.max()
    sp = critical_exponent(p)
    gnorm = hdot_norm_cyl(G, sp - 1.0)
    if gnorm == 0:
        return fit_decay(radii, np.zeros_like(radii), extra={"ratio": np.zeros_like(radii)})
    fn = exterior_y_zonal if G.zonal else exterior_y_general
    values = np.array([fn(G, p, float(R), t_max, **kw) for R in radii])
    bound = ((b - a) / radii) ** ((p - 3.0) / (2.0 * p)) * gnorm
    return fit_decay(radii, values, extra={"ratio": values / bound, "g_norm": gnorm})


# --------------------------------------------------------- technical lemmas ---


def geometric_sum_check(gamma: float, gamma1: float, q: float, a):
    """``(sum gamma^-j a_j)^q <= (gamma/(gamma-gamma1))^q sum gamma1^{-jq} a_j^q``, ``j >= 0``."""
    if not q > 0:
        raise ValueError("q must be positive")
    if not gamma > gamma1 > 1:
        raise ValueError("need gamma > gamma1 > 1")
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("a must be a finite non-negative sequence")
    j = np.arange(a.size, dtype=float)
    lhs = float(np.sum(gamma ** (-j) * a) ** q)
    rhs = float((gamma / (gamma - gamma1)) ** q * np.sum(gamma1 ** (-j * q) * a ** q))
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-12))


@dataclass(frozen=True)
class RecursionCertificate:
    beta: float
    r0: float
    certified: bool
    theta: float
    kappa: float
    hypothesis_holds: bool
    reason: str


def recursion_decay(radii, values, alpha: float, l: float, c: float = 1.0,
                    eps: float = 0.05) -> RecursionCertificate:
    """Certify ``S(r) <= r^-beta`` for ``beta = (1 - 1/l) alpha - eps`` from samples.

    Follows the induction on scales ``r -> r^{1/theta}`` with
    ``theta = alpha/(alpha + l beta)``: if the samples satisfy the bound on a
    base window ``[R0, R0^{1/theta}]`` and ``2c r^-kappa <= 1`` at
    ``R0^{1/theta}`` (``kappa = (theta l - 1) beta``), the recursion propagates
    the bound to all larger radii. The recursion hypothesis itself is tested on
    every sample pair and the conclusion is verified on every sample.
    """
    if not l > 1 or not alpha > 0 or not c > 0:
        raise ValueError("need l > 1, alpha > 0, c > 0")
    r = np.asarray(radii, dtype=float)
    S = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != S.shape or r.size < 4 or np.any(np.diff(r) <= 0) or np.any(r <= 0):
        raise ValueError("need >= 4 increasing positive radii with matching values")
    if np.any(S < 0):
        raise ValueError("values must be non-negative")
    beta = (1.0 - 1.0 / l) * alpha - eps
    if beta <= 0:
        raise ValueError("eps too large for this (alpha, l)")
    theta = alpha / (alpha + l * beta)
    kappa = (theta * l - 1.0) * beta
    if np.all(S == 0):
        return RecursionCertificate(beta, float(r[0]), True, theta, kappa, True, "identically zero")
    tail = S[r.size // 2:]
    if tail[-1] >= S.max() or not tail[-1] < 1:
        raise ValueError("samples do not decay")
    # recursion hypothesis on all sample pairs r1 < r2
    r1, r2 = np.meshgrid(r, r, indexing="ij")
    S1, S2 = np.meshgrid(S, S, indexing="ij")
    upper = r1 < r2
    hyp = bool(np.all(S2[upper] <= c * ((r1[upper] / r2[upper]) ** alpha + S1[upper] ** l) * (1 + 1e-12)))
    ok_pt = S <= r ** (-beta)
    r_need = (2.0 * c) ** (1.0 / kappa)
    r0 = None
    for i in range(r.size):
        R0 = r[i]
        top = R0 ** (1.0 / theta)
        if top < r_need or top > r[-1]:
            continue
        window = (r >= R0) & (r <= top)
        if np.all(ok_pt[window]):
            r0 = float(R0)
            break
    if r0 is None:
        return RecursionCertificate(beta, float("nan"), False, theta, kappa, hyp,
                                    "no base window where the samples satisfy the bound")
    if not hyp:
        return RecursionCertificate(beta, r0, False, theta, kappa, hyp,
                                    "recursion hypothesis fails on the samples")
    post = bool(np.all(ok_pt[r >= r0]))
    return RecursionCertificate(beta, r0, post, theta, kappa, hyp,
                                "certified" if post else "bound violated beyond R0")
