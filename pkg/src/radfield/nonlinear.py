"""Radial semilinear waves in R^3, scattering profiles and tail diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exterior import DecayScan, critical_exponent, exterior_y_zonal, fit_decay
from .freewave import RadialPair, origin_slope, radial_profile_values
from .grids import LineGrid, SphereGrid, sphere_quadrature
from .sobolev import (RadiationProfile, hdot_norm_cyl, hdot_norm_line, indicator_minus,
                      indicator_plus, indicator_window)


@dataclass(frozen=True)
class NonlinearConfig:
    """Power ``p`` and nonlinearity ``F(u)`` of ``u_tt - Lap u = F(u)``.

    ``kind`` is ``defocusing`` (``-|u|^{p-1} u``), ``focusing`` (``+|u|^{p-1} u``)
    or ``custom`` (``F`` supplied with growth constants ``C1``, ``C2``).
    ``scale`` multiplies the nonlinearity.
    """

    p: float = 4.0
    kind: str = "defocusing"
    F: Callable | None = None
    C1: float = 1.0
    C2: float = 1.0
    scale: float = 1.0
    s_p: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "s_p", critical_exponent(self.p))
        if self.kind not in ("defocusing", "focusing", "custom"):
            raise ValueError("kind must be defocusing, focusing or custom")
        if self.kind == "custom" and self.F is None:
            raise ValueError("custom nonlinearity needs F")
        if not (self.C1 > 0 and self.C2 > 0):
            raise ValueError("growth constants must be positive")

    def nonlinearity(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "custom":
            return self.scale * self.F(u)
        sign = -1.0 if self.kind == "defocusing" else 1.0
        return self.scale * sign * np.abs(u) ** (self.p - 1.0) * u

    def potential(self, u: np.ndarray) -> np.ndarray:
        """``G(u)`` with ``-G'(u) = F(u)`` for the power nonlinearities (0 for custom)."""
        if self.kind == "custom":
            return np.zeros_like(u)
        sign = 1.0 if self.kind == "defocusing" else -1.0
        return self.scale * sign * np.abs(u) ** (self.p + 1.0) / (self.p + 1.0)


@dataclass(frozen=True, eq=False)
class RadialTrajectory:
    """Saved states ``v = r u`` and ``v_t`` at ``times`` on ``r_i = i dr``."""

    dr: float
    times: np.ndarray
    v: np.ndarray
    vt: np.ndarray
    energy: np.ndarray
    blowup: bool = False
    blowup_time: float | None = None

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(self.v.shape[1])

    def state(self, k: int) -> RadialPair:
        return RadialPair.from_v(self.dr, self.v[k], self.vt[k])

    def u(self, k: int) -> np.ndarray:
        return self.state(k).u0

    def index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} not saved")
        return k


def _u_from_v(v, r, dr):
    u = np.empty_like(v)
    u[1:] = v[1:] / r[1:]
    u[0] = origin_slope(v, dr)
    return u


def discrete_energy(v_prev, v_next, r, dr, cfg: NonlinearConfig) -> float:
    """Staggered energy at the half step between two time levels.

    ``int v_t^2 + v_r^2 dr + 2 int r^2 G(u) dr`` with ``v_t`` the difference quotient,
    ``v_r`` averaged over the two levels and the potential averaged likewise.
    """
    vt = (v_next - v_prev) / dr
    vr = 0.5 * (np.diff(v_prev) + np.diff(v_next)) / dr
    kin = np.sum(vt[1:-1] ** 2) * dr + 0.5 * (vt[0] ** 2 + vt[-1] ** 2) * dr
    grad = np.sum(vr ** 2) * dr
    pot_a = cfg.potential(_u_from_v(v_prev, r, dr)) * r ** 2
    pot_b = cfg.potential(_u_from_v(v_next, r, dr)) * r ** 2
    pot = np.trapezoid(0.5 * (pot_a + pot_b), dx=dr)
    return float(kin + grad + 2.0 * pot)


def solve_radial(p0: RadialPair, cfg: NonlinearConfig, T: float, save_every: int = 1,
                 forcing: Callable | None = None, ceiling: float = 1e6,
                 save_times=None) -> RadialTrajectory:
    """Leapfrog on the characteristic lattice for ``v_tt - v_rr = r F(v/r)`` (``dt = dr``).

    At unit Courant number the free part is exact on the lattice; the source
    makes the scheme second order. ``forcing(r, t)`` adds an extra source to the
    ``v`` equation (used for manufactured solutions). The outer boundary holds
    ``v = 0``, so ``r_max`` must exceed the data support plus ``T``. The run stops
    with ``blowup`` set once ``max |u|`` exceeds ``ceiling``.
    """
    dr = p0.dr
    r = p0.r
    supp = p0.support_radius()
    if supp + T > p0.r_max - 2 * dr:
        raise ValueError(f"r_max {p0.r_max:g} too small: need at least {supp + T + 2 * dr:g}")
    n_steps = int(round(T / dr))
    if abs(n_steps * dr - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a multiple of dr")

    def source(v, t):
        s = r * cfg.nonlinearity(_u_from_v(v, r, dr))
        if forcing is not None:
            s = s + forcing(r, t)
        return s

    def level_ok(v):
        return np.all(np.isfinite(v)) and np.max(np.abs(_u_from_v(v, r, dr))) <= ceiling

    v0 = p0.v0.copy()
    v1d = p0.v1
    v0[0] = 0.0
    # first step: exact free part (odd extension), Simpson for the v_t integral
    ext0 = np.concatenate([[-v0[1]], v0, [0.0]])
    ext1 = np.concatenate([[-v1d[1]], v1d, [0.0]])
    vnew = 0.5 * (ext0[2:] + ext0[:-2])
    vnew += (dr / 6.0) * (ext1[:-2] + 4.0 * ext1[1:-1] + ext1[2:])
    vnew += 0.5 * dr * dr * source(v0, 0.0)
    vnew[0] = 0.0
    vnew[-1] = 0.0

    if save_times is not None:
        save_steps = sorted({int(round(t / dr)) for t in save_times})
    else:
        save_steps = list(range(0, n_steps + 1, save_every))
        if save_steps[-1] != n_steps:
            save_steps.append(n_steps)
    save_set = set(save_steps)
    times, vs, vts, energies = [], [], [], []
    prev, cur = v0, vnew
    # the n=0 state is known exactly
    if 0 in save_set:
        times.append(0.0)
        vs.append(v0.copy())
        vts.append(v1d.copy())
        energies.append(discrete_energy(v0, vnew, r, dr, cfg))
    blow, blow_t = False, None
    for n in range(1, n_steps + 1):
        if not level_ok(cur):
            blow, blow_t = True, n * dr
            break
        nxt = np.empty_like(cur)
        nxt[1:-1] = cur[2:] + cur[:-2] - prev[1:-1] + dr * dr * source(cur, n * dr)[1:-1]
        nxt[0] = 0.0
        nxt[-1] = 0.0
        if n in save_set:
            times.append(n * dr)
            vs.append(cur.copy())
            vts.append((nxt - prev) / (2.0 * dr))
            energies.append(discrete_energy(cur, nxt, r, dr, cfg))
        prev, cur = cur, nxt
    return RadialTrajectory(dr, np.array(times), np.array(vs), np.array(vts), np.array(energies),
                            blow, blow_t)


def manufactured_forcing(cfg: NonlinearConfig):
    """Source making ``w = r exp(-t^2 - r^2)`` an exact solution, and ``w`` itself."""

    def w(r, t):
        return r * np.exp(-t * t - r * r)

    def forcing(r, t):
        e = np.exp(-t * t - r * r)
        w_tt = r * (4 * t * t - 2) * e
        w_rr = (4 * r ** 3 - 6 * r) * e
        return w_tt - w_rr - r * cfg.nonlinearity(e)

    return w, forcing


# ----------------------------------------------------- scattering profile ---


def extract_scattering_profile(traj: RadialTrajectory, T: float, line: LineGrid,
                               sphere: SphereGrid | None = None) -> RadiationProfile:
    """``G+`` of the linear asymptote from the state at time ``T``, un-shifted by ``T``."""
    state = traj.state(traj.index(T))
    sphere = sphere or sphere_quadrature(4, 8)
    g = radial_profile_values(state, line.s() + T, "plus")
    return RadiationProfile.from_zonal(line, sphere, g, "plus")


# ---------------------------------------------------------------- S(r) ---


def minus_profile(p0: RadialPair, line: LineGrid, sphere: SphereGrid | None = None) -> RadiationProfile:
    sphere = sphere or sphere_quadrature(4, 8)
    return RadiationProfile.from_zonal(line, sphere, radial_profile_values(p0, line.s(), "minus"),
                                       "minus")


def s_of_r(p0, cfg: NonlinearConfig, radii, line: LineGrid | None = None,
           t_max: float | None = None, end_rel: float = 1e-4) -> DecayScan:
    """``S(r)``: exterior Y norm of the free wave with data ``p0`` for each radius.

    ``p0`` is a :class:`RadialPair` or a zonal negative-direction profile.
    The profile must have decayed below ``end_rel`` of its peak at the ends of
    the line grid; otherwise the call is rejected with the grid extent that
    was too short.
    """
    radii = np.asarray(radii, dtype=float)
    if isinstance(p0, RadiationProfile):
        G = p0
    else:
        line = line or LineGrid(2 ** int(np.ceil(np.log2(8 * p0.r_max / p0.dr))), 2 * p0.r_max)
        if line.s_max < p0.r_max:
            raise ValueError(f"line grid too short: need S_max >= {p0.r_max:g}")
        G = minus_profile(p0, line)
    col = np.abs(G.column())
    if col.max() > 0 and max(col[:4].max(), col[-4:].max()) > end_rel * col.max():
        raise ValueError(f"profile reaches the line ends: need S_max > {G.line.s_max:g}")
    if col.max() == 0:
        return fit_decay(radii, np.zeros_like(radii))
    vals = np.array([exterior_y_zonal(G, cfg.p, float(R), t_max) for R in radii])
    return fit_decay(radii, vals)


# ------------------------------------------------------- tail pieces ---


@dataclass(frozen=True, eq=False)
class TailDecomposition:
    """``G = G0 + sum_k (G_k^+ + G_k^-)`` on dyadic shells ``2^{k-1} R1 < |s| <= 2^k R1``.

    ``G0`` keeps ``|s| <= R1``; shells are half-open so the pieces partition
    the s-nodes exactly.
    """

    r1: float
    g0: RadiationProfile
    plus: list
    minus: list
    norms0: float
    norms_plus: np.ndarray
    norms_minus: np.ndarray
    exponent: float

    def reconstruct(self) -> np.ndarray:
        total = np.array(self.g0.values, dtype=float)
        for piece in self.plus + self.minus:
            total = total + piece.values
        return total


def _window(G: RadiationProfile, mask: np.ndarray) -> RadiationProfile:
    return G._map(lambda v: v * mask[:, None])


def tail_decompose(G: RadiationProfile, r1: float, exponent: float) -> TailDecomposition:
    """Split ``G`` and record each piece's ``H^exponent`` norm (``exponent = s_p - 1`` usually)."""
    s = G.line.s()
    if not 0 < r1 < G.line.s_max:
        raise ValueError("R1 must lie inside the s-grid")
    K = max(int(np.ceil(np.log2(G.line.s_max / r1))), 0)
    g0 = _window(G, (np.abs(s) <= r1).astype(float))
    plus, minus = [], []
    for k in range(1, K + 1):
        lo, hi = 2.0 ** (k - 1) * r1, 2.0 ** k * r1
        plus.append(_window(G, ((s > lo) & (s <= hi)).astype(float)))
        minus.append(_window(G, ((s < -lo) & (s >= -hi)).astype(float)))
    nrm = lambda P: hdot_norm_cyl(P, exponent)  # noqa: E731
    return TailDecomposition(r1, g0, plus, minus, nrm(g0), np.array([nrm(P) for P in plus]),
                             np.array([nrm(P) for P in minus]), exponent)


def tail_exponent(G: RadiationProfile, cfg: NonlinearConfig, radii, side: str = "both",
                  floor_rel: float = 1e-10) -> DecayScan:
    """``||P_r^+- G||`` in ``H^{s_p - 1}`` per radius with a power fit.

    Values below ``floor_rel`` times ``||G||`` are reported but excluded from
    the fit (``extra['below_floor']``).
    """
    radii = np.asarray(radii, dtype=float)
    e = cfg.s_p - 1.0
    vals = []
    s = G.line.s()
    for R in radii:
        chi = np.zeros_like(s)
        if side in ("plus", "both"):
            chi += indicator_plus(s, R)
        if side in ("minus", "both"):
            chi += indicator_minus(s, R)
        vals.append(hdot_norm_cyl(_window(G, chi), e))
    vals = np.array(vals)
    floor = floor_rel * hdot_norm_cyl(G, e)
    below = vals <= floor
    keep = ~below
    extra = {"below_floor": below, "all_values": vals}
    if keep.sum() >= 4:
        sc = fit_decay(radii[keep], vals[keep], extra=extra)
        return DecayScan(radii, vals, sc.exponent, sc.intercept, sc.residual, extra)
    return DecayScan(radii, vals, float("nan"), float("nan"), float("nan"), extra)


# ------------------------------------------------ embedding and gain ---


def embedding_check(line: LineGrid, f: np.ndarray, a: float, b: float, beta: float, p: float):
    """``(||P_{a,b} f||_{H^{beta-1}}, (b-a)^{s_p-beta} ||f||_{H^{s_p-1}}, ratio)`` on the line."""
    sp = critical_exponent(p)
    if not 0.5 < beta < sp:
        raise ValueError(f"beta must lie in (1/2, s_p = {sp:g})")
    f = np.asarray(f, dtype=float)
    chi = indicator_window(line.s(), a, b)
    lhs = float(hdot_norm_line(line, f * chi, beta - 1.0))
    rhs = float((b - a) ** (sp - beta) * hdot_norm_line(line, f, sp - 1.0))
    return lhs, rhs, (lhs / rhs if rhs > 0 else 0.0)


@dataclass(frozen=True)
class RegularityGain:
    finite: bool
    norm_estimate: float
    series_ratio: float
    shell_norms: np.ndarray
    bound_terms: np.ndarray


def regularity_gain(G: RadiationProfile, cfg: NonlinearConfig, beta: float, certificate: DecayScan,
                    r1: float) -> RegularityGain:
    """Sum ``||G0|| + sum_k ||G_k^+-||`` in ``H^{beta - 1}`` over the dyadic tail decomposition.

    ``certificate`` is the :func:`tail_exponent` scan. Shell norms are
    computed directly; ``bound_terms`` holds the embedding bound
    ``(2^k R1)^{s_p - beta} ||P^+-_{2^{k-1}R1} G||``. The series counts as finite
    when the measured ratio of consecutive shell norms (geometric mean over
    the populated shells) is below 1.
    """
    if certificate is None or not np.isfinite(certificate.exponent):
        raise ValueError("a tail exponent certificate is required")
    sp = cfg.s_p
    if not 0.5 < beta < sp:
        raise ValueError(f"beta must lie in (1/2, s_p = {sp:g})")
    dec = tail_decompose(G, r1, beta - 1.0)
    shells = dec.norms_plus + dec.norms_minus
    s = G.line.s()
    bounds = []
    for k in range(1, len(dec.plus) + 1):
        R = 2.0 ** (k - 1) * r1
        chi = indicator_plus(s, R) + indicator_minus(s, R)
        bounds.append((2.0 ** k * r1) ** (sp - beta) * hdot_norm_cyl(_window(G, chi), sp - 1.0))
    bounds = np.array(bounds)
    total = dec.norms0 + shells.sum()
    pop = shells > 1e-12 * max(shells.max(initial=0.0), dec.norms0, 1e-300)
    # shells that reach the s-grid end are truncated; leave the last one out
    idx = np.nonzero(pop)[0]
    idx = idx[idx < len(shells) - 1]
    if idx.size >= 2:
        ratio = float(np.exp(np.polyfit(idx, np.log(shells[idx]), 1)[0]))
    else:
        ratio = 0.0
    return RegularityGain(bool(ratio < 1.0), float(total), ratio, shells, bounds)
