"""Ergodic rates by nested quadrature over the nearest-user law and the fading MGF.

All rates are in nats. The expectation over fading uses

    E[log(1 + b X / (a X + 1))] = int_0^inf (MGF(tau a) - MGF(tau (a + b))) / tau * e^-tau dtau

(a = 0 gives E[log(1 + b X)]). At high SNR that integrand changes on the
scale tau ~ 1/(a + b), far below the smallest Gauss-Laguerre node, so the
tau axis is split at 1: [tau_lo, 1] is integrated on a log scale with
composite Gauss-Legendre panels and [1, inf) with Gauss-Laguerre. Below
tau_lo = 1e-9 / max(a + b) the integrand equals its tau -> 0 limit
b E[X] to first order and is added in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .beams import BeamGrid, phased_gain_cos
from .errors import ArgumentError, NumericFailure
from .fading import ShadowedRicianParams, sr_mgf
from .geometry import SystemParams, link_gain
from .specfun import gauss_laguerre, gauss_legendre, legendre_panels

_HEAD_PANEL_WIDTH = 2.0  # in log(tau)
_HEAD_PANEL_NODES = 8
_REFINE_RTOL = 1e-3


@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts for the nested integration.

    n_r is the Gauss-Legendre order per radial panel; the radial axis is split
    at every pattern null of the nadir beam and at a few quantiles of the
    nearest-distance law. ``r_tail`` truncates the radial integral where the
    expected user count lambda*pi*r^2 reaches it (tail mass e^-r_tail).
    """

    n_tau: int = 48
    n_phi: int = 32
    n_r: int = 24
    phi_symmetry_fold: int = 8
    r_tail: float = 40.0
    max_panels: int = 2000

    def __post_init__(self):
        if min(self.n_tau, self.n_phi, self.n_r) < 4:
            raise ArgumentError("all node counts must be >= 4")
        if self.phi_symmetry_fold not in (1, 8):
            raise ArgumentError("phi_symmetry_fold must be 1 or 8")

    def refined(self) -> "QuadratureConfig":
        return replace(self, n_tau=min(2 * self.n_tau, 128), n_phi=2 * self.n_phi,
                       n_r=min(2 * self.n_r, 256))


def expected_log_rate(sr: ShadowedRicianParams, interference, signal,
                      n_tau: int = 48, head_nodes: int = _HEAD_PANEL_NODES):
    """E[log(1 + b X / (a X + 1))] for arrays a (interference) and b (signal)."""
    a = np.asarray(interference, dtype=float)
    b = np.asarray(signal, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    total = a + b
    peak = float(np.max(total)) if total.size else 0.0
    if peak <= 0.0:
        return np.zeros(a.shape)
    tau_lo = min(1e-3, 1e-9 / peak)
    u_lo = math.log(tau_lo)
    n_pan = max(1, math.ceil(-u_lo / _HEAD_PANEL_WIDTH))
    u, wu = legendre_panels(np.linspace(u_lo, 0.0, n_pan + 1), head_nodes)
    tau_head = np.exp(u)
    lag = gauss_laguerre(n_tau)
    tau_tail = 1.0 + lag.nodes
    tau = np.concatenate([tau_head, tau_tail])
    # head: d(tau)/tau = du, weight e^-tau; tail: Laguerre weights carry e^-(tau-1)
    w = np.concatenate([wu * np.exp(-tau_head), lag.weights * math.exp(-1.0) / tau_tail])

    flat_a = a.reshape(-1, 1)
    flat_b = b.reshape(-1, 1)
    diff = sr_mgf(sr, tau * flat_a) - sr_mgf(sr, tau * (flat_a + flat_b))
    out = diff @ w + flat_b[:, 0] * sr.mean_power * tau_lo
    return out.reshape(a.shape)


def _null_radii(m_side, cphi, sphi, r_max, altitude):
    sines = []
    for c in (abs(cphi), abs(sphi)):
        if c > 1e-12:
            kmax = int(m_side * c / 2.0) + 1
            s = 2.0 * np.arange(1, kmax + 1) / (m_side * c)
            sines.append(s[s < 1.0])
    if not sines:
        return np.empty(0)
    s = np.concatenate(sines)
    r = altitude * s / np.sqrt(1.0 - s * s)
    return r[r < r_max]


def _radial_breaks(lam, r_max, nulls, max_panels):
    dens = np.sqrt(np.array([0.5, 2.0, 6.0, 15.0]) / (lam * math.pi))
    pts = np.concatenate([[0.0, r_max], nulls, dens[dens < r_max]])
    pts = np.unique(pts)
    if len(pts) - 1 > max_panels:
        raise NumericFailure(f"radial panel count {len(pts) - 1} exceeds {max_panels}")
    return pts


def _phi_rule(quad: QuadratureConfig, fold: int):
    """phi nodes and weights normalised so the weights average over [0, 2 pi)."""
    if fold == 8:
        rule = gauss_legendre(quad.n_phi, 0.0, math.pi / 4.0)
        return rule.nodes, rule.weights / (math.pi / 4.0)
    edges = np.linspace(0.0, 2.0 * math.pi, 9)
    nodes, weights = legendre_panels(edges, quad.n_phi)
    return nodes, weights / (2.0 * math.pi)


def _check_density(lam, radius):
    if not lam * math.pi * radius**2 > 1e-12:
        raise ArgumentError("lambda * pi * R^2 must exceed 1e-12")


def _integrate_plane(lam, r1, sys, m_side, quad, fold, point_rate):
    """Average of point_rate(r, ux, uy) over the nearest user (0 where the disk is empty)."""
    h = sys.altitude_m
    r_max = min(r1, math.sqrt(quad.r_tail / (lam * math.pi)))
    phis, wphi = _phi_rule(quad, fold)
    total = 0.0
    for phi, wp in zip(phis, wphi):
        c, s = math.cos(phi), math.sin(phi)
        breaks = _radial_breaks(lam, r_max, _null_radii(m_side, c, s, r_max, h),
                                quad.max_panels)
        r, wr = legendre_panels(breaks, quad.n_r)
        dens = 2.0 * lam * math.pi * r * np.exp(-lam * math.pi * r * r)
        slant = np.sqrt(r * r + h * h)
        rate = point_rate(r, r * c / slant, r * s / slant)
        total += wp * float(np.dot(wr * dens, rate))
    return total


def _with_refinement(compute, quad, check):
    v1 = compute(quad)
    if not check:
        return v1
    v2 = compute(quad.refined())
    if abs(v2 - v1) > _REFINE_RTOL * max(abs(v2), 1e-300):
        raise NumericFailure(
            f"quadrature refinement changed the rate from {v1!r} to {v2!r}", partial=(v1, v2))
    return v2


def ergodic_rate_single(sys: SystemParams, sr: ShadowedRicianParams, lam: float,
                        m_side: int, r1: float, quad: QuadratureConfig = QuadratureConfig(),
                        check: bool = True) -> float:
    """Single nadir beam, nearest user within r1, full power."""
    _check_density(lam, r1)

    def point_rate_factory(q):
        def point_rate(r, ux, uy):
            snr = link_gain(r, sys) * m_side**2 * phased_gain_cos(m_side, ux, uy, 0.0, 0.0)
            return expected_log_rate(sr, 0.0, snr, q.n_tau)
        return point_rate

    def compute(q):
        return _integrate_plane(lam, r1, sys, m_side, q, q.phi_symmetry_fold,
                                point_rate_factory(q))

    return _with_refinement(compute, quad, check)


def ergodic_rate_multibeam_user1(sys: SystemParams, sr: ShadowedRicianParams, lam: float,
                                 m_side: int, grid: BeamGrid,
                                 quad: QuadratureConfig = QuadratureConfig(),
                                 interferers: str = "all", power_beams: int | None = None,
                                 r1: float | None = None, check: bool = True) -> float:
    """Rate of the nadir beam's user with every other grid beam interfering.

    Per-beam power is P / K with K = ``power_beams`` (default: grid size).
    ``interferers`` is "all" or "first-ring" (max(|n|, |m|) == 1).
    """
    nadir = grid.beams[0]
    if (nadir.index_n, nadir.index_m) != (0, 0):
        raise ArgumentError("grid has no nadir beam in first position")
    if r1 is None:
        r1 = nadir.footprint_radius_m
    _check_density(lam, r1)
    k_power = grid.k if power_beams is None else power_beams
    others = grid.beams[1:]
    if interferers == "first-ring":
        others = [b for b in others if max(abs(b.index_n), abs(b.index_m)) == 1]
    elif interferers != "all":
        raise ArgumentError(f"unknown interferer set {interferers!r}")
    icos = np.array([[b.cos_x, b.cos_y] for b in others]).reshape(-1, 2)
    fold = quad.phi_symmetry_fold if grid.is_symmetric else 1

    def point_rate_factory(q):
        def point_rate(r, ux, uy):
            base = link_gain(r, sys) / k_power * m_side**2
            sig = base * phased_gain_cos(m_side, ux, uy, 0.0, 0.0)
            if len(icos):
                g = phased_gain_cos(m_side, ux[:, None], uy[:, None], icos[:, 0], icos[:, 1])
                intf = base * g.sum(axis=1)
            else:
                intf = np.zeros_like(sig)
            return expected_log_rate(sr, intf, sig, q.n_tau)
        return point_rate

    def compute(q):
        return _integrate_plane(lam, r1, sys, m_side, q, fold, point_rate_factory(q))

    return _with_refinement(compute, quad, check)


def _radial_only(lam, r1, quad, fn):
    r_max = min(r1, math.sqrt(quad.r_tail / (lam * math.pi)))
    breaks = _radial_breaks(lam, r_max, np.empty(0), quad.max_panels)
    r, wr = legendre_panels(breaks, quad.n_r)
    dens = 2.0 * lam * math.pi * r * np.exp(-lam * math.pi * r * r)
    return float(np.dot(wr * dens, fn(r)))


def ideal_rate_single(sys: SystemParams, sr: ShadowedRicianParams, lam: float, m_side: int,
                      r1: float, quad: QuadratureConfig = QuadratureConfig(),
                      power_beams: int = 1, check: bool = True) -> float:
    """Rate with the beam gain pinned to 1 (beam steered onto the user)."""
    _check_density(lam, r1)
    if power_beams < 1:
        raise ArgumentError("power_beams must be >= 1")

    def compute(q):
        return _radial_only(lam, r1, q, lambda r: expected_log_rate(
            sr, 0.0, link_gain(r, sys) / power_beams * m_side**2, q.n_tau))

    return _with_refinement(compute, quad, check)


def ideal_rate_multibeam(sys: SystemParams, sr: ShadowedRicianParams, lam: float, m_side: int,
                         k_beams: int, r1: float, quad: QuadratureConfig = QuadratureConfig(),
                         check: bool = True) -> float:
    """Interference-free, beam-matched rate at per-beam power P / K."""
    return ideal_rate_single(sys, sr, lam, m_side, r1, quad, power_beams=k_beams, check=check)
