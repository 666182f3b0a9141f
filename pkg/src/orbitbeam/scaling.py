"""Finite-M checks of the asymptotic rate scaling laws.

User density follows lambda = c * M^q. The default prefactor is
c = 1 / (pi H^2), i.e. lambda * pi * H^2 = M^q, the normalisation under which
the interference and gain-event bounds are stated. Slopes are least-squares
fits of the rate against ln M^2 with the smallest M left out.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import (QuadratureConfig, ergodic_rate_multibeam_user1, ergodic_rate_single,
                       ideal_rate_multibeam, ideal_rate_single)
from .beams import BeamGrid, build_grid, phased_gain_cos
from .errors import ArgumentError
from .fading import ShadowedRicianParams
from .geometry import SystemParams
from .link import MonteCarloConfig, monte_carlo_rate
from .pointprocess import nearest_distance_band_prob

log = logging.getLogger(__name__)

SLOPE_TOL = 0.3
RATIO_TOL = 0.15
CSV_COLUMNS = ("M", "lambda", "rate_or_prob", "theory_value", "stderr", "passed")


@dataclass(frozen=True)
class ScalingSweep:
    """Sweep of array sizes with density lambda = c * M^q.

    ``c_lambda=None`` selects c = 1 / (pi H^2). For the single-beam case the
    selection disk holds ``mean_users`` users on average (the nearest user is
    then effectively unconstrained); multibeam sweeps use the nadir footprint.
    """

    m_values: tuple[int, ...] = (16, 32, 64, 128, 256)
    q: float = 2.0
    c_lambda: float | None = None
    ell: float = 0.0
    mean_users: float = 40.0
    exclude_smallest: bool = True

    def __post_init__(self):
        m = tuple(int(v) for v in self.m_values)
        object.__setattr__(self, "m_values", m)
        if any(b <= a for a, b in zip(m, m[1:])):
            raise ArgumentError("m_values must be strictly increasing")
        if min(m) < 2:
            raise ArgumentError("every M must be >= 2")
        if not 1.0 <= self.q <= 2.5:
            raise ArgumentError(f"q must lie in [1, 2.5], got {self.q}")
        if not 0.0 <= self.ell < 1.0:
            raise ArgumentError(f"ell must lie in [0, 1), got {self.ell}")
        if self.c_lambda is not None and not self.c_lambda > 0:
            raise ArgumentError("c_lambda must be > 0")

    def lam(self, m_side: int, sys: SystemParams) -> float:
        c = self.c_lambda if self.c_lambda is not None else 1.0 / (math.pi * sys.altitude_m**2)
        return c * m_side**self.q

    @staticmethod
    def epsilon(m_side: int) -> float:
        return 1.0 / math.log(m_side)

    @property
    def fit_m_values(self) -> tuple[int, ...]:
        return self.m_values[1:] if self.exclude_smallest else self.m_values


def theorem_slope(q: float, ell: float = 0.0) -> float:
    return q - ell - 1.0


def theorem_ratio(q: float, ell: float = 0.0) -> float:
    """Limit of rate / ideal rate: (q - l - 1) / (1 - l) clipped to [0, 1]."""
    return min(1.0, max(0.0, (q - ell - 1.0) / (1.0 - ell)))


@dataclass
class SweepPoint:
    m_side: int
    lam: float
    rate: float
    ideal: float
    stderr: float = float("nan")
    k_beams: int = 1


@dataclass
class SlopeResult:
    sweep: ScalingSweep
    points: list[SweepPoint]
    slope: float
    intercept: float
    residuals: np.ndarray
    theory: float

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.theory) <= SLOPE_TOL

    def eps_band(self, p: SweepPoint) -> tuple[float, float]:
        """Leading-order band 2 (q - l - 1 -/+ eps) ln M, eps = 1 / ln M."""
        e = self.sweep.epsilon(p.m_side)
        lnm = math.log(p.m_side)
        return 2.0 * (self.theory - e) * lnm, 2.0 * (self.theory + e) * lnm

    def rows(self):
        for p in self.points:
            lo, hi = self.eps_band(p)
            yield (p.m_side, p.lam, p.rate, 2.0 * self.theory * math.log(p.m_side),
                   p.stderr, lo <= p.rate <= hi)


@dataclass
class RatioResult:
    sweep: ScalingSweep
    points: list[SweepPoint]
    theory: float

    @property
    def ratios(self) -> np.ndarray:
        return np.array([p.rate / p.ideal for p in self.points])

    @property
    def last(self) -> float:
        return float(self.ratios[-1])

    @property
    def monotone_toward_limit(self) -> bool:
        """Every step moves toward the limit (or stays within the band around it)."""
        r = self.ratios
        dist = np.abs(r - self.theory)
        return bool(np.all((np.diff(dist) <= 0) | (dist[1:] <= RATIO_TOL)))

    @property
    def trend(self) -> str:
        d = np.diff(self.ratios)
        if np.all(d > 0):
            return "increasing"
        if np.all(d < 0):
            return "decreasing"
        return "mixed"

    @property
    def passed(self) -> bool:
        return abs(self.last - self.theory) <= RATIO_TOL and self.monotone_toward_limit

    def rows(self):
        for p, r in zip(self.points, self.ratios):
            yield (p.m_side, p.lam, float(r), self.theory, float("nan"),
                   abs(r - self.theory) <= RATIO_TOL)


def _point_seed(seed: int, m_side: int, q: float, ell: float) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(m_side, round(q * 1000), round(ell * 1000)))
    return int(ss.generate_state(1)[0])


def _single_points(sweep, sys, sr, quad, engine, trials, seed, workers):
    pts = []
    for m in sweep.m_values:
        lam = sweep.lam(m, sys)
        r1 = math.sqrt(sweep.mean_users / (lam * math.pi))
        ideal = ideal_rate_single(sys, sr, lam, m, r1, quad)
        if engine == "analytic":
            pts.append(SweepPoint(m, lam, ergodic_rate_single(sys, sr, lam, m, r1, quad), ideal))
        else:
            nadir = build_grid(m, 1.0, math.inf, sys, max_index=0)
            res = monte_carlo_rate(MonteCarloConfig(sys, sr, lam, nadir, trials,
                                                    _point_seed(seed, m, sweep.q, 0.0),
                                                    r1_m=r1, workers=workers))
            est = res.sum_rate["fixed"]
            pts.append(SweepPoint(m, lam, est.mean, ideal, est.stderr))
    return pts


def multibeam_grid(m_side: int, ell: float, sys: SystemParams) -> BeamGrid:
    """Every beam of spacing 2 / M^l that points at visible ground."""
    return build_grid(m_side, ell, math.inf, sys)


def _multi_points(sweep, sys, sr, quad, engine, trials, seed, workers):
    if sweep.q <= max(sweep.ell + 1.0, 2.0 * sweep.ell):
        log.warning("q=%g is outside the regime q > max(l+1, 2l) (l=%g)", sweep.q, sweep.ell)
    pts = []
    for m in sweep.m_values:
        lam = sweep.lam(m, sys)
        grid = multibeam_grid(m, sweep.ell, sys)
        r1 = grid.beams[0].footprint_radius_m
        ideal = ideal_rate_multibeam(sys, sr, lam, m, grid.k, r1, quad)
        if engine == "analytic":
            rate = ergodic_rate_multibeam_user1(sys, sr, lam, m, grid, quad)
            pts.append(SweepPoint(m, lam, rate, ideal, k_beams=grid.k))
        else:
            res = monte_carlo_rate(MonteCarloConfig(sys, sr, lam, grid, trials,
                                                    _point_seed(seed, m, sweep.q, sweep.ell),
                                                    workers=workers))
            est = res.per_beam["fixed"][0]
            pts.append(SweepPoint(m, lam, est.mean, ideal, est.stderr, grid.k))
    return pts


def sweep_points(sweep, sys, sr, quad, engine, trials, seed, workers):
    if engine not in ("analytic", "mc"):
        raise ArgumentError(f"engine must be 'analytic' or 'mc', got {engine!r}")
    if sweep.ell == 0.0:
        return _single_points(sweep, sys, sr, quad, engine, trials, seed, workers)
    return _multi_points(sweep, sys, sr, quad, engine, trials, seed, workers)


def fit_slope(sweep, pts, theory):
    use = [p for p in pts if p.m_side in sweep.fit_m_values]
    if len(use) < 3:
        raise ArgumentError("slope fit needs at least 3 points after exclusions")
    x = np.log([p.m_side**2 for p in use])
    y = np.array([p.rate for p in use])
    slope, intercept = np.polyfit(x, y, 1)
    return SlopeResult(sweep, pts, float(slope), float(intercept),
                       y - (slope * x + intercept), theory)


def theorem1_slope(sweep: ScalingSweep, sys: SystemParams, sr: ShadowedRicianParams,
                   quad: QuadratureConfig = QuadratureConfig(), engine: str = "analytic",
                   trials: int = 10_000, seed: int = 0, workers: int | None = None
                   ) -> SlopeResult:
    """Single-beam rate against ln M^2; theory slope q - 1."""
    if len(sweep.m_values) < 4:
        raise ArgumentError("need at least 4 values of M")
    if sweep.ell != 0.0:
        raise ArgumentError("theorem1_slope is the single-beam case (ell = 0)")
    pts = sweep_points(sweep, sys, sr, quad, engine, trials, seed, workers)
    return fit_slope(sweep, pts, theorem_slope(sweep.q))


def theorem2_ratio(sweep: ScalingSweep, sys: SystemParams, sr: ShadowedRicianParams,
                   quad: QuadratureConfig = QuadratureConfig(), engine: str = "analytic",
                   trials: int = 10_000, seed: int = 0, workers: int | None = None,
                   points: list[SweepPoint] | None = None) -> RatioResult:
    """Single-beam rate over the beam-matched ideal rate at each M."""
    if sweep.ell != 0.0:
        raise ArgumentError("theorem2_ratio is the single-beam case (ell = 0)")
    pts = points or sweep_points(sweep, sys, sr, quad, engine, trials, seed, workers)
    return RatioResult(sweep, pts, theorem_ratio(sweep.q))


def theorem3_multibeam_slope(sweep: ScalingSweep, sys: SystemParams, sr: ShadowedRicianParams,
                             quad: QuadratureConfig = QuadratureConfig(),
                             engine: str = "analytic", trials: int = 10_000, seed: int = 0,
                             workers: int | None = None) -> SlopeResult:
    """Nadir-beam rate with all grid beams active; theory slope q - l - 1."""
    if sweep.ell == 0.0:
        return theorem1_slope(sweep, sys, sr, quad, engine, trials, seed, workers)
    if len(sweep.m_values) < 4:
        raise ArgumentError("need at least 4 values of M")
    pts = sweep_points(sweep, sys, sr, quad, engine, trials, seed, workers)
    return fit_slope(sweep, pts, theorem_slope(sweep.q, sweep.ell))


def theorem4_sum_ratio(sweep: ScalingSweep, sys: SystemParams, sr: ShadowedRicianParams,
                       quad: QuadratureConfig = QuadratureConfig(), engine: str = "analytic",
                       trials: int = 10_000, seed: int = 0, workers: int | None = None,
                       points: list[SweepPoint] | None = None) -> RatioResult:
    """K * (nadir-beam rate) over K * (interference-free rate at power P / K)."""
    if sweep.ell == 0.0:
        return theorem2_ratio(sweep, sys, sr, quad, engine, trials, seed, workers, points)
    pts = points or sweep_points(sweep, sys, sr, quad, engine, trials, seed, workers)
    return RatioResult(sweep, pts, theorem_ratio(sweep.q, sweep.ell))


# ------------------------------------------------------- interference and gain events


@dataclass(frozen=True)
class ProbabilityCheck:
    m_side: int
    lam: float
    empirical: float
    bound: float
    stderr: float
    trials: int
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.empirical >= self.bound - 3.0 * self.stderr

    def row(self):
        return (self.m_side, self.lam, self.empirical, self.bound, self.stderr, self.passed)


def _nearest_unbounded(lam, n, rng):
    """Nearest point of a plane PPP to the origin: r^2 ~ Exp(1) / (lambda pi), uniform angle."""
    r = np.sqrt(rng.standard_exponential(n) / (lam * math.pi))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return r, phi


def _binomial(hits: np.ndarray):
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / len(hits))


def lemma1_probability(m_side: int, ell: float, s: float, lam: float, sys: SystemParams,
                       trials: int, rng: np.random.Generator) -> ProbabilityCheck:
    """Probability that the (1, 1) neighbour beam leaks less than M^-2s to the nearest user.

    Event: (M^2 / M^(2l)) * gain of beam (1, 1) at the user nearest the nadir
    beam centre is below M^(-2s). Bound: 1 - exp(-lambda pi H^2 / (M^(2l) - 1)).
    """
    if not (0 < ell < 1 and 0 < s < 1 and ell + s < 1):
        raise ArgumentError(f"need l, s in (0, 1) with l + s < 1, got {ell}, {s}")
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    h = sys.altitude_m
    r, phi = _nearest_unbounded(lam, trials, rng)
    sin_t = r / np.sqrt(r * r + h * h)
    pitch = 2.0 / m_side**ell
    gain = phased_gain_cos(m_side, sin_t * np.cos(phi), sin_t * np.sin(phi), pitch, pitch)
    hits = m_side**2 / m_side ** (2 * ell) * gain < m_side ** (-2.0 * s)
    p, se = _binomial(hits)
    bound = -math.expm1(-lam * math.pi * h * h / (m_side ** (2 * ell) - 1.0))
    return ProbabilityCheck(m_side, lam, p, bound, se, trials, {"ell": ell, "s": s})


@dataclass(frozen=True)
class GainWindow:
    r_lo: float
    r_hi: float
    epsilon: float

    @property
    def width(self) -> float:
        return max(0.0, self.r_hi - self.r_lo)

    @property
    def nonempty(self) -> bool:
        return self.r_hi > self.r_lo


def _radius_from(den: float, h: float) -> float:
    return h / math.sqrt(den) if den > 0 else math.inf


def gain_event_window(m_side: int, p: float, phi: float, sys: SystemParams,
                      epsilon: float | None = None) -> GainWindow:
    """Radial window from the sufficient-condition bound on the gain event M^2 * gain > M^2p.

    The bound replaces the pattern by its envelope, so at finite M sidelobe
    nulls inside the window can still miss the event; the comparison is made
    in probability (see :func:`gain_event_check`).

    For phi off the axes, alpha = (pi/4) sqrt(|sin phi cos phi|) and the window
    is H / sqrt(alpha^2 M^(2+e/2) - 1) < r < H / sqrt(4 alpha^2 M^(p+1+e/2) - 1).
    On the axes the constants pi^2/16 and pi^2/4 and the exponent 2p replace them.
    """
    if not 0 < p < 1:
        raise ArgumentError(f"p must lie in (0, 1), got {p}")
    eps = 1.0 / math.log(m_side) if epsilon is None else epsilon
    h = sys.altitude_m
    sc = abs(math.sin(phi) * math.cos(phi))
    if sc < 1e-12:
        lo = _radius_from(math.pi**2 / 16.0 * m_side ** (2 + eps / 2) - 1.0, h)
        hi = _radius_from(math.pi**2 / 4.0 * m_side ** (2 * p + eps / 2) - 1.0, h)
    else:
        a2 = (math.pi / 4.0) ** 2 * sc
        lo = _radius_from(a2 * m_side ** (2 + eps / 2) - 1.0, h)
        hi = _radius_from(4.0 * a2 * m_side ** (p + 1 + eps / 2) - 1.0, h)
    return GainWindow(lo, hi, eps)


def gain_event_check(m_side: int, p: float, phi: float, lam: float, sys: SystemParams,
                     trials: int, rng: np.random.Generator) -> ProbabilityCheck:
    """Empirical P[M^2 gain > M^2p] at fixed azimuth vs the window's band probability."""
    win = gain_event_window(m_side, p, phi, sys)
    h = sys.altitude_m
    r, _ = _nearest_unbounded(lam, trials, rng)
    sin_t = r / np.sqrt(r * r + h * h)
    z = m_side**2 * phased_gain_cos(m_side, sin_t * math.cos(phi), sin_t * math.sin(phi),
                                    0.0, 0.0)
    emp, se = _binomial(z > m_side ** (2.0 * p))
    band = nearest_distance_band_prob(lam, win.r_lo, win.r_hi) if win.nonempty else 0.0
    return ProbabilityCheck(m_side, lam, emp, band, se, trials,
                            {"p": p, "phi": phi, "r_lo": win.r_lo, "r_hi": win.r_hi})
