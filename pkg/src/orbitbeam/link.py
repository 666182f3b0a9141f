"""Instantaneous SINR, Monte Carlo ergodic rates and MRT/ZF baselines.

Rates are in nats. The Monte Carlo engine draws trials in fixed-size blocks;
block ``b`` uses the random stream ``SeedSequence(seed, spawn_key=(b,))``,
so results do not depend on how blocks are spread over worker processes.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .beams import BeamGrid, dirichlet_complex, phased_gain_cos
from .errors import ArgumentError, ConfigurationError, ZFUnavailable
from .fading import ShadowedRicianParams, sr_sample_complex
from .geometry import (GroundPoint, SystemParams, direction_cosines_xy,
                       noise_normalized_power, path_loss)
from .pointprocess import nearest_offsets_batch

log = logging.getLogger(__name__)

PRECODERS = ("fixed", "mrt", "zf")
ZF_COND_LIMIT = 1e12
BLOCK_TRIALS = 1000
_CHUNK_ENTRIES = 2_000_000  # trials * K^2 per vectorised chunk
_DROP_POINTS = 2_000_000


@dataclass(frozen=True)
class RateEstimate:
    mean: float
    stderr: float
    trials: int

    def in_base(self, base: str) -> "RateEstimate":
        """Convert from nats to base ``"e"`` or ``"2"``."""
        f = log_base_factor(base)
        return RateEstimate(self.mean * f, self.stderr * f, self.trials)


def log_base_factor(base: str) -> float:
    if base == "e":
        return 1.0
    if base == "2":
        return 1.0 / math.log(2.0)
    raise ArgumentError(f"log base must be 'e' or '2', got {base!r}")


@dataclass(frozen=True)
class LinkSample:
    """One drop: selected user per beam, its fading and the beam-gain matrix.

    ``gain[i, k]`` is the normalised gain of beam i at user k; rows and
    columns of absent users are zero.
    """

    users: tuple
    fading: np.ndarray
    path_loss: np.ndarray
    gain: np.ndarray
    cos_xy: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return np.array([u is not None for u in self.users])

    @classmethod
    def build(cls, grid: BeamGrid, users, fading, sys: SystemParams) -> "LinkSample":
        if len(users) != grid.k:
            raise ArgumentError(f"expected {grid.k} user slots, got {len(users)}")
        fading = np.asarray(fading, dtype=complex).reshape(grid.k)
        xy = np.array([[u.x_m, u.y_m] if u is not None else [np.nan, np.nan] for u in users])
        act = ~np.isnan(xy[:, 0])
        ux, uy = direction_cosines_xy(xy[:, 0], xy[:, 1], sys)
        loss = np.zeros(grid.k)
        d = np.sqrt(xy[act, 0] ** 2 + xy[act, 1] ** 2 + sys.altitude_m**2)
        loss[act] = path_loss(d, sys)
        cxy = grid.cos_xy
        gain = phased_gain_cos(grid.m_side, ux[None, :], uy[None, :],
                               cxy[:, 0:1], cxy[:, 1:2])
        gain = np.where(act[None, :] & act[:, None], gain, 0.0)
        return cls(tuple(users), np.where(act, fading, 0.0), loss, gain,
                   np.column_stack([np.where(act, ux, np.nan), np.where(act, uy, np.nan)]))


def snr_single(sys: SystemParams, beam_cos: tuple[float, float], user: GroundPoint,
               g: complex, m_side: int) -> float:
    """Full-power SNR of ``user`` served by the beam steered to ``beam_cos``."""
    d = math.sqrt(user.x_m**2 + user.y_m**2 + sys.altitude_m**2)
    ux, uy = user.x_m / d, user.y_m / d
    gain = float(phased_gain_cos(m_side, ux, uy, beam_cos[0], beam_cos[1]))
    return (noise_normalized_power(sys) * sys.antenna_gain * path_loss(d, sys)
            * abs(g) ** 2 * m_side**2 * gain)


def sinr_fixed_beam(sys: SystemParams, grid: BeamGrid, sample: LinkSample, k: int) -> float:
    """SINR of beam k's user with every other active beam interfering at power P / K."""
    if sample.users[k] is None:
        raise ArgumentError(f"beam {k} has no selected user")
    rho = noise_normalized_power(sys) / grid.k * sys.antenna_gain * sample.path_loss[k]
    sig = rho * abs(sample.fading[k]) ** 2 * grid.m_side**2
    act = sample.active.copy()
    act[k] = False
    intf = float(np.sum(sample.gain[act, k]))
    return sig * sample.gain[k, k] / (sig * intf + 1.0)


def gram_matrix(grid: BeamGrid, sample: LinkSample, sys: SystemParams):
    """Closed-form channel Gram ``G[k, j] = h_k^H h_j`` over active users.

    ``h_k = M sqrt(L_k) g_k v(theta_k)`` with unit-norm UPA steering vectors.
    Returns ``(G, active_indices)``.
    """
    idx = np.flatnonzero(sample.active)
    if len(idx) == 0:
        raise ArgumentError("gram_matrix needs at least one active user")
    g = sample.fading[idx]
    loss = sample.path_loss[idx]
    ux, uy = sample.cos_xy[idx, 0], sample.cos_xy[idx, 1]
    m = grid.m_side
    dx = dirichlet_complex(m, ux[:, None] - ux[None, :])
    dy = dirichlet_complex(m, uy[:, None] - uy[None, :])
    amp = np.sqrt(loss) * g
    gm = m**2 * np.conj(amp)[:, None] * amp[None, :] * dx * dy
    return gm, idx


def _mrt_sinr(gram: np.ndarray, rho: float) -> np.ndarray:
    """Batched MRT SINR for Grams of shape (..., K, K); zero diagonals give 0."""
    diag = np.real(np.diagonal(gram, axis1=-2, axis2=-1))
    safe = np.where(diag > 0, diag, 1.0)
    cross = np.abs(gram) ** 2 / safe[..., None, :]
    intf = cross.sum(axis=-1) - np.where(diag > 0, diag, 0.0)
    return np.where(diag > 0, rho * diag / (rho * np.maximum(intf, 0.0) + 1.0), 0.0)


def _zf_sinr(gram: np.ndarray, rho: float):
    """Batched ZF SINR, ok-mask and nulling residual for Grams of shape (n, K, K)."""
    n, k, _ = gram.shape
    cond = np.linalg.cond(gram)
    ok = np.isfinite(cond) & (cond < ZF_COND_LIMIT)
    sinr = np.zeros((n, k))
    resid = np.zeros(n)
    if ok.any():
        gs = gram[ok]
        try:
            chol = np.linalg.cholesky(gs)
            linv = np.linalg.solve(chol, np.broadcast_to(np.eye(k), gs.shape))
            inv = np.conj(np.swapaxes(linv, -1, -2)) @ linv
        except np.linalg.LinAlgError:
            inv = np.linalg.inv(gs)
        inv_diag = np.real(np.diagonal(inv, axis1=-2, axis2=-1))
        sinr[ok] = rho / inv_diag
        # effective channel H^H W up to column scaling; off-diagonals are the leakage
        eff = gs @ inv
        off = np.abs(eff - np.eye(k) * np.diagonal(eff, axis1=-2, axis2=-1)[..., None, :])
        resid[ok] = off.max(axis=(-2, -1)) / np.abs(np.diagonal(eff, axis1=-2, axis2=-1)).min(-1)
    return sinr, ok, resid


def precoder_rates_mrt_zf(gram: np.ndarray, sys: SystemParams, k_total: int) -> dict:
    """Per-user SINR of MRT and ZF with power P / K per beam and unit noise.

    Raises :class:`ZFUnavailable` when the Gram's condition number is at or
    above 1e12.
    """
    if k_total < 1:
        raise ArgumentError("k_total must be >= 1")
    rho = noise_normalized_power(sys) / k_total * sys.antenna_gain
    gram = np.asarray(gram, dtype=complex)
    mrt = _mrt_sinr(gram, rho)
    zf, ok, _ = _zf_sinr(gram[None], rho)
    if not ok[0]:
        raise ZFUnavailable(f"Gram condition number {np.linalg.cond(gram):.3e} >= {ZF_COND_LIMIT:g}")
    return {"mrt": mrt, "zf": zf[0]}


# ---------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class MonteCarloConfig:
    sys: SystemParams
    sr: ShadowedRicianParams
    lam: float
    grid: BeamGrid
    trials: int
    seed: int
    precoders: tuple[str, ...] = ("fixed",)
    r1_m: float | None = None
    workers: int | None = None
    trace_path: str | None = None
    trace_preamble: tuple[str, ...] = ()

    def __post_init__(self):
        if self.trials < 1:
            raise ArgumentError("trials must be >= 1")
        if not self.lam > 0:
            raise ArgumentError("lambda must be > 0")
        if self.grid.k < 1:
            raise ConfigurationError("beam grid is empty")
        bad = [p for p in self.precoders if p not in PRECODERS]
        if bad or not self.precoders:
            raise ArgumentError(f"precoders must be drawn from {PRECODERS}, got {self.precoders}")
        if self.r1_m is not None and not self.r1_m > 0:
            raise ArgumentError("r1_m must be > 0")

    @property
    def selection_radii(self) -> np.ndarray:
        if self.r1_m is None:
            return self.grid.footprint_radii
        return np.full(self.grid.k, self.r1_m)


@dataclass
class _Moments:
    """Running count / mean / M2 (merged in a fixed order)."""

    n: np.ndarray
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, x: np.ndarray, mask: np.ndarray | None = None) -> "_Moments":
        if mask is None:
            mask = np.ones(x.shape, dtype=bool)
        n = mask.sum(axis=0).astype(float)
        s = np.where(mask, x, 0.0).sum(axis=0)
        mean = np.divide(s, n, out=np.zeros_like(s), where=n > 0)
        m2 = np.where(mask, (x - mean) ** 2, 0.0).sum(axis=0)
        return cls(n, mean, m2)

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        d = other.mean - self.mean
        frac = np.divide(other.n, n, out=np.zeros_like(n), where=n > 0)
        mean = self.mean + d * frac
        m2 = self.m2 + other.m2 + d * d * self.n * frac
        return _Moments(n, mean, m2)

    def estimate(self, i=()) -> RateEstimate:
        n = float(np.asarray(self.n)[i])
        mean = float(np.asarray(self.mean)[i])
        var = float(np.asarray(self.m2)[i]) / (n - 1) if n > 1 else 0.0
        return RateEstimate(mean, math.sqrt(var / n) if n > 0 else float("nan"), int(n))


@dataclass
class MonteCarloResult:
    """Aggregated Monte Carlo output (nats).

    ``paired_gap[p]`` estimates E[sum rate(p) - sum rate(first precoder)] on
    identical drops. ``zf_excluded`` counts trials where the Gram was too
    ill-conditioned for ZF; those trials are left out of every ZF statistic.
    """

    config: MonteCarloConfig
    per_beam: dict[str, list[RateEstimate]]
    sum_rate: dict[str, RateEstimate]
    paired_gap: dict[str, RateEstimate]
    zf_excluded: int = 0
    zf_max_leakage: float = 0.0
    mean_active: float = 0.0
    extra: dict = field(default_factory=dict)


def _block_seed(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _draw_block(cfg: MonteCarloConfig, block: int, n: int):
    rng = _block_seed(cfg.seed, block)
    k = cfg.grid.k
    radii = cfg.selection_radii
    centers = cfg.grid.centers_xy
    xy = np.empty((n, k, 2))
    for i in range(k):
        # bound memory: about _DROP_POINTS points per call, a function of (lam, R) only
        mean = cfg.lam * math.pi * radii[i] ** 2
        step = max(1, int(_DROP_POINTS // max(mean, 1.0)))
        for s in range(0, n, step):
            dx, dy = nearest_offsets_batch(cfg.lam, radii[i], min(step, n - s), rng)
            xy[s:s + step, i, 0] = centers[i, 0] + dx
            xy[s:s + step, i, 1] = centers[i, 1] + dy
    g = sr_sample_complex(cfg.sr, rng, (n, k))
    return xy, g


def _rates_chunk(cfg: MonteCarloConfig, xy: np.ndarray, g: np.ndarray):
    """Per-beam rates (n, K) for every requested precoder, plus diagnostics."""
    sys, grid = cfg.sys, cfg.grid
    m, k = grid.m_side, grid.k
    act = ~np.isnan(xy[..., 0])
    ux, uy = direction_cosines_xy(np.where(act, xy[..., 0], 0.0),
                                  np.where(act, xy[..., 1], 0.0), sys)
    d = np.sqrt(np.where(act, xy[..., 0] ** 2 + xy[..., 1] ** 2, 0.0) + sys.altitude_m**2)
    loss = np.where(act, path_loss(d, sys), 0.0)
    power = np.abs(g) ** 2
    rho = noise_normalized_power(sys) / k * sys.antenna_gain
    out = {}
    diag = {}
    if "fixed" in cfg.precoders:
        cxy = grid.cos_xy
        # gain[t, i, j]: beam i at user j
        gain = phased_gain_cos(m, ux[:, None, :], uy[:, None, :],
                               cxy[None, :, 0:1], cxy[None, :, 1:2])
        gain = np.where(act[:, :, None], gain, 0.0)
        own = np.einsum("tii->ti", gain)
        intf = gain.sum(axis=1) - own
        sig = rho * loss * power * m**2
        sinr = np.where(act, sig * own / (sig * intf + 1.0), 0.0)
        out["fixed"] = np.log1p(sinr)
        diag["fixed"] = (power, own, intf, sinr)
    if "mrt" in cfg.precoders or "zf" in cfg.precoders:
        amp = np.sqrt(loss) * np.where(act, g, 0.0)
        dx = dirichlet_complex(m, ux[:, :, None] - ux[:, None, :])
        dy = dirichlet_complex(m, uy[:, :, None] - uy[:, None, :])
        gram = m**2 * np.conj(amp)[:, :, None] * amp[:, None, :] * dx * dy
        both = act[:, :, None] & act[:, None, :]
        eye = np.eye(k, dtype=bool)[None]
        gram = np.where(both, gram, 0.0)
        if "mrt" in cfg.precoders:
            out["mrt"] = np.where(act, np.log1p(_mrt_sinr(gram, rho)), 0.0)
        if "zf" in cfg.precoders:
            padded = np.where(~act[:, :, None] & eye, 1.0, gram)
            zf, ok, resid = _zf_sinr(padded, rho)
            out["zf"] = np.where(act, np.log1p(zf), 0.0)
            diag["zf"] = (ok, resid)
    return out, diag, act


def _run_block(args):
    cfg, block, start, n = args
    xy, g = _draw_block(cfg, block, n)
    k = cfg.grid.k
    step = max(1, _CHUNK_ENTRIES // (k * k))
    parts = [_rates_chunk(cfg, xy[s:s + step], g[s:s + step]) for s in range(0, n, step)]
    rates = {p: np.concatenate([pt[0][p] for pt in parts]) for p in cfg.precoders}
    act = np.concatenate([pt[2] for pt in parts])
    zf_ok = (np.concatenate([pt[1]["zf"][0] for pt in parts]) if "zf" in cfg.precoders
             else np.ones(n, dtype=bool))
    zf_resid = (float(np.concatenate([pt[1]["zf"][1] for pt in parts]).max())
                if "zf" in cfg.precoders else 0.0)

    def valid(p):
        return zf_ok if p == "zf" else np.ones(n, dtype=bool)

    first = cfg.precoders[0]
    sums = {p: rates[p].sum(axis=1) for p in cfg.precoders}
    stats = {
        "per_beam": {p: _Moments.of(rates[p], np.broadcast_to(valid(p)[:, None], rates[p].shape))
                     for p in cfg.precoders},
        "sum": {p: _Moments.of(sums[p], valid(p)) for p in cfg.precoders},
        "gap": {p: _Moments.of(sums[p] - sums[first], valid(p) & valid(first))
                for p in cfg.precoders[1:]},
        "zf_excluded": int((~zf_ok).sum()),
        "zf_resid": zf_resid,
        "active": float(act.sum()),
    }
    trace = None
    if cfg.trace_path is not None:
        trace = _trace_rows(cfg, start, xy, g, parts)
    return stats, trace


def _trace_rows(cfg, start, xy, g, parts):
    p = "fixed" if "fixed" in cfg.precoders else cfg.precoders[0]
    rate = np.concatenate([pt[0][p] for pt in parts])
    if p == "fixed":
        own = np.concatenate([pt[1]["fixed"][1] for pt in parts])
        intf = np.concatenate([pt[1]["fixed"][2] for pt in parts])
        sinr = np.concatenate([pt[1]["fixed"][3] for pt in parts])
    else:
        own = intf = np.full(rate.shape, np.nan)
        sinr = np.expm1(rate)
    rows = []
    n, k = rate.shape
    for t in range(n):
        for b in range(k):
            if np.isnan(xy[t, b, 0]):
                continue
            rows.append((start + t, b, repr(float(xy[t, b, 0])), repr(float(xy[t, b, 1])),
                         repr(float(abs(g[t, b]) ** 2)), repr(float(own[t, b])),
                         repr(float(intf[t, b])), repr(float(sinr[t, b])),
                         repr(float(rate[t, b]))))
    return rows


TRACE_HEADER = ("trial", "beam", "user_x", "user_y", "g_abs2", "gain_kk",
                "sum_interf_gain", "sinr", "rate")


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("ORBITBEAM_WORKERS", "1"))
    if workers < 1:
        raise ArgumentError("workers must be >= 1")
    return workers


def _check_overlap(cfg: MonteCarloConfig) -> None:
    c = cfg.grid.centers_xy
    if len(c) < 2:
        return
    r = cfg.selection_radii
    d = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])
    np.fill_diagonal(d, np.inf)
    if np.any(d < r[:, None] + r[None, :]):
        log.warning("selection disks overlap; per-disk Poisson draws then double-count "
                    "users in the overlap")


def monte_carlo_rate(cfg: MonteCarloConfig) -> MonteCarloResult:
    """Monte Carlo per-beam and sum ergodic rates for every requested precoder.

    Each beam serves the user closest to its centre inside its selection disk
    (footprint radius unless ``r1_m`` is given). Disks of distinct beams are
    disjoint, so the users in each are drawn as independent Poisson
    processes. Empty beams transmit nothing and contribute rate 0.
    """
    _check_overlap(cfg)
    jobs = []
    for b, start in enumerate(range(0, cfg.trials, BLOCK_TRIALS)):
        jobs.append((cfg, b, start, min(BLOCK_TRIALS, cfg.trials - start)))
    workers = min(resolve_workers(cfg.workers), len(jobs))
    if workers == 1:
        results = map(_run_block, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_run_block, jobs)

    writer = fh = None
    if cfg.trace_path is not None:
        fh = open(cfg.trace_path, "w", newline="")
        for line in cfg.trace_preamble:
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
    acc = None
    excluded = 0
    resid = 0.0
    active = 0.0
    try:
        for stats, trace in results:
            if writer is not None:
                writer.writerows(trace)
            excluded += stats["zf_excluded"]
            resid = max(resid, stats["zf_resid"])
            active += stats["active"]
            if acc is None:
                acc = stats
                continue
            for key in ("per_beam", "sum", "gap"):
                for p, mom in stats[key].items():
                    acc[key][p] = acc[key][p].merge(mom)
    finally:
        if fh is not None:
            fh.close()
        if workers > 1:
            pool.shutdown()
    if excluded:
        log.info("ZF unavailable in %d of %d trials (excluded)", excluded, cfg.trials)
    per_beam = {p: [m.estimate(i) for i in range(cfg.grid.k)]
                for p, m in acc["per_beam"].items()}
    return MonteCarloResult(
        config=cfg,
        per_beam=per_beam,
        sum_rate={p: m.estimate() for p, m in acc["sum"].items()},
        paired_gap={p: m.estimate() for p, m in acc["gap"].items()},
        zf_excluded=excluded,
        zf_max_leakage=resid,
        mean_active=active / cfg.trials,
    )
