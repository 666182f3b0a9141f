"""Property checks shared by the ``validate`` subcommand and the acceptance tests.

Each check returns a :class:`CheckResult`; sizes are arguments so the CLI can
run quick versions and the test suite the full ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import (QuadratureConfig, ergodic_rate_multibeam_user1, ergodic_rate_single,
                       expected_log_rate)
from .beams import (build_grid, dirichlet_complex, fejer_kernel, phased_gain_cos,
                    steering_vector, upa_steering_vector)
from .fading import SR_SCENARIOS, ShadowedRicianParams, sr_cdf_table, sr_mgf, sr_sample
from .geometry import SystemParams
from .link import MonteCarloConfig, monte_carlo_rate
from .pointprocess import nearest_distance_cdf, nearest_offsets_batch
from .scaling import gain_event_check, lemma1_probability


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def ks_statistic(samples: np.ndarray, cdf_x: np.ndarray, cdf_y: np.ndarray) -> float:
    """Two-sided KS distance of a sample against a tabulated CDF (linear interpolation)."""
    x = np.sort(samples)
    n = len(x)
    f = np.interp(x, cdf_x, cdf_y, left=0.0, right=1.0)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def check_sr_distribution(n_ks: int = 100_000, n_mgf: int = 1_000_000, seed: int = 1,
                          s_values=(0.1, 1.0, 10.0)) -> list[CheckResult]:
    out = []
    rng = np.random.default_rng(seed)
    for name, p in SR_SCENARIOS.items():
        x, cdf = sr_cdf_table(p)
        ks = ks_statistic(sr_sample(p, rng, n_ks), x, cdf)
        out.append(CheckResult(f"sr_ks[{name}]", ks < 0.01, ks, f"KS={ks:.4g} (< 0.01)"))
        xs = sr_sample(p, rng, n_mgf)
        for s in s_values:
            e = np.exp(-s * xs)
            mean, se = e.mean(), e.std(ddof=1) / math.sqrt(n_mgf)
            th = sr_mgf(p, s)
            z = abs(mean - th) / se
            out.append(CheckResult(f"sr_mgf[{name},s={s:g}]", z <= 3.0, z,
                                   f"empirical {mean:.6g} vs {th:.6g}, {z:.2f} stderr"))
    return out


def check_kernels(m_values=(4, 8, 16, 32), seed: int = 2, n_pairs: int = 200
                  ) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_d = worst_f = worst_upa = 0.0
    for m in m_values:
        a = rng.uniform(-1, 1, n_pairs)
        b = rng.uniform(-1, 1, n_pairs)
        for ai, bi in zip(a, b):
            ip = np.vdot(steering_vector(m, ai), steering_vector(m, bi))
            worst_d = max(worst_d, abs(ip - dirichlet_complex(m, ai - bi)))
            worst_f = max(worst_f, abs(abs(ip) - fejer_kernel(m, ai - bi)))
        if m <= 16:
            c = rng.uniform(-1, 1, (20, 4))
            for ax, ay, bx, by in c:
                ip = np.vdot(upa_steering_vector(m, ax, ay), upa_steering_vector(m, bx, by))
                g = phased_gain_cos(m, ax, ay, bx, by)
                worst_upa = max(worst_upa, abs(abs(ip) ** 2 - g))
    out = [CheckResult("dirichlet_vs_steering", worst_d < 1e-10, worst_d,
                       f"max |error| {worst_d:.3g}"),
           CheckResult("fejer_vs_steering", worst_f < 1e-10, worst_f,
                       f"max |error| {worst_f:.3g}"),
           CheckResult("upa_gain_vs_steering", worst_upa < 1e-10, worst_upa,
                       f"max |error| {worst_upa:.3g}")]
    centre = min(float(phased_gain_cos(m, 0.0, 0.0, 0.0, 0.0)) for m in m_values)
    out.append(CheckResult("nadir_gain_at_centre", centre == 1.0, centre, f"gain {centre!r}"))
    worst = 0.0
    for m in m_values:
        for n, k in [(1, 0), (0, 1), (1, 1), (-1, 0), (0, -1), (-1, -1), (1, -1), (-1, 1)]:
            worst = max(worst, float(phased_gain_cos(m, 2 * n / m, 2 * k / m, 0.0, 0.0)))
    out.append(CheckResult("nadir_gain_at_neighbours", worst < 1e-20, worst,
                           f"max gain {worst:.3g} (< 1e-20)"))
    return out


def check_single_beam_vs_mc(
        sys: SystemParams, sr: ShadowedRicianParams,
        cases=((16, 1e-10), (16, 1e-9), (64, 1e-10), (64, 1e-9), (256, 1e-10), (256, 1e-9)),
        r1: float = 250e3, trials: int = 100_000, seed: int = 3, workers: int | None = None,
        quad: QuadratureConfig = QuadratureConfig()) -> list[CheckResult]:
    out = []
    for m, lam in cases:
        nadir = build_grid(m, 1.0, math.inf, sys, max_index=0)
        res = monte_carlo_rate(MonteCarloConfig(sys, sr, lam, nadir, trials, seed, r1_m=r1,
                                                workers=workers))
        est = res.sum_rate["fixed"]
        an = ergodic_rate_single(sys, sr, lam, m, r1, quad)
        tol = max(3.0 * est.stderr, 0.03 * abs(an))
        diff = est.mean - an
        out.append(CheckResult(f"analytic_vs_mc[M={m},lam={lam:g}]", abs(diff) <= tol, diff,
                               f"MC {est.mean:.5f} +/- {est.stderr:.5f}, analytic {an:.5f}, "
                               f"tol {tol:.4g}"))
    return out


def check_multibeam_bound(
        sys: SystemParams, sr: ShadowedRicianParams, lam: float = 1e-10, m_values=(32, 64),
        max_indices=(1, 2), trials: int = 2000, seed: int = 4, workers: int | None = None,
        quad: QuadratureConfig = QuadratureConfig()) -> list[CheckResult]:
    out = []
    for m in m_values:
        for mi in max_indices:
            grid = build_grid(m, 1.0, math.inf, sys, max_index=mi)
            res = monte_carlo_rate(MonteCarloConfig(sys, sr, lam, grid, trials, seed,
                                                    workers=workers))
            est = res.sum_rate["fixed"]
            bound = grid.k * ergodic_rate_multibeam_user1(sys, sr, lam, m, grid, quad)
            gap = est.mean - bound
            side = 2 * mi + 1
            out.append(CheckResult(
                f"multibeam_lower_bound[M={m},{side}x{side}]", gap >= -3.0 * est.stderr, gap,
                f"simulated {est.mean:.4f} +/- {est.stderr:.4f}, K*analytic {bound:.4f}"))
    return out


def check_nearest_law(lam: float = 1e-9, products=(2.0, 20.0, 200.0), n: int = 100_000,
                      seed: int = 5) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for prod in products:
        radius = math.sqrt(prod / (lam * math.pi))
        dx, dy = nearest_offsets_batch(lam, radius, n, rng)
        d = np.hypot(dx, dy)
        d = d[~np.isnan(d)]
        grid = np.linspace(0.0, radius, 4001)
        ks = ks_statistic(d, grid, nearest_distance_cdf(lam, radius, grid))
        out.append(CheckResult(f"nearest_law[lam*pi*R^2={prod:g}]", ks < 0.01, ks,
                               f"KS={ks:.4g} on {len(d)} nonempty drops"))
    return out


def check_lemma1(sys: SystemParams, m_side: int = 64, pairs=((0.5, 0.3), (0.3, 0.5)),
                 q_values=(1.2, 1.4, 1.6, 1.8, 2.0, 2.2), trials: int = 20_000,
                 seed: int = 6) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for ell, s in pairs:
        for q in q_values:
            lam = m_side**q / (math.pi * sys.altitude_m**2)
            c = lemma1_probability(m_side, ell, s, lam, sys, trials, rng)
            out.append(CheckResult(f"lemma1[l={ell},s={s},q={q:g}]", c.passed,
                                   c.empirical - c.bound,
                                   f"empirical {c.empirical:.5f} +/- {c.stderr:.2g}, "
                                   f"bound {c.bound:.5f}"))
    return out


def check_gain_window(sys: SystemParams, m_side: int = 64, p: float = 0.5,
                      phi: float = math.pi / 4, q: float = 1.8, trials: int = 20_000,
                      seed: int = 7) -> CheckResult:
    lam = m_side**q / (math.pi * sys.altitude_m**2)
    c = gain_event_check(m_side, p, phi, lam, sys, trials, np.random.default_rng(seed))
    return CheckResult("gain_event_window", c.passed, c.empirical - c.bound,
                       f"P[Z > M^2p] {c.empirical:.4f} +/- {c.stderr:.2g} vs window "
                       f"probability {c.bound:.4f}")


def check_mgf_limit(tau: float = 1e-8, h_values=(1e-2, 1.0, 1e3)) -> CheckResult:
    """(1 - MGF(tau h)) / tau against h E[X]; needs tau h << 1 to be a limit statement."""
    worst = 0.0
    for p in SR_SCENARIOS.values():
        for h in h_values:
            lhs = (1.0 - sr_mgf(p, tau * h)) / tau
            worst = max(worst, abs(lhs / (h * p.mean_power) - 1.0))
    return CheckResult("mgf_small_tau_limit", worst < 0.01, worst,
                       f"max relative deviation {worst:.3g} at tau={tau:g}")


def check_expected_log_rate(n: int = 400_000, seed: int = 8) -> CheckResult:
    """tau-integral against a sampled mean of log(1 + b X / (a X + 1))."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in SR_SCENARIOS.values():
        x = sr_sample(p, rng, n)
        for a, b in [(0.0, 1.0), (0.0, 1e4), (10.0, 1e3)]:
            v = np.log1p(b * x / (a * x + 1.0))
            z = abs(v.mean() - expected_log_rate(p, a, b)) / (v.std(ddof=1) / math.sqrt(n))
            worst = max(worst, z)
    return CheckResult("expected_log_rate_vs_sampling", worst <= 4.0, worst,
                       f"max deviation {worst:.2f} stderr")


def check_quadrature(sys: SystemParams, sr: ShadowedRicianParams, m_side: int = 64,
                     lam: float = 1e-9, r1: float = 250e3) -> list[CheckResult]:
    q = QuadratureConfig()
    base = ergodic_rate_single(sys, sr, lam, m_side, r1, q, check=False)
    fine = ergodic_rate_single(sys, sr, lam, m_side, r1, q.refined(), check=False)
    rel = abs(fine - base) / fine
    unfolded = ergodic_rate_single(sys, sr, lam, m_side, r1,
                                   QuadratureConfig(phi_symmetry_fold=1), check=False)
    rel_fold = abs(unfolded - base) / base
    grid = build_grid(16, 1.0, math.inf, sys, max_index=1)
    lam_mb = 1e-10
    mb = ergodic_rate_multibeam_user1(sys, sr, lam_mb, 16, grid, q, check=False)
    mb1 = ergodic_rate_multibeam_user1(sys, sr, lam_mb, 16, grid,
                                       QuadratureConfig(phi_symmetry_fold=1), check=False)
    rel_mb = abs(mb1 - mb) / mb
    return [CheckResult("quadrature_refinement", rel < 1e-3, rel,
                        f"doubling node counts changes the rate by {rel:.2g} (relative)"),
            CheckResult("phi_fold_equivalence", max(rel_fold, rel_mb) < 1e-6,
                        max(rel_fold, rel_mb),
                        f"single {rel_fold:.2g}, multibeam {rel_mb:.2g} (< 1e-6)")]


def check_precoders(sys: SystemParams, sr: ShadowedRicianParams,
                    lambdas=(1e-11, 1e-10, 1e-9), m_side: int = 32, max_index: int = 1,
                    trials: int = 2000, seed: int = 9, workers: int | None = None
                    ) -> list[CheckResult]:
    grid = build_grid(m_side, 1.0, math.inf, sys, max_index=max_index)
    gaps, leak, excluded = [], 0.0, 0
    for lam in lambdas:
        res = monte_carlo_rate(MonteCarloConfig(sys, sr, lam, grid, trials, seed,
                                                precoders=("fixed", "zf"), workers=workers))
        gaps.append(res.paired_gap["zf"])
        leak = max(leak, res.zf_max_leakage)
        excluded += res.zf_excluded
    top = gaps[-1]
    # successive gaps are from independent runs; compare with their combined stderr
    drops = [g0.mean - g1.mean for g0, g1 in zip(gaps, gaps[1:])]
    sig = [math.hypot(g0.stderr, g1.stderr) for g0, g1 in zip(gaps, gaps[1:])]
    mono = all(d > 0 for d in drops)
    detail = ", ".join(f"lam={lam:g}: {g.mean:.4f} +/- {g.stderr:.4f}"
                       for lam, g in zip(lambdas, gaps))
    return [CheckResult("zf_beats_fixed_at_high_density", top.mean > 3.0 * top.stderr,
                        top.mean / top.stderr if top.stderr > 0 else math.inf,
                        f"paired ZF - fixed gap {top.mean:.4f} +/- {top.stderr:.4f}"),
            CheckResult("fixed_zf_gap_shrinks_with_density", mono, min(drops),
                        detail + "; steps in stderr units: "
                        + ", ".join(f"{d / s:.1f}" for d, s in zip(drops, sig))),
            CheckResult("zf_nulls_interference", leak < 1e-9, leak,
                        f"max off-diagonal leakage {leak:.2g}, {excluded} trials excluded")]


def check_rate_vs_array_size(
        sys: SystemParams, sr: ShadowedRicianParams,
        m_values=(16, 24, 32, 48, 64, 96, 128, 192, 256), r1: float = 250e3,
        lam_dense: float = 1e-9, lam_sparse: float = 10 ** -11.7,
        quad: QuadratureConfig = QuadratureConfig()) -> list[CheckResult]:
    dense = [ergodic_rate_single(sys, sr, lam_dense, m, r1, quad) for m in m_values]
    sparse = [ergodic_rate_single(sys, sr, lam_sparse, m, r1, quad) for m in m_values]
    inc = all(b > a for a, b in zip(dense, dense[1:]))
    # smallest index from which the sparse curve never increases again
    start = len(sparse) - 1
    while start > 0 and sparse[start] <= sparse[start - 1]:
        start -= 1
    tail = len(sparse) - start
    ok = tail >= 2
    return [CheckResult("rate_vs_M_dense_increasing", inc, float(dense[-1] - dense[0]),
                        "rates " + ", ".join(f"{v:.3f}" for v in dense)),
            CheckResult("rate_vs_M_sparse_turns_down", ok, float(tail),
                        f"non-increasing from M={m_values[start]}; rates "
                        + ", ".join(f"{v:.3f}" for v in sparse))]


def quick_suite(sys: SystemParams, sr: ShadowedRicianParams, seed: int = 0,
                workers: int | None = None) -> list[CheckResult]:
    """Reduced-size invariant checks for ``orbitbeam validate``."""
    out = []
    out += check_sr_distribution(n_ks=100_000, n_mgf=200_000, seed=seed + 1)
    out += check_kernels(seed=seed + 2)
    out += check_single_beam_vs_mc(sys, sr, cases=((64, 1e-10),), trials=20_000,
                                   seed=seed + 3, workers=workers)
    out += check_nearest_law(seed=seed + 5)
    out += check_lemma1(sys, trials=5000, seed=seed + 6)
    out.append(check_gain_window(sys, trials=5000, seed=seed + 7))
    out.append(check_mgf_limit())
    out.append(check_expected_log_rate(n=100_000, seed=seed + 8))
    out += check_quadrature(sys, sr)
    grid = build_grid(16, 1.0, math.inf, sys, max_index=1)
    res = monte_carlo_rate(MonteCarloConfig(sys, sr, 1e-10, grid, 500, seed + 9,
                                            precoders=("fixed", "zf"), workers=workers))
    out.append(CheckResult("zf_nulls_interference", res.zf_max_leakage < 1e-9,
                           res.zf_max_leakage, f"max leakage {res.zf_max_leakage:.2g}"))
    return out

