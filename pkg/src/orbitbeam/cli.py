"""Command-line entry point: ``orbitbeam <subcommand> [options]``.

Output files (one per table, ``--format csv`` or ``json``) start with a
header block: code version, config hash, seed, rate units and the fully
resolved config as one JSON line, which ``--config`` accepts back.

CSV columns
  simulate            M, lambda, precoder, beam, rate, stderr, trials
  analytic            M, lambda, mode, k_beams, rate, ideal_rate
  scaling             M, lambda, rate_or_prob, theory_value, stderr, passed
                      (one file per experiment, plus scaling_summary)
  compare-precoders   M, lambda, precoder, sum_rate, stderr, gap, gap_stderr,
                      zf_excluded, zf_max_leakage, trials
  validate            check, passed, value, detail
  export-grid         k, n, m, cos_x, cos_y, ground_x_m, ground_y_m, footprint_radius_m
  simulate --trace    trial, beam, user_x, user_y, g_abs2, gain_kk, sum_interf_gain,
                      sinr, rate
"""
from __future__ import annotations

import argparse
import logging
import math
import sys as _sys

import numpy as np

from . import __version__
from .analytic import (ergodic_rate_multibeam_user1, ergodic_rate_single,
                       ideal_rate_multibeam, ideal_rate_single)
from .beams import build_grid
from .config import RunHeader, fading_params, load_config, quadrature, resolve, system_params
from .errors import ArgumentError, ConfigurationError, NumericFailure
from .link import MonteCarloConfig, log_base_factor, monte_carlo_rate, resolve_workers
from .output import OutputSink
from .scaling import (CSV_COLUMNS, RATIO_TOL, SLOPE_TOL, ScalingSweep, fit_slope,
                      gain_event_check, lemma1_probability, sweep_points, theorem2_ratio,
                      theorem4_sum_ratio, theorem_ratio, theorem_slope)
from .validation import quick_suite

log = logging.getLogger("orbitbeam")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SUBCOMMANDS = ("simulate", "analytic", "scaling", "compare-precoders", "validate",
               "export-grid")


def _point_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def _grid_for(cfg, m_side, sys):
    b = cfg["beams"]
    if b["mode"] == "single":
        return build_grid(m_side, 1.0, math.inf, sys, max_index=0)
    return build_grid(m_side, b["ell"], b["r_cov_m"], sys, max_index=b["max_index"])


class _Run:
    def __init__(self, cfg, args):
        self.cfg = cfg
        self.sys = system_params(cfg)
        self.sr = fading_params(cfg)
        self.quad = quadrature(cfg)
        self.header = RunHeader(__version__, cfg)
        self.sink = OutputSink(args.out, args.format, self.header)
        self.workers = resolve_workers(args.workers)
        self.base = log_base_factor(cfg["run"]["log_base"])
        self.trace = args.trace
        self.failed_checks = 0

    @property
    def seed(self) -> int:
        return self.cfg["run"]["seed"]

    # -- subcommands -------------------------------------------------------

    def simulate(self):
        cols = ("M", "lambda", "precoder", "beam", "rate", "stderr", "trials")
        rows = []
        run, users = self.cfg["run"], self.cfg["users"]
        for mi, m in enumerate(self.cfg["beams"]["m_values"]):
            grid = _grid_for(self.cfg, m, self.sys)
            r1 = users["r1_m"] if self.cfg["beams"]["mode"] == "single" else None
            for li, lam in enumerate(users["lambda"]):
                trace = None
                if self.trace:
                    trace = str(self.sink.out_dir / f"trace_M{m}_lam{li}.csv")
                mc = MonteCarloConfig(self.sys, self.sr, lam, grid, run["trials"],
                                      _point_seed(self.seed, mi, li), tuple(run["precoders"]),
                                      r1_m=r1, workers=self.workers, trace_path=trace,
                                      trace_preamble=tuple(self.header.lines()))
                res = monte_carlo_rate(mc)
                for p in run["precoders"]:
                    for k, est in enumerate(res.per_beam[p]):
                        e = est.in_base(self.cfg["run"]["log_base"])
                        rows.append((m, lam, p, k, e.mean, e.stderr, e.trials))
                    e = res.sum_rate[p].in_base(self.cfg["run"]["log_base"])
                    rows.append((m, lam, p, "sum", e.mean, e.stderr, e.trials))
        self.sink.write("simulate", cols, rows,
                        notes=["empty beams count as rate 0; stderr = std / sqrt(trials)"])

    def analytic(self):
        cols = ("M", "lambda", "mode", "k_beams", "rate", "ideal_rate")
        rows = []
        b, users = self.cfg["beams"], self.cfg["users"]
        try:
            for m in b["m_values"]:
                for lam in users["lambda"]:
                    if b["mode"] == "single":
                        r1 = users["r1_m"]
                        rate = ergodic_rate_single(self.sys, self.sr, lam, m, r1, self.quad)
                        ideal = ideal_rate_single(self.sys, self.sr, lam, m, r1, self.quad)
                        k = 1
                    else:
                        grid = _grid_for(self.cfg, m, self.sys)
                        rate = ergodic_rate_multibeam_user1(
                            self.sys, self.sr, lam, m, grid, self.quad,
                            interferers=b["interferers"])
                        ideal = ideal_rate_multibeam(self.sys, self.sr, lam, m, grid.k,
                                                     grid.beams[0].footprint_radius_m,
                                                     self.quad)
                        k = grid.k
                    rows.append((m, lam, b["mode"], k, rate * self.base, ideal * self.base))
        except NumericFailure:
            self.sink.write("analytic", cols, rows, partial=True)
            raise
        self.sink.write("analytic", cols, rows)

    def scaling(self):
        sc, run = self.cfg["scaling"], self.cfg["run"]
        exps = sc["experiments"]
        m_values = tuple(self.cfg["beams"]["m_values"])
        summary = []
        common = dict(quad=self.quad, engine=run["engine"], trials=run["trials"],
                      seed=self.seed, workers=self.workers)
        note = f"slope fits exclude the smallest M ({m_values[0]})"

        def emit(name, rows, notes=()):
            self.sink.write(f"scaling_{name}", CSV_COLUMNS, rows, notes=notes)

        for q in sc["q_values"] if {"theorem1", "theorem2"} & set(exps) else []:
            sweep = ScalingSweep(m_values, q, self.cfg["users"]["c_lambda"])
            pts = sweep_points(sweep, self.sys, self.sr, **common)
            if "theorem1" in exps:
                fit = fit_slope(sweep, pts, theorem_slope(q))
                emit(f"theorem1_q{q:g}", self._rate_rows(fit), [note])
                summary.append((f"theorem1_q{q:g}", "slope", fit.slope, fit.theory,
                                SLOPE_TOL, fit.passed))
            if "theorem2" in exps:
                rat = theorem2_ratio(sweep, self.sys, self.sr, points=pts)
                emit(f"theorem2_q{q:g}", list(rat.rows()))
                summary.append((f"theorem2_q{q:g}", "ratio_at_max_M", rat.last, rat.theory,
                                RATIO_TOL, rat.passed))
        if {"theorem3", "theorem4"} & set(exps):
            ell, q = sc["multibeam_ell"], sc["multibeam_q"]
            sweep = ScalingSweep(m_values, q, self.cfg["users"]["c_lambda"], ell=ell)
            pts = sweep_points(sweep, self.sys, self.sr, **common)
            tag = f"l{ell:g}_q{q:g}"
            if "theorem3" in exps:
                fit = fit_slope(sweep, pts, theorem_slope(q, ell))
                emit(f"theorem3_{tag}", self._rate_rows(fit), [note])
                summary.append((f"theorem3_{tag}", "slope", fit.slope, fit.theory,
                                SLOPE_TOL, fit.passed))
            if "theorem4" in exps:
                rat = theorem4_sum_ratio(sweep, self.sys, self.sr, points=pts)
                emit(f"theorem4_{tag}", list(rat.rows()))
                summary.append((f"theorem4_{tag}", "ratio_at_max_M", rat.last,
                                theorem_ratio(q, ell), RATIO_TOL, rat.passed))
        if "lemma1" in exps:
            m = sc["lemma1_m"]
            for pi, (ell, s) in enumerate(sc["lemma1_pairs"]):
                rng = np.random.default_rng(_point_seed(self.seed, 1000 + pi))
                rows = []
                for q in sc["lemma1_q"]:
                    lam = m**q / (math.pi * self.sys.altitude_m**2)
                    rows.append(lemma1_probability(m, ell, s, lam, self.sys,
                                                   sc["lemma1_trials"], rng).row())
                emit(f"lemma1_l{ell:g}_s{s:g}", rows)
                ok = all(r[-1] for r in rows)
                summary.append((f"lemma1_l{ell:g}_s{s:g}", "all_points_above_bound",
                                float(ok), 1.0, 0.0, ok))
        if "gain_window" in exps:
            m = sc["lemma1_m"]
            lam = m ** sc["window_q"] / (math.pi * self.sys.altitude_m**2)
            rng = np.random.default_rng(_point_seed(self.seed, 2000))
            c = gain_event_check(m, sc["window_p"], sc["window_phi"], lam, self.sys,
                                 sc["lemma1_trials"], rng)
            emit("gain_window", [c.row()],
                 [f"window r in ({c.extra['r_lo']!r}, {c.extra['r_hi']!r}) m"])
            summary.append(("gain_window", "empirical_minus_band", c.empirical - c.bound,
                            0.0, 3.0 * c.stderr, c.passed))
        self.sink.write("scaling_summary",
                        ("experiment", "statistic", "value", "theory", "tolerance", "passed"),
                        summary)
        for name, stat, value, theory, tol, ok in summary:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {stat}={value:.4f} "
                  f"(theory {theory:.4f}, tol {tol:g})")

    def _rate_rows(self, fit):
        for m, lam, rate, theory, se, ok in fit.rows():
            yield (m, lam, rate * self.base, theory * self.base, se * self.base, ok)

    def compare_precoders(self):
        cols = ("M", "lambda", "precoder", "sum_rate", "stderr", "gap", "gap_stderr",
                "zf_excluded", "zf_max_leakage", "trials")
        run, users = self.cfg["run"], self.cfg["users"]
        precoders = tuple(run["precoders"])
        if "fixed" in precoders:
            precoders = ("fixed",) + tuple(p for p in precoders if p != "fixed")
        rows = []
        for mi, m in enumerate(self.cfg["beams"]["m_values"]):
            grid = _grid_for(self.cfg, m, self.sys)
            for li, lam in enumerate(users["lambda"]):
                res = monte_carlo_rate(MonteCarloConfig(
                    self.sys, self.sr, lam, grid, run["trials"], _point_seed(self.seed, mi, li),
                    precoders, workers=self.workers))
                for p in precoders:
                    e = res.sum_rate[p]
                    gap = res.paired_gap.get(p)
                    rows.append((m, lam, p, e.mean * self.base, e.stderr * self.base,
                                 gap.mean * self.base if gap else 0.0,
                                 gap.stderr * self.base if gap else 0.0,
                                 res.zf_excluded if p == "zf" else 0,
                                 res.zf_max_leakage if p == "zf" else 0.0, e.trials))
        self.sink.write("compare_precoders", cols, rows,
                        notes=[f"gap = paired sum-rate difference against {precoders[0]}"])

    def validate(self):
        results = quick_suite(self.sys, self.sr, seed=self.seed, workers=self.workers)
        rows = [(r.name, r.passed, float(r.value), r.detail) for r in results]
        self.sink.write("validate", ("check", "passed", "value", "detail"), rows)
        for r in results:
            print(r.line())
        self.failed_checks = sum(not r.passed for r in results)

    def export_grid(self):
        cols = ("k", "n", "m", "cos_x", "cos_y", "ground_x_m", "ground_y_m",
                "footprint_radius_m")
        for m in self.cfg["beams"]["m_values"]:
            grid = _grid_for(self.cfg, m, self.sys)
            rows = [(k, b.index_n, b.index_m, b.cos_x, b.cos_y, b.ground_center.x_m,
                     b.ground_center.y_m, b.footprint_radius_m)
                    for k, b in enumerate(grid.beams)]
            self.sink.write(f"grid_M{m}", cols, rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="INI or JSON config, or a previous output file")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides config)")
    common.add_argument("--workers", type=int, metavar="N",
                        help="worker processes (default $ORBITBEAM_WORKERS or 1)")
    common.add_argument("--out", default=".", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--log-base", choices=("e", "2"),
                        help="report rates in nats (e) or bits (2)")
    common.add_argument("--trace", action="store_true",
                        help="simulate: also write per-trial trace CSVs")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(
        prog="orbitbeam", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"orbitbeam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "Monte Carlo per-beam and sum rates",
        "analytic": "quadrature ergodic rates and ideal rates",
        "scaling": "scaling-law experiments (slopes, ratios, interference bounds)",
        "compare-precoders": "fixed-beam vs MRT vs ZF sum rates on identical drops",
        "validate": "quick invariant suite; exit 1 if any check fails",
        "export-grid": "beam grid tables",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else resolve({})
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigurationError("--seed must be an unsigned 64-bit integer")
            cfg["run"]["seed"] = args.seed
        if args.log_base is not None:
            cfg["run"]["log_base"] = args.log_base
        run = _Run(cfg, args)
        getattr(run, args.command.replace("-", "_"))()
    except (ConfigurationError, ArgumentError) as exc:
        print(f"orbitbeam: configuration error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"orbitbeam: numeric failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERIC
    return EXIT_CHECK_FAILED if run.failed_checks else EXIT_OK


if __name__ == "__main__":
    _sys.exit(main())
