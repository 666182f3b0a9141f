import math

import numpy as np
import pytest
from scipy import integrate

from orbitbeam.analytic import (QuadratureConfig, _with_refinement,
                                ergodic_rate_multibeam_user1, ergodic_rate_single,
                                expected_log_rate, ideal_rate_multibeam, ideal_rate_single)
from orbitbeam.beams import build_grid, phased_gain_cos
from orbitbeam.errors import ArgumentError, NumericFailure
from orbitbeam.fading import SR_SCENARIOS, sr_pdf
from orbitbeam.geometry import SystemParams, link_gain

SYS = SystemParams(p0_watt=10.0)
SR = SR_SCENARIOS["average"]
H = SYS.altitude_m


def _elr_oracle(sr, a, b):
    f = lambda x: math.log1p(b * x / (a * x + 1.0)) * sr_pdf(sr, x)
    return integrate.quad(f, 0, 80, points=[0.1, 1.0, 5.0], limit=200, epsrel=1e-9)[0]


@pytest.mark.parametrize("name", sorted(SR_SCENARIOS))
@pytest.mark.parametrize("a,b", [(0.0, 1e-3), (0.0, 7.3), (0.0, 7.5e3), (2.0, 30.0),
                                 (150.0, 900.0), (0.0, 1e6)])
def test_expected_log_rate_against_direct_integral(name, a, b):
    sr = SR_SCENARIOS[name]
    assert expected_log_rate(sr, a, b) == pytest.approx(_elr_oracle(sr, a, b), rel=1e-8)


def test_expected_log_rate_broadcasts_and_vanishes_without_signal():
    out = expected_log_rate(SR, np.array([0.0, 1.0]), np.array([[1.0], [0.0]]))
    assert out.shape == (2, 2) and np.all(out[1] == 0.0)


def test_ideal_rate_against_nested_quadrature():
    lam, m, r1 = 1e-12, 16, 2e6
    ours = ideal_rate_single(SYS, SR, lam, m, r1)
    dens = lambda r: 2 * lam * math.pi * r * math.exp(-lam * math.pi * r * r)
    ref = integrate.quad(lambda r: dens(r) * _elr_oracle(SR, 0.0, float(link_gain(r, SYS)) * m * m),
                         0, r1, limit=200, epsrel=1e-9)[0]
    assert ours == pytest.approx(ref, rel=1e-7)


def test_single_beam_rate_against_nested_quadrature():
    lam, m, r1 = 1e-12, 4, 3e6
    ours = ergodic_rate_single(SYS, SR, lam, m, r1)

    def inner(phi):
        c, s = math.cos(phi), math.sin(phi)

        def f(r):
            d = math.hypot(r, H)
            g = float(phased_gain_cos(m, r * c / d, r * s / d, 0.0, 0.0))
            snr = float(link_gain(r, SYS)) * m * m * g
            return (2 * lam * math.pi * r * math.exp(-lam * math.pi * r * r)
                    * expected_log_rate(SR, 0.0, snr))
        return integrate.quad(f, 0, r1, limit=200, epsrel=1e-9)[0]

    ref = integrate.quad(inner, 0, math.pi / 4, epsrel=1e-8)[0] / (math.pi / 4)
    assert ours == pytest.approx(ref, rel=1e-7)


def test_unit_array_has_no_pattern_loss():
    lam, r1 = 1e-11, 5e5
    assert ergodic_rate_single(SYS, SR, lam, 1, r1) == pytest.approx(
        ideal_rate_single(SYS, SR, lam, 1, r1), rel=1e-10)


@pytest.mark.parametrize("m", [16, 64])
def test_ideal_is_an_upper_bound(m):
    lam, r1 = 1e-9, 250e3
    assert ergodic_rate_single(SYS, SR, lam, m, r1) <= ideal_rate_single(SYS, SR, lam, m, r1)


def test_one_beam_grid_reduces_to_single_beam():
    m, lam = 16, 1e-11
    grid = build_grid(m, 1.0, 1.0, SYS)
    r1 = grid.beams[0].footprint_radius_m
    assert ergodic_rate_multibeam_user1(SYS, SR, lam, m, grid) == pytest.approx(
        ergodic_rate_single(SYS, SR, lam, m, r1), rel=1e-12)


def test_interference_and_power_split_lower_the_rate():
    m, lam = 32, 1e-10
    g3 = build_grid(m, 1.0, math.inf, SYS, max_index=1)
    g5 = build_grid(m, 1.0, math.inf, SYS, max_index=2)
    r3 = ergodic_rate_multibeam_user1(SYS, SR, lam, m, g3)
    r5 = ergodic_rate_multibeam_user1(SYS, SR, lam, m, g5)
    ring = ergodic_rate_multibeam_user1(SYS, SR, lam, m, g5, interferers="first-ring")
    assert r5 < r3
    assert r5 <= ring
    r1 = g3.beams[0].footprint_radius_m
    assert r3 < ideal_rate_multibeam(SYS, SR, lam, m, g3.k, r1)


def test_coarse_and_refined_rules_agree():
    m, lam, r1 = 64, 1e-9, 250e3
    base = ergodic_rate_single(SYS, SR, lam, m, r1, check=False)
    fine = ergodic_rate_single(SYS, SR, lam, m, r1, QuadratureConfig().refined(), check=False)
    assert base == pytest.approx(fine, rel=1e-8)
    unfolded = ergodic_rate_single(SYS, SR, lam, m, r1, QuadratureConfig(phi_symmetry_fold=1),
                                   check=False)
    assert base == pytest.approx(unfolded, rel=1e-10)


def test_refinement_disagreement_reports_both_values():
    calls = iter([1.0, 1.01])
    with pytest.raises(NumericFailure) as err:
        _with_refinement(lambda q: next(calls), QuadratureConfig(), True)
    assert err.value.partial == (1.0, 1.01)


def test_panel_budget_exhaustion_fails_loudly():
    with pytest.raises(NumericFailure):
        ergodic_rate_single(SYS, SR, 1e-9, 256, 250e3, QuadratureConfig(max_panels=3))


def test_domain_checks():
    with pytest.raises(ArgumentError):
        ergodic_rate_single(SYS, SR, 0.0, 16, 1e5)
    with pytest.raises(ArgumentError):
        QuadratureConfig(n_r=2)
    with pytest.raises(ArgumentError):
        QuadratureConfig(phi_symmetry_fold=4)
    grid = build_grid(16, 1.0, math.inf, SYS, max_index=1)
    with pytest.raises(ArgumentError):
        ergodic_rate_multibeam_user1(SYS, SR, 1e-10, 16, grid, interferers="some")
