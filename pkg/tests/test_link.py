import math

import numpy as np
import pytest

from orbitbeam.beams import build_grid, footprint_radius, upa_steering_vector
from orbitbeam.errors import ArgumentError, ZFUnavailable
from orbitbeam.fading import SR_SCENARIOS
from orbitbeam.geometry import GroundPoint, SystemParams, noise_normalized_power
from orbitbeam.link import (LinkSample, MonteCarloConfig, RateEstimate, _draw_block,
                            _rates_chunk, gram_matrix, monte_carlo_rate, precoder_rates_mrt_zf,
                            sinr_fixed_beam, snr_single)

SYS = SystemParams(p0_watt=10.0)
SR = SR_SCENARIOS["average"]
H = SYS.altitude_m
RHO1 = noise_normalized_power(SYS) * SYS.antenna_gain


def _ground(cx, cy):
    s = math.sqrt(1.0 - cx * cx - cy * cy)
    return GroundPoint(cx * H / s, cy * H / s)


def test_boresight_snr_matches_hand_budget():
    assert snr_single(SYS, (0.0, 0.0), GroundPoint(0.0, 0.0), 1.0, 32) == pytest.approx(
        7.2975234 * 32**2, rel=1e-7)
    null = _ground(2.0 / 32, 0.0)
    assert snr_single(SYS, (0.0, 0.0), null, 1.0, 32) < 1e-20


def test_single_beam_sinr_is_snr():
    grid = build_grid(16, 1.0, 1.0, SYS)
    assert grid.k == 1
    user = GroundPoint(4e4, -1e4)
    s = LinkSample.build(grid, [user], [0.7 - 0.2j], SYS)
    assert sinr_fixed_beam(SYS, grid, s, 0) == pytest.approx(
        snr_single(SYS, (0.0, 0.0), user, 0.7 - 0.2j, 16), rel=1e-12)


def _sample(m=8, seed=0, absent=()):
    grid = build_grid(m, 1.0, math.inf, SYS, max_index=1)
    rng = np.random.default_rng(seed)
    users = []
    for k, b in enumerate(grid.beams):
        if k in absent:
            users.append(None)
            continue
        off = rng.uniform(-0.3, 0.3, 2) * b.footprint_radius_m
        users.append(GroundPoint(b.ground_center.x_m + off[0], b.ground_center.y_m + off[1]))
    g = rng.normal(size=grid.k) + 1j * rng.normal(size=grid.k)
    return grid, LinkSample.build(grid, users, g, SYS)


def test_gram_equals_explicit_channel_products():
    grid, s = _sample(absent=(3,))
    gm, idx = gram_matrix(grid, s, SYS)
    assert 3 not in idx
    h = np.array([grid.m_side * math.sqrt(s.path_loss[k]) * s.fading[k]
                  * upa_steering_vector(grid.m_side, *s.cos_xy[k]) for k in idx])
    np.testing.assert_allclose(gm, np.conj(h) @ h.T, rtol=1e-10, atol=1e-12 * np.abs(gm).max())
    np.testing.assert_allclose(gm, np.conj(gm.T))


def test_fixed_sinr_matches_explicit_beamformer_powers():
    grid, s = _sample(seed=3)
    m, k = grid.m_side, 2
    h = grid.m_side * math.sqrt(s.path_loss[k]) * s.fading[k] * upa_steering_vector(
        m, *s.cos_xy[k])
    w = [upa_steering_vector(m, *c) for c in grid.cos_xy]
    rho = RHO1 / grid.k
    powers = np.array([rho * abs(np.vdot(wi, h)) ** 2 for wi in w])
    ref = powers[k] / (powers.sum() - powers[k] + 1.0)
    assert sinr_fixed_beam(SYS, grid, s, k) == pytest.approx(ref, rel=1e-9)


def test_orthogonal_users_make_precoders_agree():
    grid = build_grid(16, 1.0, math.inf, SYS, max_index=1)
    users = [b.ground_center for b in grid.beams]
    s = LinkSample.build(grid, users, np.ones(grid.k), SYS)
    gm, _ = gram_matrix(grid, s, SYS)
    assert np.abs(gm - np.diag(np.diag(gm))).max() < 1e-12 * np.abs(gm).max()
    out = precoder_rates_mrt_zf(gm, SYS, grid.k)
    np.testing.assert_allclose(out["mrt"], out["zf"], rtol=1e-9)
    fixed = [sinr_fixed_beam(SYS, grid, s, k) for k in range(grid.k)]
    np.testing.assert_allclose(out["mrt"], fixed, rtol=1e-9)


def _pair(corr, snr):
    scale = snr / (RHO1 / 2)
    return scale * np.array([[1.0, corr], [corr, 1.0]], dtype=complex)


def test_correlated_pair_closed_forms():
    c, snr = 0.9, 50.0
    out = precoder_rates_mrt_zf(_pair(c, snr), SYS, 2)
    assert out["zf"] == pytest.approx([snr * (1 - c * c)] * 2, rel=1e-9)
    assert out["mrt"] == pytest.approx([snr / (snr * c * c + 1.0)] * 2, rel=1e-9)
    # low SNR and strong correlation: matched filtering wins
    low = precoder_rates_mrt_zf(_pair(0.99, 0.5), SYS, 2)
    assert np.all(low["zf"] < low["mrt"])


def test_collinear_users_make_zf_unavailable():
    with pytest.raises(ZFUnavailable):
        precoder_rates_mrt_zf(_pair(1.0, 10.0), SYS, 2)
    with pytest.raises(ArgumentError):
        precoder_rates_mrt_zf(_pair(0.0, 1.0), SYS, 0)


def test_rate_estimate_base_conversion():
    r = RateEstimate(math.log(2.0), 0.1, 10).in_base("2")
    assert r.mean == pytest.approx(1.0) and r.stderr == pytest.approx(0.1 / math.log(2.0))


def _cfg(**kw):
    grid = build_grid(16, 1.0, math.inf, SYS, max_index=1)
    args = dict(sys=SYS, sr=SR, lam=1e-12, grid=grid, trials=2500, seed=7,
                precoders=("fixed", "mrt", "zf"))
    return MonteCarloConfig(**(args | kw))


def test_vectorised_rates_match_per_drop_api():
    cfg = _cfg()
    xy, g = _draw_block(cfg, 0, 40)
    rates, _, act = _rates_chunk(cfg, xy, g)
    for t in range(40):
        users = [GroundPoint(*p) if not np.isnan(p[0]) else None for p in xy[t]]
        s = LinkSample.build(cfg.grid, users, g[t], SYS)
        for k in range(cfg.grid.k):
            ref = math.log1p(sinr_fixed_beam(SYS, cfg.grid, s, k)) if act[t, k] else 0.0
            assert rates["fixed"][t, k] == pytest.approx(ref, rel=1e-10, abs=1e-14)
        gm, idx = gram_matrix(cfg.grid, s, SYS)
        out = precoder_rates_mrt_zf(gm, SYS, cfg.grid.k)
        np.testing.assert_allclose(rates["mrt"][t, idx], np.log1p(out["mrt"]), rtol=1e-9)
        np.testing.assert_allclose(rates["zf"][t, idx], np.log1p(out["zf"]), rtol=1e-7)


def test_monte_carlo_independent_of_worker_count():
    a = monte_carlo_rate(_cfg(workers=1))
    b = monte_carlo_rate(_cfg(workers=3))
    assert a.sum_rate == b.sum_rate and a.per_beam == b.per_beam
    assert a.paired_gap == b.paired_gap
    c = monte_carlo_rate(_cfg(seed=8))
    assert c.sum_rate["fixed"] != a.sum_rate["fixed"]
    assert a.sum_rate["fixed"].trials == 2500
    assert a.zf_max_leakage < 1e-6


def test_sparse_users_give_zero_rate():
    r = footprint_radius(16, 1.0, H)
    lam = 1e-6 / (math.pi * r * r)
    res = monte_carlo_rate(_cfg(lam=lam, trials=500))
    assert res.mean_active < 0.01
    assert res.sum_rate["fixed"].mean < 0.1


def test_monte_carlo_config_validation():
    with pytest.raises(ArgumentError):
        _cfg(trials=0)
    with pytest.raises(ArgumentError):
        _cfg(precoders=("nope",))
    with pytest.raises(ArgumentError):
        _cfg(lam=0.0)
