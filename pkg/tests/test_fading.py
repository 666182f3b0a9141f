import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from orbitbeam.errors import ArgumentError
from orbitbeam.fading import (SR_SCENARIOS, ShadowedRicianParams, sr_cdf_table, sr_mgf,
                              sr_pdf, sr_sample, sr_sample_complex)

SCEN = list(SR_SCENARIOS.items())


def _quad_pdf(p, f):
    edges = [0.0, 1e-4, 1e-2, 0.3, 1.0, 3.0, 10.0, 40.0, 200.0]
    return sum(integrate.quad(lambda x: f(x) * sr_pdf(p, x), a, b, limit=200,
                              epsabs=1e-14, epsrel=1e-12)[0] for a, b in zip(edges, edges[1:]))


@pytest.mark.parametrize("name,p", SCEN)
def test_pdf_normalised_with_expected_mean(name, p):
    assert _quad_pdf(p, lambda x: 1.0) == pytest.approx(1.0, abs=1e-8)
    assert _quad_pdf(p, lambda x: x) == pytest.approx(p.mean_power, rel=1e-7)


@pytest.mark.parametrize("name,p", SCEN)
@pytest.mark.parametrize("s", [0.1, 1.0, 10.0, 1e3])
def test_mgf_matches_laplace_transform_of_pdf(name, p, s):
    assert sr_mgf(p, s) == pytest.approx(_quad_pdf(p, lambda x: math.exp(-s * x)), rel=1e-7)


@settings(max_examples=100, deadline=None)
@given(omega=st.floats(1e-4, 5.0), b0=st.floats(0.01, 1.0), m=st.floats(0.3, 30.0),
       s=st.floats(0.0, 1e6))
def test_mgf_is_a_valid_laplace_transform(omega, b0, m, s):
    p = ShadowedRicianParams(omega, b0, m)
    v = sr_mgf(p, s)
    assert 0.0 < v <= 1.0
    assert sr_mgf(p, 2 * s + 1e-3) <= v


def test_mgf_at_zero_is_one_and_vectorises():
    p = SR_SCENARIOS["average"]
    out = sr_mgf(p, np.array([0.0, 1.0, 2.0]))
    assert out.shape == (3,) and out[0] == 1.0 and out[1] > out[2]


def test_rayleigh_limit_without_line_of_sight():
    p = ShadowedRicianParams(0.0, 0.5, 1.0)
    assert sr_mgf(p, 3.0) == pytest.approx(1.0 / 4.0)


@pytest.mark.parametrize("name,p", SCEN)
def test_sampler_moments(name, p):
    rng = np.random.default_rng(0)
    x = sr_sample(p, rng, 400_000)
    assert abs(x.mean() - p.mean_power) < 4 * x.std() / math.sqrt(len(x))


def test_complex_sampler_shape_and_phase_symmetry():
    rng = np.random.default_rng(1)
    g = sr_sample_complex(SR_SCENARIOS["infrequent-light"], rng, (200_000,))
    assert g.dtype == complex and g.shape == (200_000,)
    assert abs(g.mean()) < 0.01


@pytest.mark.parametrize("name,p", SCEN)
def test_cdf_table_monotone_and_complete(name, p):
    x, c = sr_cdf_table(p, n=4001)
    assert np.all(np.diff(c) >= -1e-12)
    assert c[-1] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("args", [(-1.0, 0.1, 1.0), (1.0, 0.0, 1.0), (1.0, 0.1, 0.0)])
def test_invalid_parameters(args):
    with pytest.raises(ArgumentError):
        ShadowedRicianParams(*args)


def test_negative_arguments_rejected():
    p = SR_SCENARIOS["average"]
    with pytest.raises(ArgumentError):
        sr_pdf(p, -1.0)
    with pytest.raises(ArgumentError):
        sr_mgf(p, -0.1)
