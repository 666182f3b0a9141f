import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbitbeam.beams import (MAX_STEERING_SIDE, build_grid, default_theta_3db,
                             dirichlet_complex, fejer_kernel, footprint_radius, phased_gain,
                             phased_gain_cos, reflector_gain, reflector_pattern,
                             steering_vector, upa_steering_vector)
from orbitbeam.errors import ArgumentError, ConfigurationError
from orbitbeam.geometry import GroundPoint, SystemParams

SYS = SystemParams(p0_watt=10.0)
H = SYS.altitude_m


@pytest.mark.parametrize("m,ell", [(16, 1.0), (64, 1.0), (256, 0.5), (32, 0.25)])
def test_footprint_closed_form(m, ell):
    assert footprint_radius(m, ell, H) == pytest.approx(H / math.sqrt(m ** (2 * ell) - 1),
                                                        rel=1e-12)


def test_square_grid_counts_and_order():
    grid = build_grid(32, 1.0, math.inf, SYS, max_index=1)
    assert grid.k == 9
    assert (grid.beams[0].index_n, grid.beams[0].index_m) == (0, 0)
    assert [(b.index_n, b.index_m) for b in grid.beams[1:5]] == [(-1, 0), (0, -1), (0, 1),
                                                                 (1, 0)]
    assert grid.is_symmetric
    assert build_grid(32, 1.0, math.inf, SYS, max_index=2).k == 25


def test_visible_grid_stays_inside_unit_circle():
    grid = build_grid(16, 0.5, math.inf, SYS)
    c = grid.cos_xy
    assert np.all(np.hypot(c[:, 0], c[:, 1]) < 1.0)
    # pitch 2 / M^l = 0.5 gives the integer points strictly inside radius 2
    assert grid.k == sum(1 for n in range(-2, 3) for m in range(-2, 3) if n * n + m * m < 4)
    assert grid.is_symmetric


def test_coverage_radius_filters_and_centres_project():
    grid = build_grid(32, 1.0, 2.5e6, SYS)
    assert np.all(np.hypot(*grid.centers_xy.T) <= 2.5e6)
    b = grid.beams[1]
    d = math.sqrt(b.ground_center.x_m**2 + b.ground_center.y_m**2 + H**2)
    assert (b.ground_center.x_m / d, b.ground_center.y_m / d) == pytest.approx((b.cos_x, b.cos_y))


@pytest.mark.parametrize("kwargs,exc", [({"m_side": 1}, ArgumentError),
                                        ({"ell": 0.0}, ArgumentError),
                                        ({"r_cov_m": 0.0}, ConfigurationError)])
def test_grid_rejects_bad_inputs(kwargs, exc):
    args = {"m_side": 16, "ell": 1.0, "r_cov_m": math.inf, "sys": SYS} | kwargs
    with pytest.raises(exc):
        build_grid(**args)


def test_grid_csv_has_one_row_per_beam():
    grid = build_grid(16, 1.0, math.inf, SYS, max_index=1)
    buf = io.StringIO()
    grid.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("k,n,m,cos_x") and len(lines) == 1 + grid.k


@given(m=st.integers(2, 512), d=st.floats(-2.0, 2.0))
def test_fejer_bounded_and_even(m, d):
    f = fejer_kernel(m, d)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(fejer_kernel(m, -d), abs=1e-12)


def test_fejer_nulls_and_peak():
    m = 16
    assert fejer_kernel(m, 0.0) == 1.0
    assert fejer_kernel(m, 2.0) == 1.0
    np.testing.assert_allclose(fejer_kernel(m, 2.0 * np.arange(1, m) / m), 0.0, atol=1e-14)


@pytest.mark.parametrize("m", [4, 9, 16])
def test_dirichlet_equals_explicit_inner_product(m):
    rng = np.random.default_rng(m)
    for a, b in rng.uniform(-1, 1, (20, 2)):
        ref = np.vdot(steering_vector(m, a), steering_vector(m, b))
        assert dirichlet_complex(m, a - b) == pytest.approx(ref, abs=1e-13)
    assert dirichlet_complex(m, 2.0) == pytest.approx(
        np.vdot(steering_vector(m, 1.0), steering_vector(m, -1.0)), abs=1e-13)


def test_upa_gain_from_explicit_vectors():
    m, (ux, uy), (cx, cy) = 8, (0.03, -0.11), (0.0, -0.25)
    v = np.vdot(upa_steering_vector(m, cx, cy), upa_steering_vector(m, ux, uy))
    assert abs(v) ** 2 == pytest.approx(phased_gain_cos(m, ux, uy, cx, cy), rel=1e-12)


def test_phased_gain_peaks_on_boresight():
    assert phased_gain(32, GroundPoint(0.0, 0.0), (0.0, 0.0), SYS) == 1.0
    # one pitch away sits on a null
    r = math.tan(math.asin(2.0 / 32)) * H
    assert phased_gain(32, GroundPoint(r, 0.0), (0.0, 0.0), SYS) == pytest.approx(0.0, abs=1e-20)


def test_steering_vector_size_limit():
    steering_vector(MAX_STEERING_SIDE, 0.1)
    with pytest.raises(ArgumentError):
        steering_vector(MAX_STEERING_SIDE + 1, 0.1)


def test_reflector_half_power():
    assert reflector_pattern(0.0) == 1.0
    assert reflector_pattern(2.07123) == pytest.approx(0.5, abs=2e-5)
    th = default_theta_3db(32)
    assert reflector_gain(H * math.tan(th), 0.0, th, SYS) == pytest.approx(0.5, abs=2e-5)
    with pytest.raises(ArgumentError):
        reflector_gain(-1.0, 0.0, th, SYS)
