import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hypframes.geometry import (
    DomainError,
    Isometry,
    Point,
    apply_isometry,
    ball_volume,
    build_spatial_grid,
    hyp_distance,
    laplace_beltrami_polar,
    radius_of,
    translation,
)
from hypframes.hft import spherical_function

disk = st.builds(lambda r, t: np.tanh(r / 2) * np.exp(1j * t),
                 st.floats(0, 5), st.floats(0, 2 * np.pi))


def test_point_outside_disk():
    with pytest.raises(DomainError):
        Point(0.8, 0.7)
    with pytest.raises(DomainError):
        hyp_distance(0, 1.0)


def test_polar_point_radius():
    assert radius_of(Point.polar(2.5, 1.0)) == pytest.approx(2.5, rel=1e-14)


@given(disk, disk)
def test_distance_matches_arccosh(p, q):
    ref = np.arccosh(1 + 2 * abs(p - q) ** 2 / ((1 - abs(p) ** 2) * (1 - abs(q) ** 2)))
    assert hyp_distance(p, q) == pytest.approx(ref, rel=1e-7, abs=1e-7)


@given(disk, disk, disk)
def test_triangle_inequality(p, q, s):
    assert hyp_distance(p, s) <= hyp_distance(p, q) + hyp_distance(q, s) + 1e-9


@given(disk, disk, disk, st.floats(0, 2 * np.pi))
def test_isometry_invariance(p, q, w, phi):
    T = Isometry(0.9 * w / max(1, abs(w)), phi)
    assert hyp_distance(T(p), T(q)) == pytest.approx(hyp_distance(p, q), rel=1e-6, abs=1e-8)


@given(disk, st.floats(0, 2 * np.pi), disk)
def test_isometry_inverse_and_compose(w, phi, z):
    T = Isometry(0.9 * w, phi)
    S = translation(0.3 - 0.2j)
    assert abs(T.inverse()(T(z)) - z) < 1e-9
    assert abs(T.compose(S)(z) - T(S(z))) < 1e-9


def test_translation_moves_origin():
    w = 0.4 + 0.1j
    assert apply_isometry(translation(w), Point(0, 0)).z == pytest.approx(w)


@pytest.mark.parametrize("R", [0.01, 0.5, 3.0, 12.0])
def test_ball_volume_oracle(R):
    ref, _ = quad(lambda r: 2 * np.pi * np.sinh(r), 0, R)
    assert ball_volume(R) == pytest.approx(ref, rel=1e-12)


def test_grid_integrates_area():
    g = build_spatial_grid(2.0, 32, 16)
    assert g.total_measure() == pytest.approx(2 * np.pi * (np.cosh(2) - 1), rel=1e-10)
    assert np.all(g.weights > 0)
    assert radius_of(g.z).max() <= 2.0


def test_graded_grid_area_and_bounds(grid):
    assert grid.total_measure() == pytest.approx(ball_volume(grid.R_max), rel=1e-10)
    assert grid.node_radius.max() < grid.R_max


@pytest.mark.parametrize("k", [1, 5, 31])
def test_angular_rule_exact_for_trig(k):
    g = build_spatial_grid(1.0, 8, 32)
    assert abs(g.integrate(np.cos(k * g.theta))) < 1e-12


def test_radial_integral_oracle():
    g = build_spatial_grid(6.0, 64, 8)
    p = 1.5
    ref, _ = quad(lambda r: 2 * np.pi * np.exp(-p * np.cosh(r)) * np.sinh(r), 0, 6.0)
    assert g.integrate(np.exp(-p * np.cosh(g.node_radius))) == pytest.approx(ref, rel=1e-12)


def test_grid_rejects_bad_input():
    with pytest.raises(DomainError):
        build_spatial_grid(-1.0, 16, 16)
    with pytest.raises(DomainError):
        build_spatial_grid(1.0, 4, 16)


def test_laplace_beltrami_eigenfunction():
    # Delta phi_lam = -(lam^2 + 1/4) phi_lam
    lam = 1.3
    r = np.linspace(0.5, 3.0, 201)
    theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    phi = np.array([spherical_function(lam, ri) for ri in r])
    f = np.repeat(phi[:, None], theta.size, axis=1)
    L = laplace_beltrami_polar(f, r, theta)
    inner = slice(2, -2)
    np.testing.assert_allclose(L[inner], -(lam**2 + 0.25) * f[inner], atol=1e-6)
