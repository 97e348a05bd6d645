import mpmath as mp
import numpy as np
import pytest

from hypframes import hft
from hypframes.geometry import build_spatial_grid
from hypframes.spectral import random_pw_field


@pytest.mark.parametrize("lam,r", [(0.0, 0.7), (0.5, 1.0), (2.0, 3.0), (7.5, 5.0), (15.0, 2.2)])
def test_spherical_function_vs_legendre(lam, r):
    ref = float(mp.re(mp.legenp(-0.5 + 1j * lam, 0, mp.cosh(r), type=3)))
    assert hft.spherical_function(lam, r) == pytest.approx(ref, rel=1e-10, abs=1e-13)


def test_spherical_function_log_scale_large_r():
    r = 40.0
    v = hft.spherical_function(0.0, r, log_scale=True)
    ref = float(mp.re(mp.legenp(-0.5, 0, mp.cosh(r), type=3)) * mp.exp(r / 2))
    assert v == pytest.approx(ref, rel=1e-8)


def test_plancherel_density():
    lam = np.array([0.0, 1.0, 5.0])
    np.testing.assert_allclose(hft.plancherel_density(lam), lam * np.tanh(np.pi * lam) / (2 * np.pi))
    assert hft.laplacian_symbol(2.0) == -4.25


def test_poisson_kernel_integrates_to_one():
    b = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    assert np.mean(hft.poisson_kernel(0.3 + 0.4j, b)) == pytest.approx(1.0, rel=1e-12)
    assert np.max(np.abs(hft.horocycle_bracket(0j, b))) < 1e-15


def test_calibration_reproduces_constant(grids):
    c = hft.calibrate_plancherel_constant(*grids)
    assert c == pytest.approx(hft.PLANCHEREL_CONSTANT, rel=1e-10)


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_forward_matches_bessel_oracle(grids, p):
    grid, sgrid = grids
    F = hft.forward_hft(hft.radial_field(grid, lambda r: np.exp(-p * np.cosh(r))), sgrid)
    low = sgrid.lam <= 8
    oracle = hft.radial_oracle_transform(sgrid.lam[low], p)
    err = np.max(np.abs(F.values.mean(axis=1)[low] - oracle)) / np.max(np.abs(oracle))
    assert err < 1e-5
    assert F.norm() ** 2 == pytest.approx(hft.radial_oracle_norm2(p), rel=1e-3)


def test_radial_function_has_only_mode_zero(grids):
    grid, sgrid = grids
    F = hft.forward_hft(hft.radial_field(grid, lambda r: np.exp(-r**2)), sgrid)
    m = F.modes
    assert np.max(np.abs(m[:, 1:])) < 1e-12 * np.max(np.abs(m[:, 0]))


def test_radial_path_agrees(grids):
    grid, sgrid = grids
    f = lambda r: np.exp(-0.5 * (r / 0.4) ** 2)
    F = hft.forward_hft(hft.radial_field(grid, f), sgrid)
    lam = sgrid.lam[::16]
    ref = hft.radial_transform(f, lam, 4.0, 400)
    np.testing.assert_allclose(F.values.mean(axis=1)[::16], ref, atol=1e-9 * np.abs(ref).max())


@pytest.mark.parametrize("m", [0, 3, 17])
def test_kernel_modes_vs_hypergeometric(m):
    lam = np.array([0.3, 2.0, 6.5])
    K = hft.kernel_modes(lam, 1.4, 32)
    for i, l in enumerate(lam):
        assert K[m, i] == pytest.approx(hft.kernel_modes_hypergeometric(l, 1.4, m), rel=1e-10, abs=1e-14)


def test_forward_inverse_adjoint(grids, rng):
    grid, sgrid = grids
    T = hft.get_transform(grid, sgrid)
    u = rng.normal(size=grid.n_nodes) + 1j * rng.normal(size=grid.n_nodes)
    H = hft.SpectralField.from_modes(rng.normal(size=(sgrid.n_lam, sgrid.n_b)) + 0j, sgrid)
    lhs = hft.plancherel_inner(T.forward(u), H)
    rhs = grid.inner(u, T.inverse_modes(H.modes))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_round_trip_band_limited(grids, rng):
    grid, sgrid = grids
    f = random_pw_field(grid, sgrid, 8.0, rng)
    G = hft.forward_hft(f.without_spectrum(), sgrid)
    # forward(inverse) projects onto the truncated disk: the residual energy
    # is the energy of f beyond R_max
    exterior = f.norm() ** 2 - f.spatial_norm() ** 2
    assert 0 < exterior < 1e-5 * f.norm() ** 2
    assert hft.plancherel_norm(G - f.spectrum) ** 2 == pytest.approx(exterior, rel=0.1)


def test_inverse_warns_on_tail(coarse_sgrid):
    grid = build_spatial_grid(2.0, 16, 32)
    modes = np.zeros((coarse_sgrid.n_lam, coarse_sgrid.n_b), complex)
    modes[-1, 0] = 1.0
    with pytest.warns(RuntimeWarning, match="tail"):
        hft.inverse_hft(hft.SpectralField.from_modes(modes, coarse_sgrid), coarse_sgrid, grid)


def test_spectrum_csv(tmp_path, coarse_sgrid):
    F = hft.SpectralField.from_modes(np.ones((coarse_sgrid.n_lam, coarse_sgrid.n_b), complex), coarse_sgrid)
    hft.write_spectrum_csv(F, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "lam,b,re,im" and len(lines) == 1 + coarse_sgrid.n_lam * coarse_sgrid.n_b


def test_bessel_oracle_real():
    # K_{i lam}(p) for real lam is real; check one value against quadrature
    from scipy.integrate import quad

    lam, p = 1.7, 2.0
    ref, _ = quad(lambda t: np.exp(-p * np.cosh(t)) * np.cos(lam * t), 0, 10, epsabs=1e-14)
    assert hft.bessel_k_imag_order(lam, p)[0] == pytest.approx(ref, rel=1e-9)
