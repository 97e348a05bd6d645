import json

import numpy as np
import pytest
from scipy.integrate import quad

from hypframes import filters
from hypframes import frames as fr
from hypframes.hft import SpatialField, plancherel_density


def test_rate_radius():
    assert fr.rate_radius(0, 0.5, 2.0) == pytest.approx(2 * np.sqrt(0.5) / np.sqrt(4.25))
    assert fr.rate_radius(2, 0.5, 2.0) < fr.rate_radius(1, 0.5, 2.0)
    with pytest.raises(ValueError):
        fr.rate_radius(0, 1.5, 2.0)
    with pytest.raises(ValueError):
        fr.rate_radius(0, 0.5, -1.0)


def test_sampling_constant_one(frame):
    b = frame.bands[0]
    one = np.ones(frame.grid.n_nodes)
    A = np.array([fr.sample_functional(k, one, b.cover, b.weights) for k in range(b.cover.n_cells)])
    assert np.sum(np.abs(A) ** 2) == pytest.approx(b.cover.cell_measures.sum(), rel=1e-10)
    assert b.cover.cell_measures.sum() == pytest.approx(frame.grid.total_measure(), rel=1e-10)


def test_theta_rows_match_builder(frame):
    b = frame.bands[1]
    for row in (0, b.n_atoms // 2):
        th = fr.build_theta(int(b.nu[row]), int(b.k[row]), frame.pu, b.cover, b.weights)
        np.testing.assert_allclose(th.values, b.B.getrow(row).toarray().ravel(), rtol=1e-13, atol=0)


def test_measure_condition(frame):
    for b in frame.bands:
        assert b.weights.measure_ratio <= 1 + frame.delta


def test_dual_route_coefficients(frame):
    f = fr.test_fields(frame, 1, 11)[0].without_spectrum()
    cs = frame.analyze(f)
    for j in range(frame.J_max + 1):
        rows = frame.atom_rows_near(j, 0.2 + 0.1j, 3)
        atoms = [frame.atom(j, int(r)) for r in rows]
        direct = fr.analyze_direct(f, atoms)
        np.testing.assert_allclose(direct, cs.bands[j]["c"][rows], rtol=1e-9, atol=1e-14)


def test_band_purity(frame):
    lam = frame.sgrid.lam
    for j in range(frame.J_max + 1):
        lo, hi = filters.band_of(j)
        assert np.all(frame.profiles[j][(lam < lo) | (lam > hi)] == 0)
        atom = frame.atom(j, int(frame.atom_rows_near(j)[0]))
        assert fr.out_of_band_fraction(atom) <= 1e-10
        assert atom.values.norm() > 0


def test_frame_operator_selfadjoint_positive(frame, rng):
    g = frame.grid
    h1 = fr.test_fields(frame, 1, 21)[0].values
    h2 = rng.normal(size=g.n_nodes) * np.exp(-g.node_radius)
    S1, S2 = frame.apply_S_grid(h1), frame.apply_S_grid(h2)
    a, b = g.inner(S1, h2), g.inner(h1, S2)
    assert abs(a - b) <= 1e-8 * abs(a)
    assert g.inner(S1, h1).real > 0


def test_synthesis_is_adjoint_of_analysis(frame):
    f = fr.test_fields(frame, 1, 3)[0]
    cs = frame.analyze(f)
    G = frame.synthesize(cs)
    # <S f, f> = sum |c|^2
    assert G.inner(f.spectrum).real == pytest.approx(cs.energy(), rel=1e-10)


def test_frame_bounds_short(frame):
    rep = fr.frame_bounds(frame, n_trials=10, seed=4)
    assert rep["pass"]
    lo, hi = rep["interval"]
    assert lo <= rep["min_ratio"] <= rep["max_ratio"] <= hi
    assert set(rep["per_band"]) == {0, 1, 2, 3}
    with pytest.raises(ValueError):
        fr.frame_bounds(frame, n_trials=5)


def test_reconstruct_first_step(frame):
    f = fr.span_fields(frame, 1, 2)[0]
    out, info = fr.reconstruct(frame.analyze(f), frame, 3, truth=f)
    assert info["factors"][0] <= frame.delta + 0.05
    assert info["errors"][-1] < info["errors"][0]
    assert isinstance(out, SpatialField)


def test_reconstruct_zero(frame):
    zero = SpatialField(np.zeros(frame.grid.n_nodes, complex), frame.grid)
    out, info = fr.reconstruct(frame.analyze(zero), frame, 2)
    assert np.all(out.values == 0)
    assert info["updates"] == [0.0, 0.0]


class _Expanding:
    """Stub frame with S = 3 I, so I - S has norm 2."""

    def __init__(self, grid):
        self.grid = grid

    def synthesize_grid(self, cs):
        return 3.0 * np.ones(self.grid.n_nodes)

    def apply_S_grid(self, h):
        return 3.0 * h


def test_reconstruct_detects_divergence(small_grid):
    truth = SpatialField(np.ones(small_grid.n_nodes), small_grid)
    with pytest.raises(fr.ReconstructionError, match="frame bounds"):
        fr.reconstruct(None, _Expanding(small_grid), 10, truth=truth)


def test_coefficient_json(frame, tmp_path):
    cs = frame.analyze(fr.test_fields(frame, 1, 0)[0])
    cs.to_json(tmp_path / "c.json")
    doc = json.loads((tmp_path / "c.json").read_text())
    assert len(doc["coefficients"]) == frame.n_atoms()
    keys = [tuple(c[:3]) for c in doc["coefficients"]]
    assert keys == sorted(keys)


@pytest.mark.parametrize("j", [0, 2])
def test_band_kernel_at_zero(j):
    lo, hi = filters.band_of(j)
    ref, _ = quad(lambda l: filters.filter_profile(j, l) * plancherel_density(l), lo, hi, limit=200, epsabs=1e-13)
    assert fr.band_kernel(j, [0.0], 8.0)[0] == pytest.approx(ref, rel=1e-9)


def test_decay_profile(frame):
    j = 1
    theta = frame.atom(j, int(frame.atom_rows_near(j)[0])).theta
    p = fr.decay_profile(theta, j, N=2, R_max=10.0, J_max=frame.J_max)
    assert p["bounded"]
    assert [r["r"] for r in p["rows"]] == list(np.arange(1.0, 9.0))
    p0 = fr.decay_profile(theta, j, N=0, R_max=10.0, J_max=frame.J_max)
    assert all(np.isfinite(r["weighted"]) for r in p0["rows"])
    with pytest.raises(ValueError):
        fr.decay_profile(theta, j, N=5)


def test_summary(frame):
    s = frame.summary()
    assert [b["j"] for b in s["bands"]] == [0, 1, 2, 3]
    assert sum(b["n_atoms"] for b in s["bands"]) == frame.n_atoms()
    radii = [b["r"] for b in s["bands"]]
    assert radii == sorted(radii, reverse=True)
