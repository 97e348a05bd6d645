"""Average-sampling frames ``Theta_{nu;j,k} = F_j(Delta) theta_{nu;j,k}``.

For band ``j`` the functions ``theta_{nu;j,k} = sqrt|U_k| / |U_k|_psi psi_k phi_nu``
are stored as the rows of a sparse matrix ``B_j`` (values at grid nodes).
Coefficients are ``<f, Theta> = <F_j(Delta) f, theta> = B_j (W F_j f)`` and the
frame operator is ``S f = sum_j F_j(Delta) B_j^T B_j W F_j(Delta) f``.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial.legendre import leggauss
from scipy import sparse

from . import filters
from .geometry import SpatialGrid, hyp_distance
from .hft import (
    SpatialField,
    SpectralField,
    SpectralGrid,
    get_transform,
    plancherel_density,
    plancherel_norm,
    spectrum_of,
    spherical_function,
)
from .lattice import (
    Cover,
    NodeIndex,
    PartitionOfUnity,
    Weights,
    build_cover,
    build_lattice,
    build_partition_of_unity,
    build_weights,
)
from .spectral import band_envelope, synthesize


def rate_radius(j: int, delta: float, a0: float) -> float:
    """``r_j = a0 delta^(1/2) (omega_j^2 + 1/4)^(-1/2)`` with ``omega_j = 2^(j+1)``."""
    if not 0 < delta <= 1 or a0 <= 0:
        raise ValueError("require 0 < delta <= 1 and a0 > 0")
    return a0 * np.sqrt(delta) / np.sqrt(4.0 ** (j + 1) + 0.25)


# ---------------------------------------------------------------------------
# sampling functionals


def _values(F) -> np.ndarray:
    return F.values if isinstance(F, SpatialField) else np.asarray(F)


def psi_functional(k: int, F, cov: Cover, wts: Weights) -> complex:
    """``Psi_k(F) = |U_k|_psi^-1 int_{U_k} F psi_k dmu``."""
    wm = wts.weighted_measures[k]
    if wm <= 0:
        raise ValueError(f"cell {k} has zero weighted measure")
    idx = cov.cell(k)
    w = cov.grid.weights[idx] * wts.psi[idx]
    return np.dot(w, _values(F)[idx]) / wm


def sample_functional(k: int, F, cov: Cover, wts: Weights) -> complex:
    """``A_k(F) = sqrt|U_k| Psi_k(F)``."""
    return np.sqrt(cov.cell_measures[k]) * psi_functional(k, F, cov, wts)


def theta_scale(cov: Cover, wts: Weights) -> np.ndarray:
    return np.sqrt(cov.cell_measures) / wts.weighted_measures


def build_theta(nu: int, k: int, pu: PartitionOfUnity, cov: Cover, wts: Weights) -> SpatialField:
    """``theta_{nu,k} = sqrt|U_k| / |U_k|_psi psi_k phi_nu`` on the grid."""
    grid = cov.grid
    vals = np.zeros(grid.n_nodes, dtype=complex)
    idx = cov.cell(k)
    phi = pu.phi.getrow(nu).toarray().ravel()
    vals[idx] = theta_scale(cov, wts)[k] * wts.psi[idx] * phi[idx]
    f = SpatialField(vals, grid)
    f.diagnostics["empty"] = not np.any(vals)
    return f


# ---------------------------------------------------------------------------
# frame containers


@dataclass(frozen=True)
class FrameIndex:
    j: int
    nu: int
    k: int


@dataclass(eq=False)
class FrameBand:
    """Sampling data of one band: cover, weights and the theta matrix."""

    j: int
    r: float
    cover: Cover
    weights: Weights
    B: sparse.csr_matrix
    nu: np.ndarray
    k: np.ndarray
    culled: int

    @property
    def n_atoms(self) -> int:
        return self.B.shape[0]


@dataclass(eq=False)
class FrameAtom:
    """Atom ``F_j(Delta) theta`` materialized on the grid with its spectrum."""

    index: FrameIndex
    values: SpatialField
    band: tuple[float, float]
    theta: SpatialField


@dataclass
class CoefficientSet:
    """Coefficients per band in the row order of ``B_j``."""

    bands: dict
    source: str = ""

    def band_energy(self, j: int) -> float:
        return float(np.sum(np.abs(self.bands[j]["c"]) ** 2))

    def energy(self) -> float:
        return float(sum(self.band_energy(j) for j in self.bands))

    def items(self):
        """``(FrameIndex, coefficient)`` pairs in deterministic (j, nu, k) order."""
        for j in sorted(self.bands):
            b = self.bands[j]
            order = np.lexsort((b["k"], b["nu"]))
            for i in order:
                yield FrameIndex(j, int(b["nu"][i]), int(b["k"][i])), complex(b["c"][i])

    def to_json(self, path) -> None:
        doc = {"source": self.source,
               "coefficients": [[ix.j, ix.nu, ix.k, c.real, c.imag] for ix, c in self.items()]}
        with open(path, "w") as fh:
            json.dump(doc, fh)


def _theta_matrix(pu: PartitionOfUnity, cov: Cover, wts: Weights, cull: float):
    coo = pu.phi.tocoo()
    nu, x, phi = coo.row, coo.col, coo.data
    k = cov.assignment[x]
    vals = theta_scale(cov, wts)[k] * wts.psi[x] * phi
    key = nu.astype(np.int64) * cov.n_cells + k
    keys, row = np.unique(key, return_inverse=True)
    n_rows = keys.size
    W = cov.grid.weights
    norms = np.sqrt(np.bincount(row, weights=W[x] * vals**2, minlength=n_rows))
    keep = norms >= cull * norms.max()
    new_id = np.cumsum(keep) - 1
    sel = keep[row]
    B = sparse.csr_matrix((vals[sel], (new_id[row[sel]], x[sel])), shape=(int(keep.sum()), cov.grid.n_nodes))
    return B, (keys[keep] // cov.n_cells), (keys[keep] % cov.n_cells), int((~keep).sum())


class Frame:
    """Atoms ``Theta_{nu;j,k}`` for bands ``j = 0..J_max`` on one grid pair.

    Parameters
    ----------
    grid, sgrid : grids shared by all bands.
    J_max, delta, a0 : frame parameters; band ``j`` uses an ``r_j``-lattice.
    lam_pu : radius of the fixed partition of unity.
    pu_normalization : ``"l2"`` (``sum phi^2 = 1``) or ``"sum"``.
    restrict : if true, filters are multiplied by ``1[lam <= 2^J_max]`` so
        that ``sum_j F_j^2 = 1`` on the whole spectral grid.
    """

    def __init__(self, grid: SpatialGrid, sgrid: SpectralGrid, J_max: int = 3, delta: float = 0.5,
                 a0: float = 2.0, lam_pu: float = 1.0, seed: int = 0, pu_normalization: str = "l2",
                 cull: float = 1e-10, restrict: bool = True, eps: float | None = None):
        t0 = time.perf_counter()
        self.grid, self.sgrid = grid, sgrid
        self.J_max, self.delta, self.a0, self.seed = J_max, delta, a0, seed
        self.bank = filters.make_filter_bank(J_max)
        self.transform = get_transform(grid, sgrid)
        index = NodeIndex(grid)
        self.pu = build_partition_of_unity(lam_pu, grid, seed, pu_normalization, index)
        cap = (sgrid.lam <= 2.0**J_max) if restrict else np.ones(sgrid.n_lam, bool)
        self.profiles = [self.bank.F(j, sgrid.lam) * cap for j in range(J_max + 1)]
        self.bands: list[FrameBand] = []
        for j in range(J_max + 1):
            r = rate_radius(j, delta, a0)
            lat = build_lattice(r, grid, seed, index)
            cov = build_cover(lat)
            wts = build_weights(cov, delta, eps)
            B, nu, k, culled = _theta_matrix(self.pu, cov, wts, cull)
            self.bands.append(FrameBand(j, r, cov, wts, B, nu, k, culled))
        self.build_seconds = time.perf_counter() - t0

    # -- band-wise operators -------------------------------------------------

    def band_field(self, j: int, G: SpectralField) -> np.ndarray:
        """Values of ``F_j(Delta) f`` on the grid from the spectrum ``G``."""
        return self.transform.inverse_modes(G.multiply(self.profiles[j]).modes)

    def analyze_spectrum(self, G: SpectralField) -> CoefficientSet:
        W = self.grid.weights
        out = {}
        for b in self.bands:
            c = b.B @ (W * self.band_field(b.j, G))
            out[b.j] = {"nu": b.nu, "k": b.k, "c": c}
        return CoefficientSet(out)

    def analyze(self, f: SpatialField, source: str = "") -> CoefficientSet:
        """``c_{nu;j,k} = <F_j(Delta) f, theta_{nu;j,k}>`` (self-adjoint route)."""
        cs = self.analyze_spectrum(spectrum_of(f, self.sgrid))
        cs.source = source
        return cs

    def synthesize_band(self, j: int, c: np.ndarray) -> SpectralField:
        """Spectrum of ``sum_{nu,k} c Theta_{nu;j,k}``."""
        h = self.bands[j].B.T @ c
        return SpectralField.from_modes(self.transform.forward_modes(h), self.sgrid).multiply(self.profiles[j])

    def synthesize(self, cs: CoefficientSet) -> SpectralField:
        out = None
        for b in self.bands:
            s = self.synthesize_band(b.j, cs.bands[b.j]["c"])
            out = s if out is None else out + s
        return out

    def apply_S(self, G: SpectralField) -> SpectralField:
        """Frame operator on a spectrum."""
        return self.synthesize(self.analyze_spectrum(G))

    def apply_S_grid(self, h: np.ndarray) -> np.ndarray:
        """``S h = sum <h, Theta>_W Theta`` for grid values ``h`` and grid atoms.

        Uses ``M_j = inverse F_j forward`` on grid values, so content that the
        filters spread beyond the truncation radius is dropped at every step.
        """
        W = self.grid.weights
        T = self.transform
        H = SpectralField.from_modes(T.forward_modes(h), self.sgrid)
        acc = None
        for b in self.bands:
            u = b.B.T @ (b.B @ (W * self.band_field(b.j, H)))
            U = SpectralField.from_modes(T.forward_modes(u), self.sgrid).multiply(self.profiles[b.j])
            acc = U if acc is None else acc + U
        return T.inverse_modes(acc.modes)

    def synthesize_grid(self, cs: CoefficientSet) -> np.ndarray:
        """Grid values of ``sum c Theta``."""
        return self.transform.inverse_modes(self.synthesize(cs).modes)

    # -- atoms -----------------------------------------------------------------

    def n_atoms(self) -> int:
        return sum(b.n_atoms for b in self.bands)

    def atom(self, j: int, row: int) -> FrameAtom:
        b = self.bands[j]
        theta_vals = b.B.getrow(row).toarray().ravel().astype(complex)
        theta = SpatialField(theta_vals, self.grid)
        G = SpectralField.from_modes(self.transform.forward_modes(theta_vals), self.sgrid).multiply(self.profiles[j])
        vals = self.transform.inverse_modes(G.modes)
        return FrameAtom(FrameIndex(j, int(b.nu[row]), int(b.k[row])), SpatialField(vals, self.grid, G),
                         filters.band_of(j), theta)

    def atom_rows_near(self, j: int, z0: complex = 0j, count: int = 1) -> np.ndarray:
        """Rows of band ``j`` whose theta has the most mass nearest ``z0``."""
        b = self.bands[j]
        centers = b.cover.lattice.centers[b.k]
        d = hyp_distance(centers, z0)
        mass = np.sqrt(np.asarray(b.B.multiply(b.B) @ self.grid.weights)).ravel()
        order = np.lexsort((-mass, np.round(d, 9)))
        return order[:count]

    def summary(self) -> dict:
        return {
            "J_max": self.J_max, "delta": self.delta, "a0": self.a0,
            "n_nodes": self.grid.n_nodes, "n_parts": self.pu.n_parts,
            "build_seconds": round(self.build_seconds, 2),
            "bands": [{"j": b.j, "r": b.r, "n_centers": b.cover.lattice.n_centers,
                       "n_atoms": b.n_atoms, "culled": b.culled,
                       "measure_ratio": b.weights.measure_ratio, "eps": b.weights.eps}
                      for b in self.bands],
        }


def build_frame_atoms(J_max: int, delta: float, a0: float, cfg) -> Frame:
    """Build the frame for a configuration (see :func:`frame_from_config`)."""
    return frame_from_config(cfg, J_max=J_max, delta=delta, a0=a0)


def frame_grids(cfg):
    from .geometry import build_spatial_grid
    from .hft import build_spectral_grid

    grid = build_spatial_grid(cfg.R_max, cfg.n_r, cfg.n_theta, spacing=cfg.spacing,
                              fine_radius=cfg.fine_radius, growth=cfg.growth)
    sgrid = build_spectral_grid(cfg.lam_max, cfg.n_lam, cfg.n_b)
    return grid, sgrid


def frame_from_config(cfg, **over) -> Frame:
    grid, sgrid = frame_grids(cfg)
    p = dict(J_max=cfg.J_max, delta=cfg.delta, a0=cfg.a0 if cfg.a0 != "calibrate" else 2.0,
             lam_pu=cfg.lam_pu, seed=cfg.seed)
    p.update(over)
    return Frame(grid, sgrid, **p)


# ---------------------------------------------------------------------------
# checks


def analyze_direct(f: SpatialField, atoms: list[FrameAtom]) -> np.ndarray:
    """``<f, Theta>`` by grid quadrature against materialized atoms."""
    g = f.grid
    return np.array([g.inner(f.values, a.values.values) for a in atoms])


def out_of_band_fraction(atom: FrameAtom) -> float:
    """Share of the atom's spectral energy outside its band."""
    G = atom.values.spectrum
    lo, hi = atom.band
    lam = G.sgrid.lam
    outside = (lam < lo) | (lam > hi)
    tot = plancherel_norm(G) ** 2
    return float(plancherel_norm(G.multiply(outside)) ** 2 / tot) if tot > 0 else 0.0


def test_fields(frame: Frame, n: int, seed: int, envelope=None) -> list[SpatialField]:
    """Seeded band-limited fields with spectrum in ``[0, 2^J_max]``."""
    rng = np.random.default_rng(seed)
    env = envelope or band_envelope(0.0, 2.0**frame.J_max)
    out = []
    while len(out) < n:
        f = synthesize(frame.grid, frame.sgrid, env, rng)
        if f.norm() > 1e-12:
            out.append(f)
    return out


def frame_bounds(frame: Frame, delta: float | None = None, n_trials: int = 20, seed: int = 0,
                 tol: float = 0.05, fields: list[SpatialField] | None = None) -> dict:
    """Rayleigh quotients ``sum |<f, Theta>|^2 / ||f||^2`` on random band-limited fields."""
    if n_trials < 10 and fields is None:
        raise ValueError("n_trials must be at least 10")
    delta = frame.delta if delta is None else delta
    fields = fields if fields is not None else test_fields(frame, n_trials, seed)
    ratios, per_band = [], {b.j: [] for b in frame.bands}
    for f in fields:
        G = spectrum_of(f, frame.sgrid)
        cs = frame.analyze_spectrum(G)
        ratios.append(cs.energy() / plancherel_norm(G) ** 2)
        for b in frame.bands:
            nb = plancherel_norm(G.multiply(frame.profiles[b.j])) ** 2
            if nb > 1e-20 * plancherel_norm(G) ** 2:
                per_band[b.j].append(cs.band_energy(b.j) / nb)
    lo, hi = 1 - delta - tol, 1 + delta + tol
    ratios = np.asarray(ratios)
    band_rep = {j: {"min": float(np.min(v)), "max": float(np.max(v))} for j, v in per_band.items() if v}
    band_ok = all(lo <= v["min"] and v["max"] <= hi for v in band_rep.values())
    return {
        "delta": delta, "n_trials": len(fields), "min_ratio": float(ratios.min()),
        "max_ratio": float(ratios.max()), "ratios": ratios.tolist(), "interval": [lo, hi],
        "per_band": band_rep, "pass": bool(lo <= ratios.min() and ratios.max() <= hi and band_ok),
    }


class ReconstructionError(RuntimeError):
    pass


def reconstruct(cs: CoefficientSet, frame: Frame, n_iter: int = 30,
                truth: SpatialField | None = None, raise_on_divergence: bool = True) -> tuple[SpatialField, dict]:
    """Frame algorithm ``f_{n+1} = f_n + (S f - S f_n)`` with ``f_0 = S f``.

    Runs on grid values with :meth:`Frame.apply_S_grid`; ``S f`` is
    synthesized from the coefficients.  With ``truth`` the relative grid
    error of every iterate is recorded, otherwise the update norms.
    """
    g = frame.grid
    Sf = frame.synthesize_grid(cs)
    h = Sf.copy()
    ft = truth.values if truth is not None else None
    nt = g.norm(ft) if truth is not None else None
    errors, updates = [], []
    if truth is not None:
        errors.append(g.norm(h - ft) / nt if nt > 0 else 0.0)
    growth = 0
    for _ in range(n_iter):
        step = Sf - frame.apply_S_grid(h)
        h = h + step
        updates.append(g.norm(step))
        if truth is not None:
            errors.append(g.norm(h - ft) / nt if nt > 0 else 0.0)
        seq = errors if truth is not None else updates
        if len(seq) >= 2 and seq[-1] > seq[-2] and seq[-1] > 1e-12:
            growth += 1
            if growth >= 2 and raise_on_divergence:
                raise ReconstructionError("iteration diverges; the frame bounds of this frame are not verified")
        else:
            growth = 0
    seq = np.asarray(errors if truth is not None else updates)
    with np.errstate(invalid="ignore", divide="ignore"):
        factors = seq[1:] / seq[:-1]
    return SpatialField(h, g), {"errors": [float(e) for e in errors], "updates": [float(u) for u in updates],
                                "factors": [float(x) for x in factors]}


def span_fields(frame: Frame, n: int, seed: int) -> list[SpatialField]:
    """Fields ``S g`` in the span of the atoms, ``g`` from :func:`test_fields`."""
    return [SpatialField(frame.apply_S_grid(g.values), frame.grid) for g in test_fields(frame, n, seed)]


def spectral_radius_I_minus_S(frame: Frame, n_iter: int = 20, seed: int = 0) -> dict:
    """Power iteration for ``||I - S||`` on grid fields in the span of the atoms.

    Returns the ratio sequence; ``ratios[0]`` is the one-step contraction of
    the start vector and ``ratios[-1]`` the power-iteration estimate.
    """
    g = frame.grid
    h = span_fields(frame, 1, seed)[0].values
    h = h / g.norm(h)
    ratios = []
    for _ in range(n_iter):
        h = h - frame.apply_S_grid(h)
        est = g.norm(h)
        ratios.append(float(est))
        h = h / est
    return {"ratios": ratios, "estimate": ratios[-1]}


# ---------------------------------------------------------------------------
# decay profiles


def band_kernel(j: int, d, R_max: float, J_max: int | None = None):
    """Radial kernel ``k_j(d) = int F_j(lam) phi_lam(d) p(lam) dlam`` of ``F_j(Delta)``.

    The lam rule (composite Gauss-Legendre over the band) is refined with
    ``R_max`` so that oscillations up to distance ``R_max`` are resolved.
    """
    lo, hi = filters.band_of(j)
    if J_max is not None and j == J_max:
        hi = min(hi, 2.0**J_max)
    n_panels = int(8 + np.ceil(hi * R_max / 4))
    x, w = leggauss(16)
    edges = np.linspace(lo, hi, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    lam = ((b - a) / 2 * x + (a + b) / 2).ravel()
    wl = ((b - a) / 2 * w).ravel()
    prof = filters.filter_profile(j, lam) * plancherel_density(lam) * wl
    if J_max is not None:
        prof = prof * (lam <= 2.0**J_max)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    return np.array([spherical_function(lam, di) @ prof for di in d])


def decay_profile(atom_theta: SpatialField, j: int, N: int = 2, R_max: float = 12.0,
                  n_angles: int = 128, J_max: int | None = None, deg: int = 24) -> dict:
    """Weighted sup profile ``sup_{d(0,x)=r} |Theta(x)| (1+r)^N / phi_0(r)``, ``r = 1..R_max-2``.

    ``Theta = F_j(Delta) theta`` is evaluated off the grid as
    ``sum_y W_y theta(y) k_j(d(x, y))`` over the support of ``theta``; the
    kernel is interpolated in Chebyshev form around each radius.
    """
    if N > 4 or N < 0:
        raise ValueError("N must lie in 0..4")
    grid = atom_theta.grid
    sup = np.flatnonzero(atom_theta.values)
    ys, wy = grid.z[sup], grid.weights[sup] * atom_theta.values[sup]
    radii = np.arange(1, int(np.floor(R_max - 2)) + 1, dtype=float)
    ang = 2 * np.pi * np.arange(n_angles) / n_angles
    rows = []
    for r in radii:
        x = np.tanh(r / 2) * np.exp(1j * ang)
        D = hyp_distance(x[:, None], ys[None, :])
        dlo, dhi = D.min(), D.max()
        if dhi - dlo < 1e-9:
            kd = band_kernel(j, [dlo], R_max, J_max)[0] * np.ones_like(D)
        else:
            nodes = C.chebpts2(deg + 1) * (dhi - dlo) / 2 + (dhi + dlo) / 2
            coef = C.chebfit((nodes - (dhi + dlo) / 2) / ((dhi - dlo) / 2), band_kernel(j, nodes, R_max, J_max), deg)
            kd = C.chebval((D - (dhi + dlo) / 2) / ((dhi - dlo) / 2), coef)
        theta_x = kd @ wy
        s = float(np.max(np.abs(theta_x)))
        phi0 = float(spherical_function(0.0, r))
        rows.append({"r": r, "sup": s, "weighted": s * (1 + r) ** N / phi0,
                     "envelope": (1 + r) ** -2 * np.exp(-r / 2)})
    w = np.array([row["weighted"] for row in rows])
    tail = w[-5:]
    bounded = bool(np.all(np.isfinite(w)) and not np.all(np.diff(tail) > 0))
    return {"j": j, "N": N, "R_max": R_max, "rows": rows, "bounded": bounded}
