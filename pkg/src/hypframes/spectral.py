"""Spectral multipliers ``Phi(Delta)`` and Paley-Wiener calculus.

All operators act on the attached (or computed) spectrum and return fields
that carry their exact spectrum, so norms and projections compose without
re-transforming.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import filters
from .hft import (
    SpatialField,
    SpectralField,
    SpectralGrid,
    forward_hft,
    inverse_hft,
    plancherel_norm,
    spectrum_of,
)


@dataclass(frozen=True)
class Multiplier:
    """Function of ``lam`` with a declared support interval."""

    profile: Callable
    support: tuple[float, float] = (0.0, np.inf)
    name: str = ""

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        lo, hi = self.support
        vals = np.asarray(self.profile(lam), dtype=complex) * np.ones_like(lam)
        return np.where((lam >= lo) & (lam <= hi), vals, 0.0)


def filter_multiplier(j: int) -> Multiplier:
    return Multiplier(lambda lam: filters.filter_profile(j, lam), filters.band_of(j), f"F_{j}")


def indicator(omega: float, lo: float = 0.0) -> Multiplier:
    return Multiplier(lambda lam: np.ones_like(lam), (lo, omega), f"1[{lo},{omega}]")


def symbol_power(s: float) -> Multiplier:
    """``(lam^2 + 1/4)^s``, the symbol of ``(-Delta)^s``."""
    return Multiplier(lambda lam: (lam**2 + 0.25) ** s, (0.0, np.inf), f"(-Delta)^{s}")


def schrodinger(t: float) -> Multiplier:
    """``exp(-i t (lam^2 + 1/4))``, the symbol of ``exp(i t Delta)``."""
    return Multiplier(lambda lam: np.exp(-1j * t * (lam**2 + 0.25)), (0.0, np.inf), f"exp({t}i Delta)")


def _sgrid(f: SpatialField, sgrid: SpectralGrid | None) -> SpectralGrid:
    if sgrid is not None:
        return sgrid
    if f.spectrum is not None:
        return f.spectrum.sgrid
    raise ValueError("field has no spectrum; pass sgrid")


def apply_spectral(phi, F: SpectralField) -> SpectralField:
    prof = phi(F.sgrid.lam) if callable(phi) else np.asarray(phi)
    return F.multiply(prof)


def apply_multiplier(phi: Multiplier, f: SpatialField, sgrid: SpectralGrid | None = None) -> SpatialField:
    """``Phi(Delta) f`` as ``inverse(Phi * forward(f))``."""
    sg = _sgrid(f, sgrid)
    if phi.support[1] > sg.lam_max and np.isfinite(phi.support[1]):
        raise ValueError(f"multiplier support {phi.support} exceeds lam_max = {sg.lam_max}")
    G = apply_spectral(phi, spectrum_of(f, sg))
    return inverse_hft(G, sg, f.grid, tail_threshold=np.inf)


def project_pw(omega: float, f: SpatialField, sgrid: SpectralGrid | None = None) -> SpatialField:
    """Orthogonal projection onto ``PW_omega`` (sharp cutoff at ``omega``)."""
    sg = _sgrid(f, sgrid)
    if not 0 < omega:
        raise ValueError("omega must be positive")
    G = spectrum_of(f, sg).multiply(sg.lam <= omega)
    return inverse_hft(G, sg, f.grid, tail_threshold=np.inf)


def best_approximation(omega: float, f: SpatialField, sgrid: SpectralGrid | None = None) -> float:
    """``E(f, omega) = ||f - P_omega f||``, the spectral tail norm."""
    sg = _sgrid(f, sgrid)
    return plancherel_norm(spectrum_of(f, sg).multiply(sg.lam > omega))


def sobolev_norm(f: SpatialField, s: float, sgrid: SpectralGrid | None = None) -> float:
    """``||(-Delta)^(s/2) f||`` from the spectrum."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    sg = _sgrid(f, sgrid)
    return plancherel_norm(spectrum_of(f, sg).multiply((sg.lam**2 + 0.25) ** (s / 2)))


def bernstein_check(omega: float, f: SpatialField, s: float = 1.0,
                    sgrid: SpectralGrid | None = None, tol: float = 1e-6) -> dict:
    """Ratio ``||Delta^s f|| / ((omega^2 + 1/4)^s ||f||)`` for ``f`` in ``PW_omega``."""
    sg = _sgrid(f, sgrid)
    F = spectrum_of(f, sg)
    nf = plancherel_norm(F)
    if nf == 0:
        raise ValueError("zero field")
    num = plancherel_norm(F.multiply((sg.lam**2 + 0.25) ** s))
    ratio = num / ((omega**2 + 0.25) ** s * nf)
    return {"omega": omega, "s": s, "ratio": float(ratio), "pass": bool(ratio <= 1 + tol)}


def riesz_coefficients(sigma: float, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights and shifts of the truncated Riesz interpolation series.

    Terms ``k = -K+1 .. K``: weight ``(sigma / pi^2) (-1)^(k-1) / (k - 1/2)^2``
    at shift ``tau = (pi / sigma)(k - 1/2)``.
    """
    k = np.arange(-K + 1, K + 1)
    c = (sigma / np.pi**2) * (-1.0) ** (k - 1) / (k - 0.5) ** 2
    tau = (np.pi / sigma) * (k - 0.5)
    return c, tau


def riesz_series_symbol(lam, omega: float, K: int):
    """Symbol of the truncated series ``sum c_k exp(i tau_k Delta)``."""
    sigma = omega**2 + 0.25
    c, tau = riesz_coefficients(sigma, K)
    mu = np.asarray(lam, dtype=float) ** 2 + 0.25
    return np.exp(-1j * np.multiply.outer(mu, tau)) @ c


def riesz_scalar_residual(mu: float, sigma: float, K: int) -> float:
    """Relative residual ``|i mu - sum c_k exp(i tau_k mu)| / |mu|`` of the scalar formula."""
    c, tau = riesz_coefficients(sigma, K)
    return float(abs(1j * mu - np.sum(c * np.exp(1j * tau * mu))) / abs(mu))


def riesz_tail_bound(K: int) -> float:
    """``(2 / pi^2) sum_{k > K} (k - 1/2)^-2``, the relative tail at saturation."""
    from scipy.special import polygamma

    # sum_{k>K} (k - 1/2)^-2 = psi'(K + 1/2)
    return float(2.0 / np.pi**2 * polygamma(1, K + 0.5))


def riesz_identity_check(omega: float, f: SpatialField, K_terms: int,
                         sgrid: SpectralGrid | None = None) -> dict:
    """Residual ``||i Delta f - R_K f|| / ||Delta f||`` of the Riesz series."""
    if K_terms < 4:
        raise ValueError("K_terms must be at least 4")
    sg = _sgrid(f, sgrid)
    F = spectrum_of(f, sg)
    lhs = F.multiply(-1j * (sg.lam**2 + 0.25))
    rhs = F.multiply(riesz_series_symbol(sg.lam, omega, K_terms))
    den = plancherel_norm(lhs)
    res = plancherel_norm(lhs - rhs) / den if den > 0 else 0.0
    return {"omega": omega, "K": K_terms, "residual": float(res)}


def unitary_check(t: float, f: SpatialField, sgrid: SpectralGrid | None = None) -> float:
    """``| ||exp(i t Delta) f|| / ||f|| - 1 |``."""
    sg = _sgrid(f, sgrid)
    F = spectrum_of(f, sg)
    return abs(plancherel_norm(apply_spectral(schrodinger(t), F)) / plancherel_norm(F) - 1.0)


# ---------------------------------------------------------------------------
# test fields


def gaussian_bump(grid, center: complex, sigma: float, amplitude: complex = 1.0):
    """``a exp(-d(x, c)^2 / (2 sigma^2))`` sampled on the grid."""
    from .geometry import hyp_distance

    d = hyp_distance(grid.z, center)
    return SpatialField(amplitude * np.exp(-0.5 * (d / sigma) ** 2), grid)


def random_bumps(grid, rng: np.random.Generator, n_bumps: int = 4,
                 max_center: float = 0.75, sigma_range=(0.15, 0.4)) -> SpatialField:
    """Sum of Gaussian bumps with random centers, widths and complex amplitudes."""
    vals = np.zeros(grid.n_nodes, dtype=complex)
    for _ in range(n_bumps):
        r = max_center * np.sqrt(rng.uniform())
        c = np.tanh(r / 2) * np.exp(2j * np.pi * rng.uniform())
        s = rng.uniform(*sigma_range)
        a = rng.normal() + 1j * rng.normal()
        vals += gaussian_bump(grid, c, s, a).values
    return SpatialField(vals, grid)


def band_envelope(lo: float, hi: float):
    """Smooth envelope equal to 1 on ``[2 lo, hi / 2]`` (or on ``[0, hi/2]`` if ``lo = 0``)
    and vanishing outside ``[lo, hi]``."""
    def env(lam):
        lam = np.asarray(lam, dtype=float)
        up = filters.g(2.0 * lam / hi)
        if lo <= 0:
            return up
        return up * (1.0 - filters.g(lam / lo))
    return env


def synthesize(grid, sgrid: SpectralGrid, envelope, rng: np.random.Generator, **bump_kw) -> SpatialField:
    """Band-limited field ``inverse(E(lam) forward(bumps))`` with its exact spectrum."""
    seed_field = random_bumps(grid, rng, **bump_kw)
    G = forward_hft(seed_field, sgrid, grid).multiply(envelope(sgrid.lam))
    return inverse_hft(G, sgrid, grid, tail_threshold=np.inf)


def random_pw_field(grid, sgrid: SpectralGrid, omega: float, rng: np.random.Generator, **bump_kw) -> SpatialField:
    """Random field in ``PW_omega`` with a smooth spectral envelope."""
    return synthesize(grid, sgrid, band_envelope(0.0, omega), rng, **bump_kw)


def single_lambda_field(grid, sgrid: SpectralGrid, l: int, rng: np.random.Generator) -> SpatialField:
    """Field whose spectrum lives on the single node ``lam_l`` (random boundary modes)."""
    modes = np.zeros((sgrid.n_lam, sgrid.n_b), dtype=complex)
    M = sgrid.max_mode
    m = np.r_[0:min(M, 8) + 1, -min(M, 8):0]
    modes[l, m] = rng.normal(size=m.size) + 1j * rng.normal(size=m.size)
    return inverse_hft(SpectralField.from_modes(modes, sgrid), sgrid, grid, tail_threshold=np.inf)


def smooth_suite(grid) -> list[SpatialField]:
    """Deterministic smooth, non band-limited test functions."""
    r = grid.node_radius
    out = [SpatialField(np.exp(-p * np.cosh(r)).astype(complex), grid) for p in (1.0, 2.0, 4.0)]
    for c, s in ((0.0, 0.4), (0.3 + 0.2j, 0.5), (-0.4j, 0.6)):
        out.append(gaussian_bump(grid, c, s))
    return out
