"""Three equivalent Besov norms ``B^alpha_{2,q}`` and their equivalence report.

* best approximation: ``||f|| + || (2^{k alpha} E(f, 2^k))_k ||_q``
* Littlewood-Paley: ``|| (2^{j alpha} ||F_j(Delta) f||)_j ||_q``
* frame coefficients: ``|| (2^{j alpha} ||c_j||_2)_j ||_q``
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .filters import FilterBank
from .hft import SpatialField, SpectralGrid, plancherel_norm, spectrum_of
from .spectral import band_envelope, best_approximation, synthesize

NORMS = ("bestapprox", "lp", "frame")


@dataclass(frozen=True)
class BesovParams:
    alpha: float
    q: float = 2.0
    J_max: int = 3

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.q not in (1, 2, np.inf):
            raise ValueError("q must be 1, 2 or inf")
        if self.J_max < 1:
            raise ValueError("J_max must be at least 1")


def lq_norm(terms, q: float) -> float:
    t = np.abs(np.asarray(terms, dtype=float))
    if t.size == 0:
        return 0.0
    top = t.max()
    if q == np.inf or top == 0:
        return float(top)
    # scale by the max so t**q neither underflows nor overflows
    return float(top * np.sum((t / top) ** q) ** (1.0 / q))


def _spectrum(f: SpatialField, sgrid: SpectralGrid | None):
    if sgrid is None:
        if f.spectrum is None:
            raise ValueError("field has no spectrum; pass sgrid")
        sgrid = f.spectrum.sgrid
    return spectrum_of(f, sgrid), sgrid


def besov_norm_bestapprox(f: SpatialField, p: BesovParams, sgrid: SpectralGrid | None = None) -> float:
    G, sg = _spectrum(f, sgrid)
    terms = [2.0 ** (k * p.alpha) * best_approximation(2.0**k, f, sg) for k in range(p.J_max + 1)]
    return plancherel_norm(G) + lq_norm(terms, p.q)


def lp_terms(f: SpatialField, p: BesovParams, bank: FilterBank, sgrid: SpectralGrid | None = None) -> np.ndarray:
    """``2^{j alpha} ||F_j(Delta) f||`` for ``j = 0..J_max``."""
    if bank.J_max < p.J_max:
        raise ValueError("filter bank has fewer bands than J_max")
    G, sg = _spectrum(f, sgrid)
    return np.array([2.0 ** (j * p.alpha) * plancherel_norm(G.multiply(bank.F(j, sg.lam)))
                     for j in range(p.J_max + 1)])


def besov_norm_lp(f: SpatialField, p: BesovParams, bank: FilterBank, sgrid: SpectralGrid | None = None) -> float:
    return lq_norm(lp_terms(f, p, bank, sgrid), p.q)


def frame_terms(cs, p: BesovParams) -> np.ndarray:
    return np.array([2.0 ** (j * p.alpha) * np.sqrt(cs.band_energy(j)) if j in cs.bands else 0.0
                     for j in range(p.J_max + 1)])


def besov_norm_frame(cs, p: BesovParams) -> float:
    return lq_norm(frame_terms(cs, p), p.q)


def dilation_family(grid, sgrid: SpectralGrid, J_max: int, seed: int, n: int = 5) -> list[SpatialField]:
    """Fields ``f_m`` with spectrum in ``[2^(m-2), 2^m] * 2^(J_max-n+1)``, shifted up one octave per ``m``.

    The first field starts at ``lam = 0``; the last ends at ``2^J_max``.
    """
    rng = np.random.default_rng(seed)
    top = 2.0**J_max
    out = []
    for m in range(n):
        hi = top * 2.0 ** (m - n + 1)
        lo = 0.0 if m == 0 else hi / 4
        out.append(synthesize(grid, sgrid, band_envelope(lo, hi), rng))
    return out


def equivalence_report(fields: list[SpatialField], p: BesovParams, frame, seed: int | None = None) -> dict:
    """The three norms and their pairwise ratios for each field.

    ``C`` is the smallest constant with every ratio in ``[1/C, C]``.  The
    verdict is PASS when all norms are positive and finite.
    """
    if not fields:
        raise ValueError("empty field list")
    bank = frame.bank
    sg = frame.sgrid
    rows = []
    for i, f in enumerate(fields):
        G = spectrum_of(f, sg)
        cs = frame.analyze_spectrum(G)
        n = {"bestapprox": besov_norm_bestapprox(f, p, sg),
             "lp": besov_norm_lp(f, p, bank, sg),
             "frame": besov_norm_frame(cs, p)}
        tail = plancherel_norm(G.multiply(sg.lam > 2.0**p.J_max)) / plancherel_norm(G)
        row = {"field": i, **n, "spectral_tail": float(tail)}
        for a in range(3):
            for b in range(a + 1, 3):
                x, y = n[NORMS[a]], n[NORMS[b]]
                row[f"{NORMS[a]}/{NORMS[b]}"] = x / y if y > 0 else np.inf
        rows.append(row)
    ratios = np.array([[r[k] for k in rows[0] if "/" in k] for r in rows], dtype=float)
    ok = bool(np.all(np.isfinite(ratios)) and np.all(ratios > 0))
    C = float(np.max(np.maximum(ratios, 1.0 / ratios))) if ok else np.inf
    return {"alpha": p.alpha, "q": p.q if np.isfinite(p.q) else "inf", "J_max": p.J_max, "seed": seed,
            "rows": rows, "C": C, "pass": ok}


def write_report_csv(report: dict, path) -> None:
    rows = report["rows"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def write_report_json(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, default=float)
