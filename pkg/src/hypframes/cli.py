"""Experiment runner: ``hypframes {plancherel,frame-bounds,reconstruct,besov,decay,all}``.

Configuration is a flat ``key = value`` file; command-line flags override it.
Each subcommand writes ``report.json`` (one entry per experiment) and CSV
tables into the output directory and exits 0 on PASS, 1 on FAIL and 2 on a
usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import besov as bv
from . import frames as fr
from .geometry import build_spatial_grid
from .hft import (
    PLANCHEREL_CONSTANT,
    build_spectral_grid,
    calibrate_plancherel_constant,
    get_transform,
    radial_oracle_norm2,
    radial_oracle_transform,
    tail_fraction,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    R_max: float = 6.0
    n_r: int = 16
    n_theta: int = 128
    spacing: float = 0.03
    fine_radius: float = 3.0
    growth: float = 1.0
    lam_max: float = 16.0
    n_lam: int = 192
    n_b: int = 128
    delta: float = 0.5
    a0: float | str = 2.0
    J_max: int = 3
    lam_pu: float = 1.0
    seed: int = 0
    output_dir: str = "out"
    n_trials: int = 20
    n_iter: int = 30
    n_fields: int = 2
    alpha: float = 1.0
    q: float = 2.0
    decay_R_max: float = 12.0
    decay_N: int = 2

    def __post_init__(self):
        for k in ("R_max", "n_r", "n_theta", "spacing", "fine_radius", "growth", "lam_max", "n_lam", "n_b",
                  "J_max", "lam_pu", "n_trials", "n_iter", "n_fields", "decay_R_max"):
            if not getattr(self, k) > 0:
                raise ConfigError(f"{k} must be positive")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.a0 != "calibrate" and not (isinstance(self.a0, float) and self.a0 > 0):
            raise ConfigError("a0 must be positive or 'calibrate'")
        if self.q not in (1.0, 2.0, np.inf):
            raise ConfigError("q must be 1, 2 or inf")
        if self.alpha < 0 or self.seed < 0 or self.decay_N < 0:
            raise ConfigError("alpha, seed and decay_N must be nonnegative")

    @classmethod
    def from_mapping(cls, m: dict) -> "ExperimentConfig":
        kw = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for k, v in m.items():
            if k not in types:
                raise ConfigError(f"unknown config key {k!r}")
            kw[k] = _coerce(k, types[k], v)
        return cls(**kw)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def as_dict(self) -> dict:
        return {k: (v if not (isinstance(v, float) and np.isinf(v)) else "inf")
                for k, v in dataclasses.asdict(self).items()}


def _coerce(key: str, typ: str, value):
    if not isinstance(value, str):
        return value
    s = value.strip()
    try:
        if typ == "int":
            return int(s)
        if typ == "float":
            return float(s)
        if typ == "float | str":
            return s if s == "calibrate" else float(s)
        return s
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def parse_config_text(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def load_config(path=None, **overrides) -> ExperimentConfig:
    m = parse_config_text(Path(path).read_text()) if path else {}
    m.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(m)


@dataclass
class Report:
    name: str
    config: dict
    metrics: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def __post_init__(self):
        self.verdicts = {k: bool(v) for k, v in self.verdicts.items()}

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {"experiment": self.name, "config": self.config, "metrics": self.metrics,
                "verdicts": self.verdicts, "pass": self.passed, "wall_clock_seconds": round(self.wall_clock, 3)}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# shared objects


@lru_cache(maxsize=4)
def _grids(R_max, n_r, n_theta, spacing, fine_radius, growth, lam_max, n_lam, n_b):
    grid = build_spatial_grid(R_max, n_r, n_theta, spacing=spacing, fine_radius=fine_radius, growth=growth)
    return grid, build_spectral_grid(lam_max, n_lam, n_b)


def grids(cfg: ExperimentConfig):
    return _grids(cfg.R_max, cfg.n_r, cfg.n_theta, cfg.spacing, cfg.fine_radius, cfg.growth,
                  cfg.lam_max, cfg.n_lam, cfg.n_b)


@lru_cache(maxsize=4)
def _frame(gkey, J_max, delta, a0, lam_pu, seed):
    grid, sgrid = _grids(*gkey)
    return fr.Frame(grid, sgrid, J_max, delta, a0, lam_pu, seed)


def get_frame(cfg: ExperimentConfig, a0: float | None = None) -> fr.Frame:
    gkey = (cfg.R_max, cfg.n_r, cfg.n_theta, cfg.spacing, cfg.fine_radius, cfg.growth,
            cfg.lam_max, cfg.n_lam, cfg.n_b)
    a = a0 if a0 is not None else resolve_a0(cfg)
    return _frame(gkey, cfg.J_max, cfg.delta, float(a), cfg.lam_pu, cfg.seed)


def calibrate_a0(cfg: ExperimentConfig, lo: float = 2.0**-6, hi: float = 2.0, steps: int = 5) -> tuple[float, list]:
    """Largest passing ``a0``: accept ``hi`` if it passes, else bisect (in log scale) on ``[lo, hi]``."""
    trace = []

    def ok(a):
        rep = fr.frame_bounds(get_frame(cfg, a), cfg.delta, cfg.n_trials, cfg.seed)
        trace.append({"a0": a, "min": rep["min_ratio"], "max": rep["max_ratio"], "pass": rep["pass"]})
        return rep["pass"]

    if ok(hi):
        return hi, trace
    for _ in range(steps):
        mid = float(np.sqrt(lo * hi))
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, trace


_A0_CACHE: dict = {}


def resolve_a0(cfg: ExperimentConfig) -> float:
    if cfg.a0 != "calibrate":
        return float(cfg.a0)
    key = cfg.replace(output_dir="")
    if key not in _A0_CACHE:
        _A0_CACHE[key] = calibrate_a0(cfg)
    return _A0_CACHE[key][0]


# ---------------------------------------------------------------------------
# experiments


def cmd_plancherel(cfg: ExperimentConfig, out: Path | None = None) -> Report:
    t0 = time.perf_counter()
    grid, sgrid = grids(cfg)
    T = get_transform(grid, sgrid)
    c = calibrate_plancherel_constant(grid, sgrid)
    rows, norm_errs, oracle_errs, tails = [], [], [], []
    low = sgrid.lam <= 8.0
    for p in (1.0, 2.0, 4.0):
        F = T.forward(np.exp(-p * np.cosh(grid.node_radius)))
        spec2 = c / PLANCHEREL_CONSTANT * F.norm() ** 2
        exact = radial_oracle_norm2(p)
        spatial = grid.norm(np.exp(-p * np.cosh(grid.node_radius))) ** 2
        F0 = F.values.mean(axis=1)
        oracle = radial_oracle_transform(sgrid.lam[low], p)
        oerr = float(np.max(np.abs(F0[low] - oracle)) / np.max(np.abs(oracle)))
        nerr = abs(np.sqrt(spec2 / spatial) - 1.0)
        norm_errs.append(nerr)
        oracle_errs.append(oerr)
        tails.append(tail_fraction(F))
        rows.append([p, exact, spatial, spec2, nerr, oerr, tails[-1]])
    m = {"calibrated_constant": c, "frozen_constant": PLANCHEREL_CONSTANT,
         "constant_rel_dev": abs(c / PLANCHEREL_CONSTANT - 1), "norm_rel_err": norm_errs,
         "oracle_rel_err": oracle_errs, "tail_fraction": tails}
    v = {"norms_1e-3": max(norm_errs) <= 1e-3, "oracle_1e-5": max(oracle_errs) <= 1e-5}
    if out:
        _write_csv(out / "plancherel.csv", ["p", "exact_norm2", "spatial_norm2", "spectral_norm2",
                                           "norm_rel_err", "oracle_rel_err", "tail_fraction"], rows)
    return Report("plancherel", cfg.as_dict(), m, v, time.perf_counter() - t0)


def cmd_frame_bounds(cfg: ExperimentConfig, out: Path | None = None) -> Report:
    t0 = time.perf_counter()
    a0 = resolve_a0(cfg)
    frame = get_frame(cfg, a0)
    rep = fr.frame_bounds(frame, cfg.delta, cfg.n_trials, cfg.seed)
    m = {"a0": a0, "min_ratio": rep["min_ratio"], "max_ratio": rep["max_ratio"], "interval": rep["interval"],
         "per_band": rep["per_band"], "frame": {k: v for k, v in frame.summary().items() if k != "build_seconds"}}
    if cfg.a0 == "calibrate":
        m["calibration"] = _A0_CACHE[cfg.replace(output_dir="")][1]
    per_band_ok = all(rep["interval"][0] <= b["min"] and b["max"] <= rep["interval"][1]
                      for b in rep["per_band"].values())
    v = {"overall": rep["interval"][0] <= rep["min_ratio"] and rep["max_ratio"] <= rep["interval"][1],
         "per_band": per_band_ok}
    if out:
        _write_csv(out / "frame_bounds.csv", ["trial", "ratio"], enumerate(rep["ratios"]))
    return Report("frame-bounds", cfg.as_dict(), m, v, time.perf_counter() - t0)


def cmd_reconstruct(cfg: ExperimentConfig, out: Path | None = None) -> Report:
    t0 = time.perf_counter()
    frame = get_frame(cfg)
    fields = fr.span_fields(frame, cfg.n_fields, cfg.seed)
    curves, rows = [], []
    for i, f in enumerate(fields):
        _, info = fr.reconstruct(frame.analyze(f), frame, cfg.n_iter, truth=f, raise_on_divergence=False)
        curves.append(info)
        for n, e in enumerate(info["errors"]):
            rows.append([i, n, e, info["factors"][n - 1] if n else ""])
    power = fr.spectral_radius_I_minus_S(frame, 20, cfg.seed)
    factors = [x for c in curves for x in c["factors"] if np.isfinite(x)]
    final = [c["errors"][-1] for c in curves]
    m = {"final_rel_err": final, "max_factor": max(factors), "first_factor": [c["factors"][0] for c in curves],
         "power_iteration": power, "errors": [c["errors"] for c in curves]}
    v = {"factor_le_delta+0.05": max(factors) <= cfg.delta + 0.05, "final_err_1e-6": max(final) < 1e-6}
    if out:
        _write_csv(out / "reconstruct.csv", ["field", "iteration", "rel_err", "factor"], rows)
    return Report("reconstruct", cfg.as_dict(), m, v, time.perf_counter() - t0)


def refined(cfg: ExperimentConfig) -> ExperimentConfig:
    """Finer spatial and spectral resolution for stability checks."""
    return cfg.replace(spacing=cfg.spacing * 5 / 6, fine_radius=cfg.fine_radius + 0.5,
                       n_lam=int(round(cfg.n_lam * 4 / 3)))


def cmd_besov(cfg: ExperimentConfig, out: Path | None = None) -> Report:
    t0 = time.perf_counter()
    p = bv.BesovParams(cfg.alpha, cfg.q, cfg.J_max)
    p0 = bv.BesovParams(0.0, 2.0, cfg.J_max)
    reps = {}
    for name, c in (("base", cfg), ("refined", refined(cfg))):
        frame = get_frame(c)
        fam = bv.dilation_family(frame.grid, frame.sgrid, cfg.J_max, cfg.seed)
        reps[name] = (bv.equivalence_report(fam, p, frame, cfg.seed), bv.equivalence_report(fam, p0, frame, cfg.seed),
                      [f.norm() for f in fam])
    rep, rep0, norms = reps["base"]
    drift = abs(reps["refined"][0]["C"] / rep["C"] - 1)
    lp_err = max(abs(r["lp"] / n - 1) for r, n in zip(rep0["rows"], norms))
    fr_ratio = [r["frame"] / n for r, n in zip(rep0["rows"], norms)]
    lo, hi = np.sqrt(1 - cfg.delta) - 0.05, np.sqrt(1 + cfg.delta) + 0.05
    m = {"C": rep["C"], "C_refined": reps["refined"][0]["C"], "C_drift": drift, "alpha0_lp_rel_err": lp_err,
         "alpha0_frame_over_norm": fr_ratio, "rows": rep["rows"]}
    v = {"bounded": rep["pass"], "C_drift_lt_10pct": drift < 0.1, "alpha0_lp_1e-6": lp_err <= 1e-6,
         "alpha0_frame_in_interval": all(lo <= x <= hi for x in fr_ratio)}
    if out:
        bv.write_report_csv(rep, out / "besov.csv")
        bv.write_report_json(rep, out / "besov.json")
    return Report("besov", cfg.as_dict(), m, v, time.perf_counter() - t0)


def cmd_decay(cfg: ExperimentConfig, out: Path | None = None, n_per_band: int = 3) -> Report:
    t0 = time.perf_counter()
    frame = get_frame(cfg)
    purity, profiles, stability, rows = [], {}, {}, []
    lam = frame.sgrid.lam
    structural = 0.0
    for b in frame.bands:
        lo, hi = frame.bank.band(b.j)
        structural = max(structural, float(np.max(np.abs(frame.profiles[b.j][(lam < lo) | (lam > hi)]), initial=0.0)))
        for row in frame.atom_rows_near(b.j, 0j, n_per_band):
            purity.append(fr.out_of_band_fraction(frame.atom(b.j, int(row))))
        theta = frame.atom(b.j, int(frame.atom_rows_near(b.j, 0j, 1)[0])).theta
        R = cfg.decay_R_max
        p1 = fr.decay_profile(theta, b.j, cfg.decay_N, R, J_max=cfg.J_max)
        p2 = fr.decay_profile(theta, b.j, cfg.decay_N, 2 * R, J_max=cfg.J_max)
        p0 = fr.decay_profile(theta, b.j, 0, R, J_max=cfg.J_max)
        shared = {row["r"]: row["weighted"] for row in p2["rows"]}
        change = max(abs(row["weighted"] / shared[row["r"]] - 1) for row in p1["rows"])
        profiles[b.j] = {"bounded": p2["bounded"], "N0_finite": bool(all(np.isfinite(r["weighted"]) for r in p0["rows"]))}
        stability[b.j] = change
        for prof in (p1, p2):
            rows += [[b.j, prof["R_max"], cfg.decay_N, r["r"], r["sup"], r["weighted"]] for r in prof["rows"]]
    m = {"max_out_of_band": max(purity), "structural_off_band_max": structural, "profiles": profiles,
         "R_doubling_change": stability}
    v = {"purity_1e-10": max(purity) <= 1e-10 and structural == 0.0,
         "bounded": all(p["bounded"] and p["N0_finite"] for p in profiles.values()),
         "stability_5pct": max(stability.values()) < 0.05}
    if out:
        _write_csv(out / "decay.csv", ["j", "R_max", "N", "r", "sup", "weighted"], rows)
    return Report("decay", cfg.as_dict(), m, v, time.perf_counter() - t0)


COMMANDS = {"plancherel": cmd_plancherel, "frame-bounds": cmd_frame_bounds, "reconstruct": cmd_reconstruct,
            "besov": cmd_besov, "decay": cmd_decay}


def run(command: str, cfg: ExperimentConfig, out: Path | None = None) -> list[Report]:
    names = list(COMMANDS) if command == "all" else [command]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    reports = [COMMANDS[n](cfg, out) for n in names]
    if out is not None:
        doc = {"reports": [r.to_dict() for r in reports], "pass": all(r.passed for r in reports)}
        (out / "report.json").write_text(json.dumps(doc, indent=2, default=_json_default))
    return reports


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypframes", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=[*COMMANDS, "all"])
    ap.add_argument("--config", help="flat key = value file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--delta", type=float)
    ap.add_argument("--jmax", type=int)
    ap.add_argument("--a0", help="positive number or 'calibrate'")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, delta=args.delta, J_max=args.jmax, a0=args.a0,
                          output_dir=args.out)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    reports = run(args.command, cfg, Path(cfg.output_dir))
    for r in reports:
        print(f"{r.name}: {'PASS' if r.passed else 'FAIL'}  {json.dumps(r.verdicts)}")
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
