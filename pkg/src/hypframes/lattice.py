"""r-lattices, disjoint covers, cell weights and partitions of unity on a grid.

Every set here is a set of grid nodes, so measures are quadrature sums.
Hyperbolic balls are found with a KD-tree on disk coordinates and then
filtered by exact distance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .filters import smooth_step
from .geometry import DomainError, SpatialGrid, ball_volume, hyp_distance


class NodeIndex:
    """Hyperbolic ball queries over the nodes of a grid."""

    def __init__(self, grid: SpatialGrid):
        self.grid = grid
        self.z = grid.z
        self.tree = cKDTree(np.column_stack([grid.z.real, grid.z.imag]))

    def _euclid_radius(self, z0: complex, s: float) -> float:
        # |z - w|^2 = (cosh d - 1)(1 - |z|^2)(1 - |w|^2) / 2 and r(w) >= r(z) - d
        r0 = 2 * np.arctanh(min(abs(z0), 1 - 1e-16))
        one_w = 1.0 / np.cosh(max(r0 - s, 0.0) / 2) ** 2
        return float(np.sqrt((np.cosh(s) - 1) * (1 - abs(z0) ** 2) * one_w / 2) * (1 + 1e-9) + 1e-15)

    def ball(self, z0: complex, s: float, closed: bool = False):
        """Indices and distances of nodes with ``d(x, z0) < s`` (``<=`` if closed)."""
        idx = np.asarray(self.tree.query_ball_point([z0.real, z0.imag], self._euclid_radius(z0, s)), dtype=int)
        if idx.size == 0:
            return idx, np.zeros(0)
        d = hyp_distance(self.z[idx], z0)
        keep = d <= s if closed else d < s
        return idx[keep], d[keep]


@dataclass(eq=False)
class Lattice:
    """Greedy ``r/2``-separated set of grid nodes."""

    grid: SpatialGrid
    r: float
    center_nodes: np.ndarray
    seed: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def centers(self) -> np.ndarray:
        return self.grid.z[self.center_nodes]

    @property
    def n_centers(self) -> int:
        return len(self.center_nodes)

    @property
    def multiplicity_bound(self) -> int:
        """Volume-ratio bound ``|B(3r)| / |B(r/4)|`` on the height of ``{B(x_i, r)}``."""
        return int(np.floor(ball_volume(3 * self.r) / ball_volume(self.r / 4)))

    @cached_property
    def index(self) -> NodeIndex:
        return NodeIndex(self.grid)

    def multiplicity(self) -> int:
        """Largest number of balls ``B(x_i, r)`` containing a single grid node."""
        counts = np.zeros(self.grid.n_nodes, dtype=np.int64)
        buf = []
        for i, c in enumerate(self.centers):
            buf.append(self.index.ball(c, self.r)[0])
            if len(buf) >= 256 or i == self.n_centers - 1:
                counts += np.bincount(np.concatenate(buf), minlength=self.grid.n_nodes)
                buf = []
        return int(counts.max()) if counts.size else 0


def build_lattice(r: float, grid: SpatialGrid, seed: int = 0, index: NodeIndex | None = None) -> Lattice:
    """Maximal ``r/2``-separated subset of grid nodes.

    Nodes are visited by increasing radius (random tie-break from ``seed``);
    a node becomes a center unless it lies within ``r/2`` of an earlier one.
    Centers are therefore pairwise at least ``r/2`` apart and every node lies
    within ``r/2`` of a center.
    """
    if not 0 < r <= 2 * grid.R_max:
        raise DomainError(f"lattice radius {r} must lie in (0, 2 R_max]")
    index = index or NodeIndex(grid)
    rng = np.random.default_rng(seed)
    order = np.lexsort((rng.random(grid.n_nodes), np.round(grid.node_radius, 12)))
    blocked = np.zeros(grid.n_nodes, dtype=bool)
    centers = []
    s = r / 2
    for i in order:
        if blocked[i]:
            continue
        centers.append(i)
        blocked[index.ball(grid.z[i], s)[0]] = True
    lat = Lattice(grid, float(r), np.asarray(centers, dtype=int), seed)
    lat.__dict__["index"] = index
    return lat


@dataclass(eq=False)
class Cover:
    """Disjoint cells ``U_k`` made of grid nodes."""

    lattice: Lattice
    assignment: np.ndarray
    cell_measures: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> SpatialGrid:
        return self.lattice.grid

    @property
    def n_cells(self) -> int:
        return len(self.cell_measures)

    @cached_property
    def _csr(self):
        order = np.argsort(self.assignment, kind="stable")
        offsets = np.concatenate([[0], np.cumsum(np.bincount(self.assignment, minlength=self.n_cells))])
        return order, offsets

    def cell(self, k: int) -> np.ndarray:
        order, offsets = self._csr
        return order[offsets[k]:offsets[k + 1]]


def build_cover(lat: Lattice, grid: SpatialGrid | None = None) -> Cover:
    """``U_k = B(x_k, r/2) minus (earlier cells and the other r/4 balls)`` at node resolution."""
    grid = grid or lat.grid
    if grid is not lat.grid:
        raise ValueError("lattice was built on a different grid")
    n = grid.n_nodes
    owner = np.full(n, -1, dtype=np.int64)
    for k, c in enumerate(lat.centers):
        owner[lat.index.ball(c, lat.r / 4)[0]] = k
    assign = np.full(n, -1, dtype=np.int64)
    for k, c in enumerate(lat.centers):
        idx = lat.index.ball(c, lat.r / 2)[0]
        ok = (assign[idx] < 0) & ((owner[idx] < 0) | (owner[idx] == k))
        assign[idx[ok]] = k
    orphans = np.flatnonzero(assign < 0)
    if orphans.size:
        tree = cKDTree(np.column_stack([lat.centers.real, lat.centers.imag]))
        # nearest in hyperbolic distance among a few Euclidean candidates
        kk = min(8, lat.n_centers)
        _, cand = tree.query(np.column_stack([grid.z[orphans].real, grid.z[orphans].imag]), k=kk)
        cand = np.atleast_2d(cand).reshape(orphans.size, kk)
        d = hyp_distance(grid.z[orphans][:, None], lat.centers[cand])
        assign[orphans] = cand[np.arange(orphans.size), np.argmin(d, axis=1)]
    measures = np.bincount(assign, weights=grid.weights, minlength=lat.n_centers)
    return Cover(lat, assign, measures, {"uncovered_nodes": int(orphans.size)})


@dataclass(eq=False)
class Weights:
    """Cell weights ``psi_k`` (one value per node, for the node's own cell)."""

    cover: Cover
    psi: np.ndarray
    weighted_measures: np.ndarray
    eps: float
    delta: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def measure_ratio(self) -> float:
        return float(np.max(self.cover.cell_measures / self.weighted_measures))

    def psi_of(self, k: int) -> np.ndarray:
        """``psi_k`` on all nodes (zero outside ``U_k``)."""
        out = np.zeros(self.cover.grid.n_nodes)
        idx = self.cover.cell(k)
        out[idx] = self.psi[idx]
        return out


def distance_to_complement(cov: Cover, cap: float) -> np.ndarray:
    """Per node, ``min(cap, distance to the nearest node of another cell)``."""
    grid = cov.grid
    lat = cov.lattice
    out = np.full(grid.n_nodes, cap)
    for k, c in enumerate(lat.centers):
        members = cov.cell(k)
        if members.size == 0:
            continue
        cand = lat.index.ball(c, lat.r / 2 + cap)[0]
        foreign = cand[cov.assignment[cand] != k]
        if foreign.size == 0:
            continue
        zf = grid.z[foreign]
        for s in range(0, members.size, 512):
            mem = members[s:s + 512]
            d = hyp_distance(grid.z[mem][:, None], zf[None, :]).min(axis=1)
            out[mem] = np.minimum(out[mem], d)
    return out


def build_weights(cov: Cover, delta: float, eps: float | None = None, max_retries: int = 12) -> Weights:
    """``psi_k(x) = eta(dist(x, complement of U_k) / eps)`` with ``eta`` the smooth step.

    ``eps`` is halved until ``max_k |U_k| / |U_k|_psi <= 1 + delta``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    eps = cov.lattice.r / 8 if eps is None else float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    dist = distance_to_complement(cov, eps)
    w = cov.grid.weights
    for attempt in range(max_retries + 1):
        psi = smooth_step(dist / eps)
        wm = np.bincount(cov.assignment, weights=w * psi, minlength=cov.n_cells)
        ratio = cov.cell_measures / np.where(wm > 0, wm, np.nan)
        worst = np.nanargmax(ratio) if np.any(np.isfinite(ratio)) else 0
        if np.all(wm > 0) and ratio[worst] <= 1 + delta:
            return Weights(cov, psi, wm, eps, delta, {"retries": attempt})
        eps /= 2
    raise RuntimeError(f"cell {worst} cannot meet the measure condition (ratio {ratio[worst]:.3f}) "
                       f"after {max_retries} retries")


@dataclass(eq=False)
class PartitionOfUnity:
    """Sparse ``phi[nu, node]`` subordinate to ``B(y_nu, lam_pu / 2)``."""

    lattice: Lattice
    phi: sparse.csr_matrix
    lam_pu: float
    normalization: str

    @property
    def n_parts(self) -> int:
        return self.phi.shape[0]


def build_partition_of_unity(lam_pu: float, grid: SpatialGrid, seed: int = 0,
                             normalization: str = "sum", index: NodeIndex | None = None) -> PartitionOfUnity:
    """Smooth partition of unity from a ``lam_pu``-lattice.

    ``chi_nu = eta((lam_pu/2 - d(x, y_nu)) / (lam_pu/4))`` and
    ``phi_nu = chi_nu / sum chi`` (``normalization="sum"``) or
    ``chi_nu / sqrt(sum chi^2)`` (``"l2"``, so that ``sum phi^2 = 1``).
    Ratios are formed in log space so tiny bump values never underflow.
    """
    if not 0 < lam_pu <= 2 * grid.R_max:
        raise DomainError("lam_pu out of range")
    if normalization not in ("sum", "l2"):
        raise ValueError("normalization must be 'sum' or 'l2'")
    lat = build_lattice(lam_pu, grid, seed, index)
    rows, cols, logs = [], [], []
    for nu, c in enumerate(lat.centers):
        idx, d = lat.index.ball(c, lam_pu / 2)
        t = (lam_pu / 2 - d) / (lam_pu / 4)
        tt = np.clip(t, 1e-300, None)
        one = np.clip(1 - t, 1e-300, None)
        # log of h(t) / (h(t) + h(1 - t)) with h(t) = exp(-1/t)
        lg = np.where(t >= 1, 0.0, -1 / tt - np.logaddexp(-1 / tt, -1 / one))
        rows.append(np.full(idx.size, nu))
        cols.append(idx)
        logs.append(lg)
    rows, cols, logs = map(np.concatenate, (rows, cols, logs))
    p = 1.0 if normalization == "sum" else 2.0
    peak = np.full(grid.n_nodes, -np.inf)
    np.maximum.at(peak, cols, logs)
    acc = np.bincount(cols, weights=np.exp(p * (logs - peak[cols])), minlength=grid.n_nodes)
    with np.errstate(divide="ignore"):
        norm = peak + np.log(acc) / p
    if np.any(~np.isfinite(norm)):
        bad = int(np.flatnonzero(~np.isfinite(norm))[0])
        raise RuntimeError(f"partition of unity has a gap at node {bad}; enlarge the bump plateau")
    vals = np.exp(logs - norm[cols])
    phi = sparse.csr_matrix((vals, (rows, cols)), shape=(lat.n_centers, grid.n_nodes))
    return PartitionOfUnity(lat, phi, float(lam_pu), normalization)


def dump_cover_json(cov: Cover, wts: Weights | None, path) -> None:
    """Write centers, r, assignment, |U_k| and |U_k|_psi as JSON."""
    lat = cov.lattice
    doc = {
        "r": lat.r,
        "centers": [[float(z.real), float(z.imag)] for z in lat.centers],
        "assignment": cov.assignment.tolist(),
        "cell_measures": cov.cell_measures.tolist(),
        "weighted_measures": None if wts is None else wts.weighted_measures.tolist(),
        "multiplicity_bound": lat.multiplicity_bound,
        "diagnostics": cov.diagnostics,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
