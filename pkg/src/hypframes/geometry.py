"""Poincare disk model of the hyperbolic plane (curvature -1).

Points are handled as complex numbers ``z = u + i v`` with ``|z| < 1``.
Every function accepts scalars or numpy arrays and broadcasts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class Point:
    """A point of the open unit disk."""

    u: float
    v: float

    def __post_init__(self):
        if self.u * self.u + self.v * self.v >= 1.0:
            raise DomainError(f"point ({self.u}, {self.v}) is not inside the unit disk")

    @property
    def z(self) -> complex:
        return complex(self.u, self.v)

    @classmethod
    def from_complex(cls, z: complex) -> "Point":
        return cls(float(np.real(z)), float(np.imag(z)))

    @classmethod
    def polar(cls, r: float, theta: float) -> "Point":
        """Point at hyperbolic distance ``r`` from the origin in direction ``theta``."""
        return cls.from_complex(np.tanh(r / 2) * np.exp(1j * theta))


def as_complex(p) -> np.ndarray | complex:
    if isinstance(p, Point):
        return p.z
    return np.asarray(p, dtype=complex) if np.ndim(p) else complex(p)


def _check_disk(*zs):
    for z in zs:
        if np.any(np.abs(z) >= 1.0):
            raise DomainError("argument on or outside the unit circle")


def hyp_distance(p, q):
    """Hyperbolic distance between ``p`` and ``q``.

    Uses ``2 artanh(|p - q| / |1 - conj(p) q|)``, which equals
    ``arccosh(1 + 2|p-q|^2 / ((1-|p|^2)(1-|q|^2)))`` but keeps full
    relative accuracy for nearby points.
    """
    zp, zq = as_complex(p), as_complex(q)
    _check_disk(zp, zq)
    t = np.abs(zp - zq) / np.abs(1.0 - np.conj(zp) * zq)
    return 2.0 * np.arctanh(np.minimum(t, 1.0))


def radius_of(p):
    """Hyperbolic distance from the origin."""
    z = as_complex(p)
    _check_disk(z)
    return 2.0 * np.arctanh(np.abs(z))


def ball_volume(R):
    """Hyperbolic area of a ball of radius ``R``: ``2 pi (cosh R - 1)``."""
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise DomainError("ball radius must be nonnegative")
    # 2 (cosh R - 1) = 4 sinh^2(R/2), stable as R -> 0
    out = 4.0 * np.pi * np.sinh(R / 2) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Isometry:
    """Orientation preserving isometry ``z -> (e^{i phi} z + w) / (1 + conj(w) e^{i phi} z)``.

    It maps the origin to ``w`` after rotating by ``phi``.
    """

    w: complex = 0j
    phi: float = 0.0

    def __post_init__(self):
        if abs(self.w) >= 1.0:
            raise DomainError("isometry parameter w must satisfy |w| < 1")

    def __call__(self, z):
        z = as_complex(z)
        a = np.exp(1j * self.phi) * z
        return (a + self.w) / (1.0 + np.conj(self.w) * a)

    def compose(self, other: "Isometry") -> "Isometry":
        """Return ``self o other``."""
        m = self.matrix() @ other.matrix()
        A, B, D = m[0, 0], m[0, 1], m[1, 1]
        return Isometry(complex(B / D), float(np.angle(A / D)))

    def matrix(self) -> np.ndarray:
        """SU(1,1) matrix ``[[a, b], [conj b, conj a]]`` of the map."""
        a = np.exp(0.5j * self.phi)
        b = self.w * np.exp(-0.5j * self.phi)
        return np.array([[a, b], [np.conj(b), np.conj(a)]])

    def inverse(self) -> "Isometry":
        # z = e^{-i phi}(y - w) / (1 - conj(w) y)
        w_inv = -np.exp(-1j * self.phi) * self.w
        return Isometry(complex(w_inv), -self.phi)


def translation(w: complex) -> Isometry:
    """Hyperbolic translation moving the origin to ``w``."""
    return Isometry(complex(w), 0.0)


def apply_isometry(T: Isometry, p):
    """Image of ``p`` under ``T``; returns a :class:`Point` for point input."""
    if isinstance(p, Point):
        return Point.from_complex(T(p.z))
    return T(p)


# ---------------------------------------------------------------------------
# quadrature grids


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Geodesic polar quadrature grid on the disk of radius ``R_max``.

    Nodes are stored ring by ring.  Ring ``i`` has radius ``r[i]`` and
    ``counts[i]`` equally spaced angles starting at ``phase[i]``; its nodes
    occupy ``offsets[i]:offsets[i+1]`` in the flat arrays.

    Attributes
    ----------
    r : ndarray
        Ring radii (hyperbolic).
    radial_weights : ndarray
        Radial weights including the density ``sinh r``.
    counts, offsets : ndarray
        Angular node counts and flat offsets per ring.
    z : ndarray
        Flat complex node coordinates.
    weights : ndarray
        Flat hyperbolic-area weights, ``2 pi / n_i`` times the radial weight.
    """

    R_max: float
    r: np.ndarray
    radial_weights: np.ndarray
    counts: np.ndarray
    phase: np.ndarray
    offsets: np.ndarray
    node_radius: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    weights: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return int(self.offsets[-1])

    @property
    def n_rings(self) -> int:
        return len(self.r)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.n_rings, int(self.counts.min())

    @property
    def ring_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_rings), self.counts)

    def nodes(self) -> list[Point]:
        return [Point.from_complex(z) for z in self.z]

    def integrate(self, values) -> complex | float:
        return np.dot(self.weights, np.asarray(values))

    def inner(self, f, g) -> complex:
        """``<f, g> = sum f conj(g) w``."""
        return np.dot(self.weights, np.asarray(f) * np.conj(np.asarray(g)))

    def norm(self, f) -> float:
        return float(np.sqrt(np.dot(self.weights, np.abs(np.asarray(f)) ** 2)))

    def total_measure(self) -> float:
        return float(self.weights.sum())

    def ring_values(self, values, i: int) -> np.ndarray:
        return np.asarray(values)[self.offsets[i]:self.offsets[i + 1]]


def _panel_edges(R_max: float, order: int, n_r: int, spacing, fine_radius, growth):
    if spacing is None:
        n_panels = max(1, int(np.ceil(n_r / order)))
        return np.linspace(0.0, R_max, n_panels + 1)
    edges = [0.0]
    cap = R_max / max(1, int(np.ceil(n_r / order)))
    while edges[-1] < R_max - 1e-12:
        h = _target_spacing(edges[-1], spacing, fine_radius, growth)
        edges.append(min(edges[-1] + min(order * h, cap), R_max))
    if len(edges) > 2 and edges[-1] - edges[-2] < 0.25 * (edges[-2] - edges[-3]):
        edges.pop(-2)
    return np.asarray(edges)


def _target_spacing(r, spacing, fine_radius, growth):
    r = np.asarray(r, dtype=float)
    if fine_radius is None:
        return spacing + 0 * r
    return spacing * np.exp(growth * np.maximum(r - fine_radius, 0.0))


def build_spatial_grid(
    R_max: float,
    n_r: int,
    n_theta: int,
    *,
    order: int = 8,
    spacing: float | None = None,
    fine_radius: float | None = None,
    growth: float = 1.0,
) -> SpatialGrid:
    """Geodesic polar grid with composite Gauss-Legendre radial panels.

    Parameters
    ----------
    R_max : float
        Truncation radius.
    n_r : int
        Number of radial nodes (rounded up to whole panels of ``order``
        nodes).  With ``spacing`` set it is a lower bound.
    n_theta : int
        Angular nodes per ring, or the minimum per ring when ``spacing`` is set.
    order : int
        Gauss-Legendre nodes per radial panel.
    spacing : float, optional
        Target node spacing.  Rings then carry ``~2 pi sinh r / h(r)``
        nodes and radial panels have width ``~order h(r)``.
    fine_radius, growth : float
        Beyond ``fine_radius`` the spacing grows like ``exp(growth (r - fine_radius))``.

    Notes
    -----
    The angular rule is the equispaced trapezoid rule, exact for
    trigonometric polynomials of degree below the ring count.  Panel edges
    depend only on the spacing law, so enlarging ``R_max`` appends panels.
    """
    if R_max <= 0 or n_r < 8 or n_theta < 8:
        raise DomainError("require R_max > 0, n_r >= 8, n_theta >= 8")
    order = min(order, n_r)
    edges = _panel_edges(float(R_max), order, n_r, spacing, fine_radius, growth)
    x, w = leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    r = ((b - a) / 2 * x + (a + b) / 2).ravel()
    wr = ((b - a) / 2 * w).ravel() * np.sinh(r)
    if spacing is None:
        counts = np.full(r.size, int(n_theta))
    else:
        h = _target_spacing(r, spacing, fine_radius, growth)
        c = np.ceil(2 * np.pi * np.sinh(r) / h).astype(int)
        c += c % 2
        counts = np.maximum(c, int(n_theta))
    offsets = np.concatenate([[0], np.cumsum(counts)])
    # stagger alternate rings by half a step to avoid radial alignment
    phase = np.where(np.arange(r.size) % 2 == 1, np.pi / counts, 0.0)
    ring = np.repeat(np.arange(r.size), counts)
    local = np.arange(offsets[-1]) - offsets[ring]
    theta = phase[ring] + 2 * np.pi * local / counts[ring]
    node_r = r[ring]
    z = np.tanh(node_r / 2) * np.exp(1j * theta)
    weights = (2 * np.pi / counts * wr)[ring]
    params = dict(R_max=float(R_max), n_r=int(n_r), n_theta=int(n_theta), order=int(order),
                  spacing=spacing, fine_radius=fine_radius, growth=float(growth))
    return SpatialGrid(float(R_max), r, wr, counts, phase, offsets, node_r, theta, z, weights, params)


def laplace_beltrami_polar(f, r, theta):
    """Finite-difference Laplace-Beltrami in geodesic polar coordinates.

    ``f`` is sampled on the tensor grid ``r`` (uniform) x ``theta`` (uniform,
    periodic).  Fourth-order central differences; the outermost two radial
    rows are returned as NaN.
    """
    f = np.asarray(f)
    dr = r[1] - r[0]
    dt = theta[1] - theta[0]
    fr = np.full_like(f, np.nan)
    frr = np.full_like(f, np.nan)
    s = slice(2, -2)
    fr[s] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * dr)
    frr[s] = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * dr**2)
    ftt = (-np.roll(f, -2, 1) + 16 * np.roll(f, -1, 1) - 30 * f
           + 16 * np.roll(f, 1, 1) - np.roll(f, 2, 1)) / (12 * dt**2)
    rr = r[:, None]
    return frr + fr / np.tanh(rr) + ftt / np.sinh(rr) ** 2
