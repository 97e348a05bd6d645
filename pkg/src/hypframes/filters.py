"""Dyadic Littlewood-Paley filters ``g``, ``Q`` and ``F_j``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def smooth_step_h(t):
    """``h(t) = exp(-1/t)`` for ``t > 0`` and 0 otherwise."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``, monotone between."""
    a = smooth_step_h(t)
    b = smooth_step_h(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def g(s):
    """Low-pass profile: 1 on ``[0, 1]``, 0 on ``[2, inf)``."""
    s = np.asarray(s, dtype=float)
    return smooth_step(2.0 - s)


def Q(s):
    """Band-pass profile ``g(s) - g(2s)``, supported in ``[1/2, 2]``."""
    s = np.asarray(s, dtype=float)
    return g(s) - g(2.0 * s)


def band_of(j: int) -> tuple[float, float]:
    """Spectral support interval of ``F_j``."""
    if j < 0:
        raise ValueError("band index must be nonnegative")
    if j == 0:
        return (0.0, 2.0)
    return (2.0 ** (j - 1), 2.0 ** (j + 1))


def filter_profile(j: int, lam):
    """``F_0 = sqrt(g)`` and ``F_j(lam) = sqrt(Q(2^-j lam))``."""
    if j < 0:
        raise ValueError("band index must be nonnegative")
    lam = np.asarray(lam, dtype=float)
    if j == 0:
        return np.sqrt(g(lam))
    return np.sqrt(np.clip(Q(lam / 2.0**j), 0.0, None))


@dataclass(frozen=True)
class FilterBank:
    """Filters ``F_0 .. F_J``.

    ``sum_j F_j(lam)^2`` telescopes to ``g(2^-J lam)``, which is 1 on ``[0, 2^J]``.
    """

    J_max: int

    def F(self, j: int, lam):
        if not 0 <= j <= self.J_max:
            raise ValueError(f"band {j} outside 0..{self.J_max}")
        return filter_profile(j, lam)

    def band(self, j: int) -> tuple[float, float]:
        return band_of(j)

    def squares_sum(self, lam):
        return sum(self.F(j, lam) ** 2 for j in range(self.J_max + 1))

    def __iter__(self):
        return iter(range(self.J_max + 1))


def make_filter_bank(J_max: int) -> FilterBank:
    if J_max < 1:
        raise ValueError("J_max must be at least 1")
    return FilterBank(int(J_max))
