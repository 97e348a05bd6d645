import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypframes import filters


def test_smooth_step_limits_and_monotone():
    t = np.linspace(-1, 2, 3001)
    s = filters.smooth_step(t)
    assert np.all(s[t <= 0] == 0) and np.all(s[t >= 1] == 1)
    assert np.all(np.diff(s) >= 0)
    assert filters.smooth_step(0.5) == pytest.approx(0.5)


def test_g_and_Q_supports():
    s = np.linspace(0, 4, 4001)
    assert np.all(filters.g(s[s <= 1]) == 1)
    assert np.all(filters.g(s[s >= 2]) == 0)
    q = filters.Q(s)
    assert np.all(q[(s < 0.5) | (s > 2)] == 0)
    assert np.all(q >= 0)


@pytest.mark.parametrize("J", [1, 3, 5])
def test_calderon_identity(J):
    lam = np.random.default_rng(J).uniform(0, 2.0**J, 1000)
    bank = filters.make_filter_bank(J)
    assert np.max(np.abs(bank.squares_sum(lam) - 1)) <= 1e-15


@given(st.floats(0, 64), st.integers(1, 6))
def test_squares_sum_telescopes(lam, J):
    bank = filters.make_filter_bank(J)
    assert bank.squares_sum(lam) == pytest.approx(filters.g(lam / 2.0**J), abs=1e-15)


@pytest.mark.parametrize("j", range(5))
def test_filter_vanishes_off_band(j):
    lo, hi = filters.band_of(j)
    lam = np.linspace(0, 64, 20001)
    F = filters.filter_profile(j, lam)
    assert np.all(F[(lam < lo) | (lam > hi)] == 0)
    assert F.max() == pytest.approx(1.0, abs=1e-3)


def test_low_pass_is_one_near_zero():
    assert np.all(filters.filter_profile(0, np.linspace(0, 1, 101)) == 1)


def test_invalid_bands():
    with pytest.raises(ValueError):
        filters.make_filter_bank(0)
    with pytest.raises(ValueError):
        filters.band_of(-1)
    with pytest.raises(ValueError):
        filters.make_filter_bank(2).F(3, 1.0)
