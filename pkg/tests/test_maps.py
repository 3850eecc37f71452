import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowmix import maps


def test_doubling_step_values():
    assert maps.doubling_step(0.3) == pytest.approx(0.6)
    assert maps.doubling_step(0.7) == pytest.approx(0.4)
    assert maps.doubling_step(0.5) == 0.0
    assert maps.doubling_step(0.0) == 0.0
    assert maps.doubling_step(1.0) == 0.0


def test_lsv_step_values():
    # right branch is 2x - 1; left branch fixes 0 and maps 1/2 to 1
    assert maps.lsv_step(0.75, 0.4) == pytest.approx(0.5)
    assert maps.lsv_step(0.0, 0.4) == 0.0
    assert maps.lsv_step(0.5, 0.4) == pytest.approx(1.0)
    # left branch: x (1 + (2x)^alpha)
    x, a = 0.25, 0.5
    assert maps.lsv_step(x, a) == pytest.approx(x * (1 + (2 * x) ** a))


def test_lsv_orbit_through_the_top():
    sys_ = maps.lsv(0.5)
    # 0.5 -> 1.0 -> 1.0 (1 is fixed by the right branch)
    assert maps.orbit(sys_, 0.5, 2).tolist() == [0.5, 1.0, 1.0]


def test_orbit_length_and_start():
    sys_ = maps.lsv(0.4)
    o = maps.orbit(sys_, 0.3, 7)
    assert len(o) == 8 and o[0] == 0.3


def test_g_inverse_roundtrip_scalar():
    for alpha in (0.25, 0.4, 0.45, 0.9):
        for u in (1e-8, 0.1, 0.5, 0.9, 1.0):
            y = maps.g_inverse(u, alpha)
            assert 0.0 <= y <= 0.5
            assert y * (1 + (2 * y) ** alpha) == pytest.approx(u, abs=1e-12)


def test_g_inverse_frozen_value():
    # bisection oracle, frozen: g(y) = 0.5 at alpha = 0.5
    assert maps.g_inverse(0.5, 0.5) == pytest.approx(0.28492014549902655, abs=1e-12)


def test_g_inverse_array():
    u = np.linspace(0.01, 1.0, 17)
    y = maps.g_inverse(u, 0.4)
    assert np.allclose(y * (1 + (2 * y) ** 0.4), u, atol=1e-12)


@given(st.floats(0.0, 1.0), st.sampled_from([0.25, 0.4, 0.45]))
@settings(max_examples=200, deadline=None)
def test_lsv_step_stays_in_unit_interval(x, alpha):
    y = maps.lsv_step(x, alpha)
    assert 0.0 <= y <= 1.0


@given(st.floats(1e-12, 1.0), st.sampled_from([0.25, 0.4, 0.45]))
@settings(max_examples=200, deadline=None)
def test_g_inverse_inverts_left_branch(u, alpha):
    y = maps.g_inverse(u, alpha)
    assert abs(y * (1 + (2 * y) ** alpha) - u) < 1e-10


def test_baker_step_branches():
    alpha = 0.4
    # x1 > 1/2: second coordinate contracts into the top half
    p = maps.baker_step(np.array([0.8, 0.3]), alpha)
    assert p[0] == pytest.approx(0.6)
    assert p[1] == pytest.approx(0.65)
    # x1 <= 1/2: second coordinate goes through the left-branch inverse
    q = maps.baker_step(np.array([0.3, 0.5]), alpha)
    assert q[0] == pytest.approx(0.3 * (1 + 0.6 ** alpha))
    assert q[1] == pytest.approx(maps.g_inverse(0.5, alpha))


def test_baker_is_invertible_on_the_second_coordinate():
    # two points with equal x1, distinct x2, stay distinct
    alpha = 0.4
    sys_ = maps.baker(alpha)
    a = np.array([0.3, 0.2])
    b = np.array([0.3, 0.8])
    for _ in range(20):
        a = maps.step(sys_, a)
        b = maps.step(sys_, b)
        assert abs(a[1] - b[1]) > 0


def test_map_system_metadata():
    assert maps.lsv(0.4).beta == pytest.approx(2.5)
    assert maps.doubling().beta == np.inf
    assert maps.baker(0.25).state_dim == 2
    with pytest.raises(ValueError):
        maps.lsv(1.5)
    with pytest.raises(ValueError):
        maps.lsv(0.0)


def test_sample_invariant_doubling_is_uniform():
    rng = np.random.default_rng(0)
    xs = np.array([maps.sample_invariant(maps.doubling(), rng) for _ in range(4000)])
    # KS against uniform at a generous threshold
    xs.sort()
    grid = (np.arange(1, len(xs) + 1)) / len(xs)
    assert np.max(np.abs(xs - grid)) < 0.03


def test_sample_invariant_lsv_biased_toward_zero():
    rng = np.random.default_rng(1)
    xs = np.array([maps.sample_invariant(maps.lsv(0.4), rng, burn_in=2000)
                   for _ in range(500)])
    # invariant density blows up at the neutral fixed point
    assert (xs < 0.5).mean() > 0.55


def test_step_rejects_out_of_range():
    with pytest.raises(ValueError):
        maps.lsv_step(1.5, 0.4)
    with pytest.raises(ValueError):
        maps.doubling_step(-0.1)
