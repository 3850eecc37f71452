import numpy as np
import pytest

from slowmix import maps, observables
from slowmix.fastslow import (FastSlowSpec, SDECoefficients, direct_sigma2,
                              euler_maruyama, fastslow_endpoints,
                              fastslow_trajectory, green_kubo_sigma,
                              homogenisation_compare, iterated_drift_coeff)


DOUBLING = maps.doubling()
V = observables.HolderObservable(observables.COORD, mean_offset=0.5)
ZERO = observables.HolderObservable(observables.AFFINE, 0.0)


def test_trajectory_constant_when_silent():
    spec = FastSlowSpec(DOUBLING, ZERO, "zero", 0.0, xi=0.7, n=100)
    path = fastslow_trajectory(spec, 0.3, [0.0, 0.5, 1.0])
    assert np.allclose(path, 0.7)


def test_trajectory_pure_drift_is_euler():
    # a = 1, b = 0: X_n(1) = xi + n/n = xi + 1 exactly
    spec = FastSlowSpec(DOUBLING, ZERO, "const", 1.0, xi=0.2, n=250)
    path = fastslow_trajectory(spec, 0.3, [1.0])
    assert path[0] == pytest.approx(1.2, rel=1e-12)


def test_trajectory_linear_drift_converges_to_ode():
    # a(x) = -x: limit x(1) = xi e^{-1}; Euler error ratio ~2 between n, 2n
    xi = 1.0
    errs = []
    for n in (256, 512):
        spec = FastSlowSpec(maps.lsv(0.4), ZERO, "linear", -1.0, xi=xi, n=n)
        path = fastslow_trajectory(spec, 0.3, [1.0])
        errs.append(abs(path[0] - xi * np.exp(-1.0)))
    assert errs[1] < errs[0]
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.2)


def test_trajectory_overflow_guard():
    spec = FastSlowSpec(DOUBLING, ZERO, "linear", 5e7, xi=1.0, n=10)
    with pytest.raises(OverflowError):
        fastslow_trajectory(spec, 0.3, [1.0])


def test_spec_validation():
    with pytest.raises(ValueError):
        FastSlowSpec(DOUBLING, V, "cubic", 1.0)
    with pytest.raises(ValueError):
        FastSlowSpec(DOUBLING, V, n=0)


def test_endpoint_variance_matches_sum_variance():
    # a = 0, b = v: Var(X_n(1)) = E[S_v(n)^2]/n by construction
    n = 1 << 12
    spec = FastSlowSpec(DOUBLING, V, "zero", 0.0, xi=0.0, n=n)
    xs = fastslow_endpoints(spec, trials=40_000, seed=0)
    assert xs.var(ddof=1) == pytest.approx(0.25, abs=0.01)


def test_euler_maruyama_deterministic_cases():
    rng = np.random.default_rng(0)
    frozen = SDECoefficients(sigma2=0.0, e_c=0.0)
    x = euler_maruyama(frozen, lambda x: np.zeros_like(x), 0.4, rng, dt=1e-3, paths=8)
    assert np.allclose(x, 0.4)
    x = euler_maruyama(frozen, lambda x: -x, 1.0, rng, dt=1e-4, paths=4)
    assert np.allclose(x, np.exp(-1.0), atol=1e-3)


def test_euler_maruyama_gaussian_law():
    rng = np.random.default_rng(1)
    coeffs = SDECoefficients(sigma2=0.25, e_c=0.0)
    x = euler_maruyama(coeffs, lambda x: np.zeros_like(x), 0.0, rng,
                       dt=1e-3, paths=100_000)
    assert x.mean() == pytest.approx(0.0, abs=0.01)
    assert x.var(ddof=1) == pytest.approx(0.25, rel=0.02)


def test_euler_maruyama_step_guard():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        euler_maruyama(SDECoefficients(0.1, 0.0), lambda x: x, 0.0, rng,
                       dt=0.01, t_end=1.0)


def test_green_kubo_doubling_quarter():
    res = green_kubo_sigma(DOUBLING, V, l_max=30, trials=16,
                           orbit_len=1 << 19, seed=0)
    assert res["sigma2"] == pytest.approx(0.25, abs=0.01)
    assert res["consistent"]


def test_green_kubo_zero_observable():
    res = green_kubo_sigma(DOUBLING, ZERO, l_max=5, trials=4,
                           orbit_len=1 << 14, seed=1)
    assert res["sigma2"] == 0.0


def test_direct_sigma2_doubling_quarter():
    res = direct_sigma2(DOUBLING, V, n=1 << 12, trials=20_000, seed=5)
    assert res["sigma2"] == pytest.approx(0.25, abs=0.01)
    assert res["ci_low"] < 0.25 < res["ci_high"]


def test_iterated_drift_doubling():
    # E[SS_vv(n)]/n -> sum_{l>=1} c(l) = 1/12
    res = iterated_drift_coeff(DOUBLING, V, n=1 << 12, trials=20_000, seed=2)
    assert res["e_c"] == pytest.approx(1 / 12, abs=0.01)
    assert res["converged"]


def test_homogenisation_doubling_ks_small():
    spec = FastSlowSpec(DOUBLING, V, "zero", 0.0, xi=0.0, n=1 << 12)
    rows = homogenisation_compare(spec, [1 << 10, 1 << 12], trials=20_000,
                                  seed=3, dt=1e-3)
    assert rows[-1]["ks"] < 0.05
    assert abs(rows[-1]["mean_diff"]) < 0.02
