"""Statistical acceptance suite.

One test per criterion; each prints a single [PASS]/[FAIL] line with the
measured quantity and its threshold. Thresholds come from the registry's
THRESHOLDS table (the same one the CLI's --check applies). Budgets assume a
single CPU core; the whole suite takes tens of minutes.
"""

import numpy as np
import pytest
from scipy.stats import kstest

from slowmix import maps, observables, stats, sums, tower, weakdep
from slowmix._engine import ensemble_block_sums
from slowmix.experiments import (THRESHOLDS, default_observable,
                                 run_experiment)
from slowmix.fastslow import (FastSlowSpec, fastslow_endpoints,
                              green_kubo_sigma, homogenisation_compare)

pytestmark = pytest.mark.acceptance

LSV = maps.lsv(0.4)
DOUBLING = maps.doubling()


def _report(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d} {name}: {detail}"
    print(line)
    assert ok, line


# -- exact / property-based ------------------------------------------------

def test_criterion_01_chen_relation():
    rng = np.random.default_rng(101)
    systems = [DOUBLING, maps.lsv(0.25), maps.lsv(0.4), maps.lsv(0.45),
               maps.baker(0.4)]
    obs = [observables.coordinate(), observables.cosine(1.0),
           observables.cosine(2.0),
           observables.HolderObservable(observables.AFFINE, 2.0, mean_offset=1.0)]
    worst = 0.0
    for _ in range(1000):
        system = systems[rng.integers(len(systems))]
        v = obs[rng.integers(len(obs))]
        w = obs[rng.integers(len(obs))]
        n = int(rng.integers(20, 160))
        x0 = maps.sample_invariant(system, rng, burn_in=0)
        cuts = sorted(set(rng.integers(1, n, size=rng.integers(1, 4)).tolist()))
        bounds = [0, *cuts, n]
        segs = [sums.iterated_sum_stream(system, v, w, x0, a, b)
                for a, b in zip(bounds[:-1], bounds[1:])]
        combined = sums.chen_recombine(segs)
        direct = sums.iterated_sum_stream(system, v, w, x0, 0, n)
        scale = max(abs(direct.ss_vw), abs(direct.s_v), 1.0)
        worst = max(worst, abs(combined.ss_vw - direct.ss_vw) / scale,
                    abs(combined.s_v - direct.s_v) / scale)
    _report(1, "recombination identity", worst < 1e-9,
            f"max rel err {worst:.2e} over 1000 instances (< 1e-9)")


def test_criterion_02_streaming_vs_bruteforce():
    rng = np.random.default_rng(102)
    systems = [DOUBLING, maps.lsv(0.4), maps.baker(0.4)]
    obs = [observables.coordinate(), observables.cosine(1.0)]
    worst = 0.0
    lengths = np.concatenate([
        rng.integers(4, 400, size=949),
        np.exp(rng.uniform(np.log(400), np.log(10_000), size=50)).astype(int),
        [10_000],
    ])
    for n in lengths:
        system = systems[rng.integers(len(systems))]
        v = obs[rng.integers(len(obs))]
        w = obs[rng.integers(len(obs))]
        x0 = maps.sample_invariant(system, rng, burn_in=0)
        a = sums.iterated_sum_stream(system, v, w, x0, 0, int(n)).ss_vw
        b = sums.iterated_sum_bruteforce(system, v, w, x0, 0, int(n))
        worst = max(worst, abs(a - b) / max(abs(b), 1.0))
    _report(2, "streaming equals brute force", worst < 1e-9,
            f"max rel err {worst:.2e}, {len(lengths)} windows up to 1e4 (< 1e-9)")


def test_criterion_03_block_scheme_bounds():
    bad = 0
    rng = np.random.default_rng(103)
    for k in range(1, 65):
        two_k = 2 * k
        ns = np.arange(two_k, 10_001, dtype=np.int64)
        i = np.arange(two_k + 1, dtype=np.int64)[:, None]
        a = (i * ns[None, :]) // two_k  # integer-exact partition points
        d = np.diff(a, axis=0) * two_k  # compare scaled to avoid floats
        if np.any(d < ns[None, :] - two_k) or np.any(d > ns[None, :] + two_k):
            bad += 1
        lowers = a[0:two_k:2]
        uppers = a[1:two_k + 1:2] - 1
        gaps = (lowers[1:] - uppers[:-1]) * two_k
        if k > 1 and np.any(gaps < ns[None, :]):
            bad += 1
        # the API produces exactly these points (random spot checks)
        for n in rng.choice(ns, size=3, replace=False):
            assert np.array_equal(sums.block_partition(int(n), k).a, a[:, n - two_k])
    _report(3, "block partition bounds", bad == 0,
            f"exhaustive n<=1e4, k<=64: {bad} violations (0 allowed)")


def test_criterion_04_functional_bounds():
    k, p, r = 4, 3.0, 1.0
    f = weakdep.power_of_sum(k, p, r)
    rng = np.random.default_rng(104)
    x = rng.uniform(-r, r, size=(100_000, k))
    y = rng.uniform(-r, r, size=(100_000, k))
    sup_viol = int(np.sum(f(x) > (k * r) ** p + 1e-12))
    num = np.abs(f(x) - f(y))
    den = np.abs(x - y).sum(axis=1)
    ok_pairs = den > 0
    lip_viol = int(np.sum(num[ok_pairs] / den[ok_pairs] >
                          p * (k * r) ** (p - 1) + 1e-9))
    _report(4, "power-of-sum bounds", sup_viol == 0 and lip_viol == 0,
            f"1e5 pairs: {sup_viol} sup / {lip_viol} Lipschitz violations (0 allowed)")


def test_criterion_05_tower_identities():
    rng = np.random.default_rng(105)
    # (a) psi additivity along a path
    spec = tower.TowerSpec(beta=2.5)
    s = tower.stationary_start(spec, rng)
    states = [s]
    for _ in range(300):
        states.append(tower.tower_step(states[-1], spec, rng))
    additive = all(
        states[n + m].return_count - states[0].return_count
        == (states[n].return_count - states[0].return_count)
        + (states[n + m].return_count - states[n].return_count)
        for n, m in ((0, 300), (50, 100), (123, 177)))
    # (b) phi = 1 collapses E[theta^psi_n] to theta^n exactly
    unit = tower.TowerSpec(beta=2.0, phi_law="explicit", pmf=(1.0,))
    phi1_err = max(abs(tower.theta_psi_exact(unit, 0.5, n) - 0.5 ** n) / 0.5 ** n
                   for n in (1, 5, 20))
    est = tower.theta_psi_moment(unit, 0.5, 12, 1000, seed=0, method="plain")
    phi1_mc = abs(est.value - 0.5 ** 12) / 0.5 ** 12
    # (c) tail exactness over 1e7 draws, binomial 3 sigma
    draws = tower.sample_return_times(spec, rng, 10_000_000)
    tail_ok = True
    detail_tail = []
    for m in (1, 2, 4, 8, 16):
        p = float(spec.tail(np.array(m)))
        phat = (draws >= m).mean()
        se = np.sqrt(p * (1 - p) / len(draws)) if 0 < p < 1 else 0.0
        ok = abs(phat - p) <= 3 * se if se else phat == p
        tail_ok &= ok
        detail_tail.append(f"m={m}:{(phat - p) / se if se else 0.0:+.1f}sd")
    ok = additive and phi1_err < 1e-12 and phi1_mc < 1e-9 and tail_ok
    _report(5, "tower identities", ok,
            f"additivity={additive}, phi1 err {phi1_err:.1e}, "
            f"tails [{', '.join(detail_tail)}] (3sd)")


# -- statistical -----------------------------------------------------------

def test_criterion_06_return_moment_slopes():
    tol = THRESHOLDS["tower_psi_slope_tol"]
    details = []
    ok = True
    for beta in (1.5, 2.5, 4.0):
        res = run_experiment("tower-psi", {
            "beta": beta, "theta": 0.5,
            "n_list": [1 << p for p in range(6, 15)],
            "trials": 1_000_000, "seed": 106})
        slope = res.fits["slope"]
        target = -(beta - 1.0)
        ok &= abs(slope - target) <= tol
        details.append(f"beta={beta}: {slope:.3f} vs {target}")
    _report(6, "return-moment decay slopes", ok,
            "; ".join(details) + f" (tol +-{tol})")


def test_criterion_07_correlation_decay():
    lo, hi = THRESHOLDS["correlation_slope"]
    res = run_experiment("correlation", {
        "map": "lsv", "alpha": 0.4,
        "n_list": [1 << p for p in range(4, 11)],
        "trials": 32, "orbit_len": 1 << 23, "seed": 107})
    slope = res.fits.get("slope", float("nan"))
    ok_lsv = lo <= slope <= hi
    ctrl = run_experiment("correlation", {
        "map": "doubling", "n_list": list(range(1, 11)),
        "trials": 8, "orbit_len": 1 << 21, "seed": 107})
    ratio = ctrl.fits["lag_ratio"]
    ok_ctrl = abs(ratio - 0.5) <= 0.05
    _report(7, "correlation decay", ok_lsv and ok_ctrl,
            f"slope {slope:.3f} in [{lo}, {hi}] "
            f"({res.fits.get('points_used', 0)} lags above noise); "
            f"doubling ratio {ratio:.3f} (0.5 +- 0.05)")


@pytest.fixture(scope="module")
def lsv_moment_run():
    v = default_observable(LSV, seed=108)
    return ensemble_block_sums(LSV, v, v,
                               [1 << p for p in range(8, 16)],
                               100_000, seed=108)


def test_criterion_08_birkhoff_norm_scaling(lsv_moment_run):
    lo, hi = THRESHOLDS["moments_exponent"]["lsv"]
    cps, sv, _ = lsv_moment_run
    pts = [(int(n), stats.lp_norm_from_samples(sv[:, j], 3.0, seed=j).value)
           for j, n in enumerate(cps)]
    exp_lsv = stats.scaling_fit(pts).exponent
    ok_lsv = lo <= exp_lsv <= hi
    ctrl = run_experiment("moments", {
        "map": "doubling", "gamma": 1.5,
        "n_list": [1 << p for p in range(8, 16)],
        "trials": 100_000, "seed": 108})
    clo, chi = THRESHOLDS["moments_exponent"]["doubling"]
    ok_ctrl = clo <= ctrl.fits["exponent"] <= chi
    _report(8, "Birkhoff-sum norm scaling", ok_lsv and ok_ctrl,
            f"intermittent exponent {exp_lsv:.3f} in [{lo}, {hi}]; "
            f"doubling {ctrl.fits['exponent']:.3f} in [{clo}, {chi}]")


def test_criterion_09_iterated_norm_scaling(lsv_moment_run):
    lo, hi = THRESHOLDS["iterated_exponent"]
    cps, _, ss = lsv_moment_run
    pts = [(int(n), stats.lp_norm_from_samples(ss[:, j], 1.5, seed=j).value)
           for j, n in enumerate(cps)]
    exponent = stats.scaling_fit(pts).exponent
    _report(9, "iterated-sum norm scaling", lo <= exponent <= hi,
            f"exponent {exponent:.3f} in [{lo}, {hi}]")


def test_criterion_10_functional_correlation_rate():
    cap = THRESHOLDS["fcb_slope_max"]
    res = run_experiment("fcb", {
        "map": "lsv", "alpha": 0.4,
        "n_list": [1 << p for p in range(4, 11)],
        "trials": 50_000_000, "seed": 110})
    slope = res.fits.get("slope", float("nan"))
    used = res.fits.get("points_used", 0)
    _report(10, "functional-correlation rate", slope <= cap,
            f"slope {slope:.3f} <= {cap} on {used} gaps above the noise floor")


def test_criterion_11_coupling_gap():
    mult = THRESHOLDS["weakdep_se_mult"]
    res = run_experiment("weakdep", {
        "map": "lsv", "alpha": 0.4,
        "n_list": [1 << p for p in range(6, 13)],
        "k": 2, "trials": 20_000, "seed": 111})
    ok_lsv = res.passed
    horizon = res.fits["gap_horizon"]
    ctrl = run_experiment("weakdep", {
        "map": "doubling", "n_list": [32, 64, 128, 240],
        "k": 2, "trials": 40_000, "seed": 111})
    ok_ctrl = ctrl.passed and ctrl.fits["gap_horizon"] <= 60
    _report(11, "weak-dependence coupling", ok_lsv and ok_ctrl,
            f"intermittent delta below {mult}x SE from gap {horizon:g}; "
            f"doubling from gap {ctrl.fits['gap_horizon']:g} (<= 60)")


@pytest.fixture(scope="module")
def doubling_sigma2():
    v = default_observable(DOUBLING)
    return green_kubo_sigma(DOUBLING, v, l_max=40, trials=64,
                            orbit_len=1 << 20, seed=113)


def test_criterion_12_homogenisation(doubling_sigma2):
    cap = THRESHOLDS["fastslow_ks_max"]
    # additive doubling case against the exact Gaussian limit
    v = default_observable(DOUBLING)
    spec = FastSlowSpec(DOUBLING, v, "zero", 0.0, xi=0.0, n=1 << 14)
    xs = fastslow_endpoints(spec, trials=100_000, seed=112)
    sigma = np.sqrt(doubling_sigma2["sigma2"])
    ks_gauss = kstest(xs, "norm", args=(0.0, sigma)).statistic
    ok_doubling = ks_gauss < cap
    # intermittent case against the SDE reference: KS nonincreasing up to CI
    vl = default_observable(LSV, seed=112)
    lspec = FastSlowSpec(LSV, vl, "zero", 0.0, xi=0.0, n=1 << 14)
    rows = homogenisation_compare(lspec, [1 << 10, 1 << 12, 1 << 14],
                                  trials=100_000, seed=112)
    ks_seq = [r["ks"] for r in rows]
    slack = 2.0 / np.sqrt(100_000)
    ok_lsv = all(ks_seq[i + 1] <= ks_seq[i] + slack for i in range(len(ks_seq) - 1))
    _report(12, "homogenisation limit", ok_doubling and ok_lsv,
            f"doubling KS {ks_gauss:.4f} < {cap} at n=2^14; "
            f"intermittent KS over n: {[round(k, 4) for k in ks_seq]} nonincreasing")


def test_criterion_13_green_kubo(doubling_sigma2):
    lo, hi = THRESHOLDS["green_kubo_sigma2"]
    s2 = doubling_sigma2["sigma2"]
    ok = lo <= s2 <= hi and doubling_sigma2["consistent"]
    _report(13, "Green-Kubo variance", ok,
            f"sigma2 {s2:.4f} in [{lo}, {hi}], "
            f"direct cross-check {doubling_sigma2['direct']:.4f} consistent")
