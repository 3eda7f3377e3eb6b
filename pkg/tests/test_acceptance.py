"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines; the
whole suite is part of the default pytest run.
"""

import cmath
import json
import math
import time

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import linear_sum_assignment

from shuffle_spectra.coupling import (coupling_ensemble, glued_joint_table,
                                      independent_pair_table, sigma_pair_table)
from shuffle_spectra.engine import KernelEnsemble
from shuffle_spectra.exact import _rank_rows, renewal_tv_curve
from shuffle_spectra.experiments import run_experiment
from shuffle_spectra.marking import marking_ensemble, theta_constants
from shuffle_spectra.spectral import (all_gamma_roots, dense_eigenvalues,
                                      eigen_residual, eigenfunction,
                                      solve_gamma, solve_zeta)
from shuffle_spectra.statistic import (TestStatistic, distinguisher_advantage,
                                       predicted_mean, sample_F_trajectories,
                                       sample_F_uniform, second_moment_bound,
                                       stationary_second_moment,
                                       tv_lower_bound)

from test_coupling import kernel_pair_table


def _report(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE {name}: PASS" + (f"  [{detail}]" if detail else ""))


def _smallest_gap_statistic(n: int) -> TestStatistic:
    """Statistic from the exact smallest-|1-lambda| nontrivial eigenpair."""
    roots = all_gamma_roots(n)
    nontrivial = roots[np.abs(roots - 1.0) > 1e-6]
    lams = (1 - 1 / n) * nontrivial
    g = nontrivial[np.argmin(np.abs(1 - lams))]
    return TestStatistic(eigenfunction(n, complex(g)))


def test_A01_zeta_root():
    """solve_zeta(1) matches the quoted digits, residual <= 1e-12, < 1 s."""
    t0 = time.perf_counter()
    z = solve_zeta(1, tol=1e-12)
    elapsed = time.perf_counter() - t0
    assert 2.088 <= z.real < 2.089
    assert 7.461 <= z.imag < 7.462
    assert 8.075 <= abs(1 + z) < 8.076
    assert abs(cmath.exp(z) - z - 1) <= 1e-12
    assert elapsed < 1.0
    _report("zeta-root", f"zeta={z:.6f}, |1+zeta|={abs(1+z):.6f}, "
            f"{elapsed*1e3:.1f} ms")


def test_A02_small_n_spectrum_oracle():
    """Mapped gamma roots + {1, 0} equal the dense spectrum of M for
    n in 3..12 within 1e-8; n=3 gives lambda = -1/3 to 1e-12."""
    for n in range(3, 13):
        roots = all_gamma_roots(n)
        nontrivial = roots[np.abs(roots - 1.0) > 1e-6]
        lams = np.concatenate([(1 - 1 / n) * nontrivial, [1.0, 0.0]])
        dense = dense_eigenvalues(n)
        cost = np.abs(lams[:, None] - dense[None, :])
        r, c = linear_sum_assignment(cost)
        assert cost[r, c].max() <= 1e-8, n
    r3 = all_gamma_roots(3)
    lam3 = (1 - 1 / 3) * r3[np.abs(r3 - 1.0) > 1e-6]
    assert abs(lam3[0] - (-1 / 3)) <= 1e-12
    _report("small-n-spectrum", "n=3..12 multiset match <= 1e-8")


@pytest.mark.parametrize("n", [8, 64, 1024, 100_000])
def test_A03_eigenfunction_identities(n):
    """f_0 = 0, f_1 = 1, sum f = 0, ||Mf - lam f||_inf <= 1e-10 ||f||_inf."""
    pair = solve_gamma(n, solve_zeta(1))
    eig = eigenfunction(n, pair.gamma)
    assert eig.values[0] == 0
    assert eig.values[1] == 1
    assert abs(eig.values.sum()) <= 1e-10 * n * eig.norm_inf
    resid = eigen_residual(eig)
    assert resid <= 1e-10 * eig.norm_inf
    _report(f"eigenfunction-identities n={n}", f"residual={resid:.2e}")


def test_A04_moment_formulas():
    """n=64, t in {0, n, 2n, 4n}, 1e5 replicas: mean within 4 se of
    lam^t ||f||_2^2; second moment within bound + 4 se; stationary second
    moment within 4 se of ||f||_2^4/(n-1).  Under 2 minutes."""
    t0 = time.perf_counter()
    n, reps = 64, 100_000
    stat = TestStatistic.from_branch(n, 1)
    times = [0, n, 2 * n, 4 * n]
    samples = sample_F_trajectories(stat, times, reps, seed=1)
    for t in times:
        vals = samples[t]
        mean = complex(vals.mean())
        se = math.sqrt(float(np.abs(vals - mean).__pow__(2).mean()) / reps)
        assert abs(mean - predicted_mean(stat, t)) <= 4 * se + 1e-14, t
        m2 = np.abs(vals) ** 2
        m2_se = float(m2.std()) / math.sqrt(reps)
        assert float(m2.mean()) <= second_moment_bound(stat, t) + 4 * m2_se, t
    uni = sample_F_uniform(stat, reps, seed=1)
    um2 = np.abs(uni) ** 2
    um2_se = float(um2.std()) / math.sqrt(reps)
    assert abs(float(um2.mean()) - stationary_second_moment(stat)) \
        <= 4 * um2_se
    elapsed = time.perf_counter() - t0
    assert elapsed < 120
    _report("moment-formulas", f"{elapsed:.1f} s")


def test_A05_exact_tv_oracle_inequality():
    """tv_lower_bound(t) <= exact TV(mu_t, U) for n in {5, 6, 7} at every
    t <= 4 n ln n, statistic from the exact smallest-|1-lambda| pair.
    Under 5 minutes at n=7."""
    t0 = time.perf_counter()
    violations = []
    for n in (5, 6, 7):
        stat = _smallest_gap_statistic(n)
        horizon = int(4 * n * math.log(n))
        curve = dict(renewal_tv_curve(n, horizon))
        for t in range(horizon + 1):
            if tv_lower_bound(stat, t) > curve[t] + 1e-12:
                violations.append((n, t, tv_lower_bound(stat, t), curve[t]))
    elapsed = time.perf_counter() - t0
    assert not violations, violations
    assert elapsed < 300
    _report("exact-tv-oracle", f"{elapsed:.2f} s, no violations")


def test_A06_lower_bound_separation():
    """n=1024: advantage >= 0.2 at t = floor(0.05 n ln n) and <= 0.05 at
    t = floor(3 n ln n), 1e4 replicas each.  Under 10 minutes."""
    t0 = time.perf_counter()
    n, reps = 1024, 10_000
    stat = TestStatistic.from_branch(n, 1)
    t_early = int(0.05 * n * math.log(n))
    t_late = int(3 * n * math.log(n))
    samples = sample_F_trajectories(stat, [t_early, t_late], reps, seed=6,
                                    stream_name="lowerbound")
    uni = sample_F_uniform(stat, reps, seed=6)
    adv_early = distinguisher_advantage(
        samples[t_early], uni, phase=float(np.angle(predicted_mean(stat, t_early))))
    adv_late = distinguisher_advantage(
        samples[t_late], uni, phase=float(np.angle(predicted_mean(stat, t_late))))
    elapsed = time.perf_counter() - t0
    assert adv_early >= 0.2, adv_early
    assert adv_late <= 0.05, adv_late
    assert elapsed < 600
    _report("lower-bound-separation",
            f"adv({t_early})={adv_early:.3f}, adv({t_late})={adv_late:.3f}, "
            f"{elapsed:.1f} s")


def test_A07_coupling_correctness():
    """Exact one-step marginal equivalence at n in {4, 5} (rational,
    atom-by-atom); empirical unglue probability within the closed-form
    bound + 4 se at n=64, t=256, 1e5 runs."""
    from itertools import permutations
    for n in (4, 5):
        for a, b in permutations(range(n), 2):
            joint = glued_joint_table(n, a, b)
            sig_m, eta_m = {}, {}
            for (sig, eta), p in joint.items():
                sig_m[sig] = sig_m.get(sig, 0) + p
                eta_m[eta] = eta_m.get(eta, 0) + p
            assert sig_m == kernel_pair_table(n, a, b), (n, a, b)
            assert sig_m == sigma_pair_table(n, a, b), (n, a, b)
            assert eta_m == independent_pair_table(n, a, b), (n, a, b)
    n, t, reps = 64, 256, 100_000
    ens = coupling_ensemble(n, 1, 2, t, reps, seed=7)
    frac = ens.unglued_fraction
    nbar = float(ens.n_ij.mean())
    se = math.sqrt(frac * (1 - frac) / reps)
    bound = 2 * nbar / n + 2 * t / n ** 2
    assert frac <= bound + 4 * se, (frac, bound)
    _report("coupling-correctness",
            f"unglued={frac:.3f} <= bound={bound:.3f}")


def test_A08_strong_uniform_time():
    """Chi-squared uniformity of the permutation at time T for n=5 under
    the cyclic and star rules (1e5 runs, significance 1e-3); exact
    state-0 counting identity in every run."""
    n, runs = 5, 100_000
    for rule, seed in (("cyclic", 41), ("star", 42)):
        ens = marking_ensemble(n, rule, runs, seed=seed, cap=5000)
        assert (ens.T >= 0).all()
        assert (ens.T >= n).all()
        ranks = _rank_rows(ens.final_state_to_card, n)
        obs = np.bincount(ranks, minlength=120)
        exp = runs / 120
        chi2 = float(((obs - exp) ** 2 / exp).sum())
        p = float(stats.chi2.sf(chi2, 119))
        assert p > 1e-3, (rule, p)
    # counting identity on renewal-frame runs: total state-0 occupation
    # over all cards and s < t equals t, in every replica
    t_steps, reps = 300, 64
    ens2 = KernelEnsemble(16, reps)
    rng = np.random.default_rng(11)
    visits = np.zeros(reps, dtype=np.int64)
    for _ in range(t_steps):
        visits += (ens2.card_states() == 0).sum(axis=1)
        ens2.step(rng.integers(16, size=reps))
    assert (visits == t_steps).all()
    _report("strong-uniform-time", "chi-squared p > 1e-3 for both rules; "
            "counting identity exact")


def test_A09_epoch_machinery():
    """n=256, 1e4 runs: m_{k+1} >= m_k + D_k/n in every run and epoch;
    binned growth inequality and the D_k frequency bound hold with 4-se
    slack; P(T > 8 n ln n) <= 0.05."""
    n, runs = 256, 10_000
    theta, _ = theta_constants()
    cap = int(8 * n * math.log(n))
    ens = marking_ensemble(n, "cyclic", runs, seed=9, cap=cap)
    m = ens.m()
    u = ens.u
    # exact per-run inequality
    assert (m[:, 1:] >= m[:, :-1] + ens.d[:, :-1] / n - 1e-12).all()
    # binned conditional-growth inequality:
    # E[u_{k+1} - u_k (1 - 2 theta m_k) | bin] <= 0 + 4 se
    K = ens.epochs
    ks, mbins, diffs = [], [], []
    for k in range(1, K):
        u_k, u_next, m_k = u[:, k - 1], u[:, k], m[:, k - 1]
        sel = u_k > 0
        if not sel.any():
            continue
        diffs.append(u_next[sel] - u_k[sel] * (1 - 2 * theta * m_k[sel]))
        ks.append(np.full(sel.sum(), k))
        mbins.append(np.round(m_k[sel] / 0.05).astype(int))
    diffs = np.concatenate(diffs)
    ks = np.concatenate(ks)
    mbins = np.concatenate(mbins)
    checked_bins = 0
    for key in {(int(a), int(b)) for a, b in zip(ks, mbins)}:
        sel = (ks == key[0]) & (mbins == key[1])
        cnt = int(sel.sum())
        if cnt < 200:
            continue
        mean = float(diffs[sel].mean())
        se = float(diffs[sel].std()) / math.sqrt(cnt)
        assert mean <= 4 * se, (key, mean, se)
        checked_bins += 1
    assert checked_bins >= 5
    # D_k frequency bound on epochs with m_k < 1/2:
    # P(D_k >= theta n m_k / 2) >= theta^2/8 - 4 se
    sel = (m[:, :-1] < 0.5) & (m[:, :-1] > 0)
    hits = ens.d[:, :-1][sel] >= theta * n * m[:, :-1][sel] / 2
    p_hat = float(hits.mean())
    se = math.sqrt(p_hat * (1 - p_hat) / hits.size)
    assert p_hat >= theta ** 2 / 8 - 4 * se, p_hat
    # tail: no run exceeded the cap
    tail = float((ens.T < 0).mean())
    assert tail <= 0.05
    _report("epoch-machinery",
            f"bins checked={checked_bins}, D_k freq={p_hat:.3f}, "
            f"P(T > 8 n ln n)={tail:.4f}")


def test_A10_determinism_across_threads(tmp_path):
    """Same config + seed give byte-identical CSVs on rerun and across
    1 vs 8 worker threads."""
    cfg = {"experiment": "lowerbound", "n": 64,
           "times": [0, "0.2*n*ln(n)"], "replicas": 4000}
    paths = {}
    for label, threads in (("a1", 1), ("a2", 1), ("b8", 8)):
        run_experiment(dict(cfg), tmp_path / label, seed=1234, threads=threads)
        paths[label] = (tmp_path / label / "lowerbound.csv").read_bytes()
    assert paths["a1"] == paths["a2"]
    assert paths["a1"] == paths["b8"]
    cfg2 = {"experiment": "exact-tv", "n": 5, "rule": "cyclic"}
    run_experiment(dict(cfg2), tmp_path / "e1", seed=0, threads=1)
    run_experiment(dict(cfg2), tmp_path / "e8", seed=0, threads=8)
    assert (tmp_path / "e1" / "tv.csv").read_bytes() == \
        (tmp_path / "e8" / "tv.csv").read_bytes()
    _report("determinism", "byte-identical at 1 and 8 threads")
