import numpy as np
import pytest
from scipy import stats

from shuffle_spectra.engine import (KernelEnsemble, descending_cyclic_locations,
                                    from_renewal_frame, renewal_step,
                                    run_renewal, run_shuffle, to_renewal_frame,
                                    transpose_step)
from shuffle_spectra.permutation import Permutation
from shuffle_spectra.rules import make_rule
from shuffle_spectra.spectral import renewal_matrix


def test_transpose_examples():
    ident = Permutation.identity(3)
    assert transpose_step(ident, 0, 2).as_tuple() == (2, 1, 0)
    assert transpose_step(ident, 1, 1) == ident
    two = Permutation.identity(2)
    assert transpose_step(transpose_step(two, 0, 1), 0, 1) == two


def test_transpose_rejects_bad_locations():
    with pytest.raises(ValueError):
        transpose_step(Permutation.identity(3), 0, 5)


def test_run_shuffle_zero_steps():
    start = Permutation([1, 0, 2])
    traj = run_shuffle(start, make_rule("cyclic", 3), 0, seed=1)
    assert traj.final == start


def test_run_shuffle_deterministic():
    rule = make_rule("uniform-iid", 6, seed=5)
    a = run_shuffle(Permutation.identity(6), rule, 50, seed=9, record_steps=True)
    rule2 = make_rule("uniform-iid", 6, seed=5)
    b = run_shuffle(Permutation.identity(6), rule2, 50, seed=9, record_steps=True)
    assert a.final == b.final
    assert [(r.t, r.l, r.r) for r in a.records] == \
        [(r.t, r.l, r.r) for r in b.records]


def test_run_shuffle_one_step_n2_uniform():
    # enumerate R_1: swap w.p. 1/2, identity w.p. 1/2
    outcomes = set()
    for r in range(2):
        perm = transpose_step(Permutation.identity(2), 1 % 2, r)
        outcomes.add(perm.as_tuple())
    assert outcomes == {(0, 1), (1, 0)}


def test_one_step_cyclic_matches_exact_kernel():
    """Empirical one-step distribution at n=3 (10^6 draws) against the
    exact kernel from the exact-tv module, within 4 se per atom."""
    from shuffle_spectra.exact import (ExactDistribution, perm_rank,
                                       step_kernel)
    n, reps = 3, 1_000_000
    exact = step_kernel(
        ExactDistribution.point_mass(Permutation.identity(n)), 1 % n)
    rng = np.random.default_rng(12345)
    rs = rng.integers(n, size=reps)
    counts = np.zeros(6)
    for r in range(n):
        rank = perm_rank(transpose_step(Permutation.identity(n), 1, r))
        counts[rank] += np.count_nonzero(rs == r)
    for rank in range(6):
        p = exact.probs[rank]
        se = np.sqrt(max(p * (1 - p), 1e-12) / reps)
        assert abs(counts[rank] / reps - p) <= 4 * se, rank


def test_renewal_frame_conversion_identity_times():
    p = Permutation([2, 0, 3, 1])
    assert to_renewal_frame(p, 0) == p
    assert to_renewal_frame(p, 4) == p
    assert from_renewal_frame(to_renewal_frame(p, 7), 7) == p


def test_kernel_equals_rotated_descending_cyclic_run():
    """Exact trajectory identity: the renewal kernel with draws u_t is the
    raw shuffle for L_t = (1-t) mod n and R_t = (u_t - t + 1) mod n,
    rotated up by t."""
    n, steps = 7, 40
    rng = np.random.default_rng(5)
    us = rng.integers(n, size=steps)
    locs = descending_cyclic_locations(n, steps)
    perm = Permutation.identity(n)
    raw = Permutation.identity(n)
    for t in range(1, steps + 1):
        u = int(us[t - 1])
        perm = renewal_step(perm, u)
        raw = raw.swap_states(int(locs[t - 1]), (u - t + 1) % n)
        assert from_renewal_frame(raw, t) == perm
        assert to_renewal_frame(perm, t) == raw  # inverse rotation


def test_exactly_one_card_at_state_zero():
    traj = run_renewal(6, 30, seed=3, record_steps=True)
    perm = Permutation.identity(6)
    for rec in traj.records:
        perm = renewal_step(perm, rec.r)
        assert (perm.card_to_state == 0).sum() == 1


def test_state_zero_occupation_counting_identity():
    # sum over cards of state-0 visit counts over s < t equals t
    n, t = 6, 120
    traj = run_renewal(n, t, seed=8, trace_cards=tuple(range(n)))
    visits = sum(int((traj.card_traces[c][:t] == 0).sum()) for c in range(n))
    assert visits == t


def test_kernel_ensemble_matches_scalar():
    n = 7
    rng = np.random.default_rng(5)
    us = rng.integers(n, size=25)
    perm = Permutation.identity(n)
    ens = KernelEnsemble(n, 4)
    for u in us:
        perm = renewal_step(perm, int(u))
        ens.step(np.full(4, u))
    assert (ens.card_states() == perm.card_to_state[np.newaxis, :]).all()


def _chi2_rows(transitions: np.ndarray, row_probs: np.ndarray) -> float:
    """Chi-squared p-value of observed transition counts against a row."""
    obs = transitions
    exp = row_probs * obs.sum()
    mask = exp > 0
    stat = float(((obs[mask] - exp[mask]) ** 2 / exp[mask]).sum())
    return float(stats.chi2.sf(stat, mask.sum() - 1))


def test_kernel_single_card_trace_follows_M():
    """Pooled single-card transitions in the renewal frame match the rows
    of M (>= 1e5 transitions, chi-squared per row)."""
    n, replicas, steps = 8, 250, 500
    M = renewal_matrix(n)
    ens = KernelEnsemble(n, replicas)
    rng = np.random.default_rng(999)
    card = 3
    counts = np.zeros((n, n))
    prev = ens.card_states()[:, card]
    for _ in range(steps):
        ens.step(rng.integers(n, size=replicas))
        cur = ens.card_states()[:, card]
        np.add.at(counts, (prev, cur), 1)
        prev = cur
    assert counts.sum() >= 1e5
    for i in range(n):
        p = _chi2_rows(counts[i], M[i])
        assert p > 1e-6, f"row {i}: p={p}"


def test_converted_cyclic_trace_follows_reflected_M():
    """The frame rotation applied to the ascending cyclic shuffle gives
    the renewal chain up to the fixed relabeling s -> 1 - s."""
    n, steps = 5, 100_000
    M = renewal_matrix(n)
    refl = (1 - np.arange(n)) % n
    M_refl = M[np.ix_(refl, refl)]
    traj = run_shuffle(Permutation.identity(n), make_rule("cyclic", n), steps,
                       seed=77, trace_cards=(2,))
    raw_states = traj.card_traces[2]
    ts = np.arange(steps + 1)
    renewal_states = (raw_states - ts) % n
    counts = np.zeros((n, n))
    np.add.at(counts, (renewal_states[:-1], renewal_states[1:]), 1)
    for i in range(n):
        assert _chi2_rows(counts[i], M_refl[i]) > 1e-6, f"row {i}"


def test_trajectory_csv_rows():
    traj = run_shuffle(Permutation.identity(4), make_rule("cyclic", 4), 5,
                       seed=2, record_steps=True, trace_cards=(0,),
                       debug_validate=True)
    rows = list(traj.records_csv_rows())
    assert len(rows) == 5
    assert all(r[0] == t for t, r in zip(range(1, 6), rows))
    trace_rows = list(traj.trace_csv_rows())
    assert len(trace_rows) == 6
    assert trace_rows[0] == (0, 0, 0)
