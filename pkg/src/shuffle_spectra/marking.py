"""Card marking and the strong uniform time for arbitrary rules.

The stopping time: the card initially at L_1 is marked at t=1; afterwards
the card at L_t is marked if it is unmarked and the card at R_t is already
marked, and also if R_t = L_t and that card is unmarked.  Marks are
evaluated on the pre-swap configuration and never removed; T is the first
time all n cards are marked, at which point the permutation is exactly
uniform given T.

Epochs of length 2n start after the initial mark; epoch statistics
(unmarked fraction u_k, marked fraction m_k, pre-epoch-partner marks D_k)
drive the O(n log n) tail machinery, with
theta = e^{-2}(1 - e^{-1})/2 and C_0 = 32 theta^{-3} + theta^{-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import CHUNK, chunk_bounds, stream
from .permutation import Permutation
from .rules import ShuffleRule, make_rule

UNMARKED = np.iinfo(np.int32).max


def theta_constants() -> tuple[float, float]:
    """(theta, C_0) of the epoch growth argument."""
    theta = math.exp(-2.0) * (1.0 - math.exp(-1.0)) / 2.0
    return theta, 32.0 * theta ** -3 + 1.0 / theta


@dataclass
class MarkingState:
    """Raw-frame permutation plus the marked set."""
    perm: Permutation
    marked: np.ndarray          # bool, by card
    marked_count: int
    t: int

    @classmethod
    def initial(cls, n: int) -> "MarkingState":
        return cls(perm=Permutation.identity(n),
                   marked=np.zeros(n, dtype=bool), marked_count=0, t=0)


@dataclass(frozen=True)
class MarkEvent:
    """A card became marked: at step t, by transposition partner
    ``partner`` (-1 for the initial mark and for R_t = L_t self-marks)."""
    t: int
    card: int
    partner: int


@dataclass
class MarkingTrace:
    n: int
    mark_times: np.ndarray                 # by card; UNMARKED if never
    events: list[MarkEvent] = field(default_factory=list)


@dataclass
class UniformTimeResult:
    n: int
    T: int | None                          # None when the cap was hit
    reached: bool
    final: Permutation
    trace: MarkingTrace


def marking_step(state: MarkingState, l: int, r: int) -> MarkingState:
    """Apply the marking predicate (pre-swap) and then the transposition."""
    n = state.perm.n
    if not (0 <= l < n and 0 <= r < n):
        raise ValueError(f"locations ({l}, {r}) out of range for n={n}")
    cl = int(state.perm.state_to_card[l])
    cr = int(state.perm.state_to_card[r])
    marked = state.marked
    count = state.marked_count
    if not marked[cl] and (marked[cr] or r == l):
        marked = marked.copy()
        marked[cl] = True
        count += 1
    return MarkingState(perm=state.perm.swap_states(l, r), marked=marked,
                        marked_count=count, t=state.t + 1)


def run_until_uniform_time(n: int, rule: ShuffleRule, seed: int,
                           cap: int) -> UniformTimeResult:
    """Iterate the marked shuffle until all cards are marked or ``cap``."""
    if cap < n:
        raise ValueError("cap must be at least n")
    rule.reset()
    rng = stream(seed, "uniform-time")
    state = MarkingState.initial(n)
    trace = MarkingTrace(n=n, mark_times=np.full(n, UNMARKED, dtype=np.int64))

    for t in range(1, cap + 1):
        l = rule.location(t)
        r = int(rng.integers(n))
        if t == 1:
            first = int(state.perm.state_to_card[l])
            state.marked[first] = True
            state.marked_count = 1
            trace.mark_times[first] = 1
            trace.events.append(MarkEvent(t=1, card=first, partner=-1))
            state = MarkingState(perm=state.perm.swap_states(l, r),
                                 marked=state.marked, marked_count=1, t=1)
        else:
            before = state.marked_count
            cl = int(state.perm.state_to_card[l])
            cr = int(state.perm.state_to_card[r])
            state = marking_step(state, l, r)
            if state.marked_count > before:
                trace.mark_times[cl] = t
                trace.events.append(
                    MarkEvent(t=t, card=cl, partner=-1 if r == l else cr))
        if state.marked_count == n:
            return UniformTimeResult(n=n, T=t, reached=True,
                                     final=state.perm, trace=trace)
    return UniformTimeResult(n=n, T=None, reached=False,
                             final=state.perm, trace=trace)


# ---------------------------------------------------------------------------
# Epoch statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochStats:
    k: int
    u_k: float
    m_k: float
    d_k: int
    m_next: float
    growth: bool
    good: bool


def _epoch_of(t: int, n: int) -> int:
    """Epoch index containing step t (epoch k covers
    2 + 2n(k-1) <= t <= 1 + 2nk; the initial mark at t=1 is epoch 0)."""
    return 0 if t <= 1 else (t - 2) // (2 * n) + 1


def epoch_stats(trace: MarkingTrace) -> list[EpochStats]:
    """Per-epoch marking statistics from a completed (or capped) trace."""
    n = trace.n
    theta, _ = theta_constants()
    times = trace.mark_times[trace.mark_times != UNMARKED]
    if times.size == 0:
        raise ValueError("trace has no marks; not produced by a marking run")
    last_epoch = max(1, _epoch_of(int(times.max()), n))

    marks_by_epoch = np.zeros(last_epoch + 2, dtype=np.int64)
    for t in times:
        marks_by_epoch[_epoch_of(int(t), n)] += 1
    cum = np.cumsum(marks_by_epoch)

    d = np.zeros(last_epoch + 1, dtype=np.int64)
    for ev in trace.events:
        if ev.partner < 0:
            continue
        k = _epoch_of(ev.t, n)
        if k >= 1 and _epoch_of(int(trace.mark_times[ev.partner]), n) < k:
            d[k] += 1

    out = []
    for k in range(1, last_epoch + 1):
        m_k = cum[k - 1] / n          # marked before epoch k
        m_next = cum[k] / n
        growth = m_next >= (1.0 + theta / 2.0) * m_k
        out.append(EpochStats(k=k, u_k=1.0 - m_k, m_k=m_k, d_k=int(d[k]),
                              m_next=m_next, growth=growth,
                              good=growth or m_k >= 0.5))
    return out


# ---------------------------------------------------------------------------
# Vectorized ensemble (deterministic rules and uniform-iid)
# ---------------------------------------------------------------------------

@dataclass
class MarkingEnsembleResult:
    n: int
    cap: int
    runs: int
    T: np.ndarray                   # -1 when capped
    final_state_to_card: np.ndarray  # (runs, n), frozen at completion
    u: np.ndarray                   # (runs, K) with u[:, k-1] = u_k
    d: np.ndarray                   # (runs, K) with d[:, k-1] = D_k
    epochs: int

    def m(self) -> np.ndarray:
        return 1.0 - self.u


def marking_ensemble(n: int, rule_kind: str, runs: int, seed: int, cap: int,
                     *, chunk: int = CHUNK, workers=None,
                     rule_locations: np.ndarray | None = None
                     ) -> MarkingEnsembleResult:
    """Many marking runs in lockstep.

    Deterministic rules share the location sequence across runs; the
    uniform-iid rule draws one location vector per step from a dedicated
    stream.  Memory-2 and quenched rules need the single-run API.
    """
    if cap < n:
        raise ValueError("cap must be at least n")
    K = cap // (2 * n) + 2
    if rule_locations is not None:
        locs = np.asarray(rule_locations, dtype=np.int64)
    elif rule_kind in ("cyclic", "star", "explicit"):
        locs = make_rule(rule_kind, n).locations(cap)
    elif rule_kind == "uniform-iid":
        locs = None
    else:
        raise ValueError(f"ensemble runner does not support rule {rule_kind!r}")

    res = MarkingEnsembleResult(
        n=n, cap=cap, runs=runs, T=np.full(runs, -1, dtype=np.int64),
        final_state_to_card=np.empty((runs, n), dtype=np.int32),
        u=np.ones((runs, K)), d=np.zeros((runs, K), dtype=np.int64), epochs=K)

    def one_chunk(args):
        ci, (lo, hi) = args
        r_cnt = hi - lo
        rng = stream(seed, "uniform-time", ci)
        rule_rng = stream(seed, "rule", ci) if locs is None else None
        S = np.tile(np.arange(n, dtype=np.int32), (r_cnt, 1))
        marked = np.zeros((r_cnt, n), dtype=bool)
        mark_epoch = np.full((r_cnt, n), UNMARKED, dtype=np.int32)
        count = np.zeros(r_cnt, dtype=np.int64)
        T = np.full(r_cnt, -1, dtype=np.int64)
        final = np.empty((r_cnt, n), dtype=np.int32)
        u = np.ones((r_cnt, K))
        d = np.zeros((r_cnt, K), dtype=np.int64)
        active = np.ones(r_cnt, dtype=bool)
        k_snap = 0
        for t in range(1, cap + 1):
            r_draw = rng.integers(n, size=r_cnt)
            if locs is None:
                l_draw = rule_rng.integers(n, size=r_cnt)
            else:
                l_draw = np.full(r_cnt, locs[t - 1])
            if not active.any():
                break
            ar = np.flatnonzero(active)
            l = l_draw[ar]
            r = r_draw[ar]
            cl = S[ar, l]
            cr = S[ar, r]
            k_now = _epoch_of(t, n)
            if t == 1:
                pred = np.ones(ar.size, dtype=bool)
                partner_pre = np.zeros(ar.size, dtype=bool)
            else:
                unm = ~marked[ar, cl]
                pred = unm & (marked[ar, cr] | (r == l))
                partner_pre = (pred & (r != l)
                               & (mark_epoch[ar, cr] < k_now))
            hit = ar[pred]
            marked[hit, cl[pred]] = True
            mark_epoch[hit, cl[pred]] = 0 if t == 1 else k_now
            count[hit] += 1
            if k_now >= 1:
                d[ar[partner_pre], k_now - 1] += 1
            # transposition (self-swaps are harmless: both writes agree)
            S[ar, l] = cr
            S[ar, r] = cl
            done = ar[count[ar] == n]
            if done.size:
                T[done] = t
                final[done] = S[done]
                active[done] = False
            if (t - 1) % (2 * n) == 0:
                k = (t - 1) // (2 * n) + 1   # u_k snapshot after step 1+2n(k-1)
                if k <= K:
                    u[:, k - 1] = 1.0 - count / n
                    k_snap = k
        final[active] = S[active]
        # epochs whose boundary was never reached (early break / cap):
        # the marked set is frozen, so the current fraction applies
        for k in range(k_snap + 1, K + 1):
            u[:, k - 1] = 1.0 - count / n
        return lo, hi, T, final, u, d

    jobs = list(enumerate(chunk_bounds(runs, chunk)))
    mapper = map if workers is None else workers.map
    for lo, hi, T, final, u, d in mapper(one_chunk, jobs):
        res.T[lo:hi] = T
        res.final_state_to_card[lo:hi] = final
        res.u[lo:hi] = u
        res.d[lo:hi] = d
    return res
