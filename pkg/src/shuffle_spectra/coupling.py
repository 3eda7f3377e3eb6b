"""Coupling of the shuffle with two independent single-card copies.

The pair (sigma_s(i), sigma_s(j)) of tracked-card states is itself a
Markov chain driven by the kernel's uniform draw u.  While the true pair
and the independent pair (eta_s(i), etatilde_s(j)) agree ("glued"), the
joint update is built so that

* sigma's update is exactly one renewal-kernel step (u decides it),
* the independent pair's marginal is exactly a product of two M rows,
* the pair stays glued with conditional probability (n-1)^2/n^2 + 1/n^2
  when one of the cards sits at state 0 (cases 1-2) and 1 - 2/n^2
  otherwise (case 3).

The same scalar outcome map is enumerated exactly by the test suite and
sampled (vectorized) by the ensemble runner, so verification and
simulation share one code path.  Deviation events are encoded in an
auxiliary uniform draw v; every step consumes exactly four draws
(u, v, w1, w2) so replica streams stay aligned across branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rng import CHUNK, chunk_bounds, stream
from .engine import renewal_step
from .permutation import Permutation
from .statistic import TestStatistic, lam_abs_power


# ---------------------------------------------------------------------------
# Scalar transition maps (single source of truth)
# ---------------------------------------------------------------------------

def _pair_step(n: int, a: int, b: int, u: int) -> tuple[int, int]:
    """Exact kernel-marginal update of the state pair of two distinct
    cards, given the uniform draw u."""
    if a == 0:
        return ((u + 1) % n, (b + 1) % n) if u != b else ((b + 1) % n, 1)
    if b == 0:
        return ((a + 1) % n, (u + 1) % n) if u != a else (1, (a + 1) % n)
    if u == b:
        return ((a + 1) % n, 1)
    if u == a:
        return (1, (b + 1) % n)
    return ((a + 1) % n, (b + 1) % n)


def _joint_outcome(n: int, a: int, b: int, u: int, v: int
                   ) -> tuple[tuple[int, int], tuple[int, int]]:
    """Glued-step joint outcome: (sigma pair, independent pair).

    u drives sigma's kernel step; v (uniform on [n]) selects the residual
    branches that unglue the independent pair.
    """
    sig = _pair_step(n, a, b, u)
    if a == 0:                      # case 1: card i at state 0
        if u != b:
            eta = sig if v != 0 else (sig[0], 1)
        else:
            eta = sig if v == 0 else ((b + 1) % n, (b + 1) % n)
    elif b == 0:                    # case 2: card j at state 0
        if u != a:
            eta = sig if v != 0 else (1, sig[1])
        else:
            eta = sig if v == 0 else ((a + 1) % n, (a + 1) % n)
    else:                           # case 3: neither card at state 0
        if u == b:
            eta = sig if v != 0 else ((a + 1) % n, (b + 1) % n)
        elif u == a:
            eta = sig if v != 0 else (1, 1)
        else:
            eta = sig
    return sig, eta


def _m_step(n: int, x: int, w: int) -> int:
    """One M-step of a single tracked card given a uniform draw w."""
    if x == 0:
        return w
    return 1 if w == x else (x + 1) % n


# Exact tables for verification ---------------------------------------------

def sigma_pair_table(n: int, a: int, b: int) -> dict[tuple[int, int], Fraction]:
    """Exact one-step law of the true pair, as {(a', b'): probability}."""
    if a == b:
        raise ValueError("cards must occupy distinct states")
    table: dict[tuple[int, int], Fraction] = {}
    p = Fraction(1, n)
    for u in range(n):
        key = _pair_step(n, a, b, u)
        table[key] = table.get(key, Fraction(0)) + p
    return table


def independent_pair_table(n: int, a: int, b: int) -> dict[tuple[int, int], Fraction]:
    """Product of the two exact M rows for states a and b."""
    def row(x: int) -> dict[int, Fraction]:
        if x == 0:
            return {s: Fraction(1, n) for s in range(n)}
        return {1: Fraction(1, n), (x + 1) % n: Fraction(n - 1, n)}
    table: dict[tuple[int, int], Fraction] = {}
    for sa, pa in row(a).items():
        for sb, pb in row(b).items():
            key = (sa, sb)
            table[key] = table.get(key, Fraction(0)) + pa * pb
    return table


def glued_joint_table(n: int, a: int, b: int
                      ) -> dict[tuple[tuple[int, int], tuple[int, int]], Fraction]:
    """Exact joint law of a glued step over all (u, v) draws.

    Colliding outcome labels are merged by summing probabilities.
    """
    if a == b:
        raise ValueError("cards must occupy distinct states")
    table: dict = {}
    p = Fraction(1, n * n)
    for u in range(n):
        for v in range(n):
            key = _joint_outcome(n, a, b, u, v)
            table[key] = table.get(key, Fraction(0)) + p
    return table


# ---------------------------------------------------------------------------
# Single-run API
# ---------------------------------------------------------------------------

@dataclass
class CoupledState:
    """Joint state: full true shuffle plus the two tracked independent
    copies.  Once glued goes false it stays false."""
    n: int
    i: int
    j: int
    sigma: Permutation
    eta_i: int
    etatilde_j: int
    glued: bool
    s: int

    def check(self) -> None:
        if self.i == self.j:
            raise ValueError("tracked cards must differ")
        pair = (int(self.sigma.card_to_state[self.i]),
                int(self.sigma.card_to_state[self.j]))
        if self.glued and pair != (self.eta_i, self.etatilde_j):
            raise ValueError("glued flag inconsistent with states")


@dataclass(frozen=True)
class PairStats:
    """Trajectory statistics of one coupled run."""
    i: int
    j: int
    t: int
    n_ij: float
    unglue_time: int | None
    product_sample: complex | None = None


def start_coupled(n: int, i: int, j: int) -> CoupledState:
    if i == j:
        raise ValueError("tracked cards must differ")
    perm = Permutation.identity(n)
    return CoupledState(n=n, i=i, j=j, sigma=perm, eta_i=i, etatilde_j=j,
                        glued=True, s=0)


def coupled_step(state: CoupledState, rng: np.random.Generator) -> CoupledState:
    """Advance the coupled system one step (consumes 4 uniform draws)."""
    state.check()
    n = state.n
    u, v, w1, w2 = (int(x) for x in rng.integers(n, size=4))
    a = int(state.sigma.card_to_state[state.i])
    b = int(state.sigma.card_to_state[state.j])
    sigma = renewal_step(state.sigma, u)
    if state.glued:
        sig, eta = _joint_outcome(n, a, b, u, v)
        glued = eta == sig
        eta_i, etatilde_j = eta
    else:
        glued = False
        eta_i = _m_step(n, state.eta_i, w1)
        etatilde_j = _m_step(n, state.etatilde_j, w2)
    return CoupledState(n=n, i=state.i, j=state.j, sigma=sigma,
                        eta_i=eta_i, etatilde_j=etatilde_j,
                        glued=glued, s=state.s + 1)


def run_coupling(n: int, i: int, j: int, t: int, seed: int,
                 stat: TestStatistic | None = None) -> PairStats:
    """Run the coupling for t steps from the identity."""
    if i == j:
        raise ValueError("tracked cards must differ")
    if t < 0:
        raise ValueError("t must be >= 0")
    rng = stream(seed, "couple")
    state = start_coupled(n, i, j)
    n_ij = 0
    unglue: int | None = None
    for _ in range(t):
        a = int(state.sigma.card_to_state[i])
        b = int(state.sigma.card_to_state[j])
        n_ij += (a == 0) + (b == 0)
        was_glued = state.glued
        state = coupled_step(state, rng)
        if was_glued and not state.glued and unglue is None:
            unglue = state.s
    product = None
    if stat is not None:
        a = int(state.sigma.card_to_state[i])
        b = int(state.sigma.card_to_state[j])
        product = complex(stat.f[a] * np.conj(stat.f[b]))
    return PairStats(i=i, j=j, t=t, n_ij=float(n_ij), unglue_time=unglue,
                     product_sample=product)


# ---------------------------------------------------------------------------
# Vectorized ensemble
# ---------------------------------------------------------------------------

def coupled_step_vec(n, a, b, ea, eb, glued, u, v, w1, w2):
    """Vectorized one-step update; mirrors _joint_outcome/_m_step exactly
    (the test suite asserts agreement on full draw grids).

    Returns (a', b', ea', eb', newly_unglued).
    """
    m1 = a == 0
    m2 = b == 0
    # true pair after the kernel step driven by u
    sa = np.where(m1, np.where(u != b, (u + 1) % n, (b + 1) % n),
         np.where(m2, np.where(u != a, (a + 1) % n, 1),
                  np.where(u == a, 1, (a + 1) % n)))
    sb = np.where(m1, np.where(u != b, (b + 1) % n, 1),
         np.where(m2, np.where(u != a, (u + 1) % n, (a + 1) % n),
                  np.where(u == b, 1, (b + 1) % n)))
    # glued branch: residual deviations of the independent pair.  Only the
    # coordinate whose card is not at state 0 can deviate in cases 1-2;
    # in case 3 only the second coordinate's table line differs.
    falses = np.zeros(a.shape, dtype=bool)
    dev_a = np.where(m1, falses,
            np.where(m2, np.where(u != a, v == 0, v != 0), falses))
    dev_b = np.where(m1, np.where(u != b, v == 0, v != 0),
            np.where(m2, falses, ((u == b) | (u == a)) & (v == 0)))
    ga = np.where(dev_a, np.where(u != a, 1, (a + 1) % n), sa)
    gb = np.where(dev_b,
         np.where(m1, np.where(u != b, 1, (b + 1) % n),
                  np.where(u == b, (b + 1) % n, 1)), sb)
    # unglued branch: independent M-steps
    ia = np.where(ea == 0, w1, np.where(w1 == ea, 1, (ea + 1) % n))
    ib = np.where(eb == 0, w2, np.where(w2 == eb, 1, (eb + 1) % n))
    ea2 = np.where(glued, ga, ia)
    eb2 = np.where(glued, gb, ib)
    newly_unglued = glued & ((ea2 != sa) | (eb2 != sb))
    return sa, sb, ea2, eb2, newly_unglued


@dataclass
class CouplingEnsembleResult:
    n: int
    i: int
    j: int
    t: int
    replicas: int
    n_ij: np.ndarray          # empirical indicator sums, per replica
    unglue_time: np.ndarray   # -1 when the pair never unglued
    sigma_pair: np.ndarray    # (replicas, 2) final true pair states
    eta_pair: np.ndarray      # (replicas, 2) final independent pair states

    @property
    def unglued_fraction(self) -> float:
        return float((self.unglue_time >= 0).mean())


def coupling_ensemble(n: int, i: int, j: int, t: int, replicas: int,
                      seed: int, *, chunk: int = CHUNK,
                      workers=None) -> CouplingEnsembleResult:
    """Many independent coupled runs, pair dynamics only (the full sigma
    is not materialized; its pair marginal is the exact pair chain)."""
    if i == j:
        raise ValueError("tracked cards must differ")
    res = CouplingEnsembleResult(
        n=n, i=i, j=j, t=t, replicas=replicas,
        n_ij=np.empty(replicas), unglue_time=np.empty(replicas, dtype=np.int64),
        sigma_pair=np.empty((replicas, 2), dtype=np.int64),
        eta_pair=np.empty((replicas, 2), dtype=np.int64))

    def one_chunk(args):
        ci, (lo, hi) = args
        rng = stream(seed, "couple", ci)
        r = hi - lo
        a = np.full(r, i, dtype=np.int64)
        b = np.full(r, j, dtype=np.int64)
        ea, eb = a.copy(), b.copy()
        glued = np.ones(r, dtype=bool)
        unglue = np.full(r, -1, dtype=np.int64)
        nij = np.zeros(r)
        for s in range(t):
            nij += (a == 0) + (b == 0)
            u, v, w1, w2 = rng.integers(n, size=(4, r))
            a, b, ea, eb, now_unglued = coupled_step_vec(
                n, a, b, ea, eb, glued, u, v, w1, w2)
            unglue[now_unglued] = s + 1
            glued = glued & ~now_unglued
        return lo, hi, a, b, ea, eb, nij, unglue

    jobs = list(enumerate(chunk_bounds(replicas, chunk)))
    mapper = map if workers is None else workers.map
    for lo, hi, a, b, ea, eb, nij, unglue in mapper(one_chunk, jobs):
        res.sigma_pair[lo:hi, 0] = a
        res.sigma_pair[lo:hi, 1] = b
        res.eta_pair[lo:hi, 0] = ea
        res.eta_pair[lo:hi, 1] = eb
        res.n_ij[lo:hi] = nij
        res.unglue_time[lo:hi] = unglue
    return res


@dataclass(frozen=True)
class PairCorrelationReport:
    """Monte Carlo check of the pair-correlation bound
    |E f(sigma_t(i)) conj(f(sigma_t(j)))| <=
        (|lam|^{2t} + (4t + 4 n N_ij)/n^2) ||f||_inf^2."""
    n: int
    i: int
    j: int
    t: int
    replicas: int
    empirical_abs_mean: float
    std_error: float
    n_ij_mean: float
    bound: float
    holds: bool
    control_abs_mean: float        # |mean f(eta_t(i))| * |mean f(etatilde_t(j))|
    control_predicted: float       # |lam|^{2t} |f(i) f(j)|


def pair_correlation_check(n: int, i: int, j: int, t: int, replicas: int,
                           seed: int, stat: TestStatistic,
                           workers=None) -> PairCorrelationReport:
    if replicas < 10_000:
        raise ValueError("needs replicas >= 10^4")
    ens = coupling_ensemble(n, i, j, t, replicas, seed, workers=workers)
    f = stat.f
    prod = f[ens.sigma_pair[:, 0]] * np.conj(f[ens.sigma_pair[:, 1]])
    mean = complex(prod.mean())
    se = math.sqrt(float(np.abs(prod - mean).__pow__(2).mean()) / replicas)
    nbar = float(ens.n_ij.mean())
    bound = ((lam_abs_power(stat, 2 * t) + (4.0 * t + 4.0 * n * nbar) / n ** 2)
             * stat.norm_inf ** 2)
    ctrl = abs(complex(f[ens.eta_pair[:, 0]].mean())) * \
        abs(complex(np.conj(f[ens.eta_pair[:, 1]]).mean()))
    return PairCorrelationReport(
        n=n, i=i, j=j, t=t, replicas=replicas,
        empirical_abs_mean=abs(mean), std_error=se, n_ij_mean=nbar,
        bound=bound, holds=abs(mean) <= bound + 4.0 * se,
        control_abs_mean=ctrl,
        control_predicted=lam_abs_power(stat, 2 * t) * abs(f[i] * f[j]),
    )
