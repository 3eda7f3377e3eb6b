"""Exact distributional evolution over S_n for small n.

Distributions are dense length-n! vectors indexed by the lexicographic
rank of the card_to_state array.  One shuffle step is the uniform mixture
over r of the transposition at locations (l, r); it is applied by
scatter-add through precomputed destination index tables, never by
materializing an n! x n! matrix.  The renewal-frame kernel (swap the card
at state 0 with a uniform card, then rotate) gets the same treatment, so
single-card marginals can be checked against powers of the renewal
matrix M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .permutation import Permutation
from .rules import ShuffleRule

MAX_N = 8


# ---------------------------------------------------------------------------
# Ranking
# ---------------------------------------------------------------------------

def perm_rank(perm) -> int:
    """Lexicographic rank of a permutation's card_to_state array."""
    arr = perm.card_to_state if isinstance(perm, Permutation) else np.asarray(perm)
    n = len(arr)
    rank = 0
    for i in range(n):
        smaller = sum(1 for j in range(i + 1, n) if arr[j] < arr[i])
        rank += smaller * math.factorial(n - 1 - i)
    return rank


def perm_unrank(n: int, rank: int) -> Permutation:
    """Inverse of perm_rank."""
    if not 0 <= rank < math.factorial(n):
        raise ValueError(f"rank {rank} out of range for n={n}")
    avail = list(range(n))
    out = []
    r = rank
    for i in range(n):
        f = math.factorial(n - 1 - i)
        idx, r = divmod(r, f)
        out.append(avail.pop(idx))
    return Permutation(out, validate=False)


@lru_cache(maxsize=None)
def _all_perms(n: int) -> np.ndarray:
    """(n!, n) int8 array of card_to_state rows in lexicographic order."""
    if n > MAX_N:
        raise ValueError(f"exact machinery capped at n={MAX_N}")
    from itertools import permutations
    return np.array(list(permutations(range(n))), dtype=np.int8)


def _keys(rows: np.ndarray, n: int) -> np.ndarray:
    """Base-n encoding, most significant digit first, so key order is
    lexicographic order."""
    weights = n ** np.arange(len(rows[0]) - 1, -1, -1, dtype=np.int64)
    return rows.astype(np.int64) @ weights


def _rank_rows(rows: np.ndarray, n: int) -> np.ndarray:
    """Vectorized lexicographic rank of many card_to_state rows."""
    sorted_keys = _keys(_all_perms(n), n)    # strictly increasing
    return np.searchsorted(sorted_keys, _keys(rows, n))


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass
class ExactDistribution:
    """Dense probability vector over S_n (n <= 8)."""
    n: int
    probs: np.ndarray

    def check(self, tol: float = 1e-12) -> None:
        if self.probs.size != math.factorial(self.n):
            raise ValueError("wrong length")
        if self.probs.min() < -tol or abs(self.probs.sum() - 1.0) > tol:
            raise ValueError("not a probability vector")

    @classmethod
    def point_mass(cls, perm: Permutation) -> "ExactDistribution":
        probs = np.zeros(math.factorial(perm.n))
        probs[perm_rank(perm)] = 1.0
        return cls(n=perm.n, probs=probs)

    @classmethod
    def uniform(cls, n: int) -> "ExactDistribution":
        size = math.factorial(n)
        return cls(n=n, probs=np.full(size, 1.0 / size))


@lru_cache(maxsize=None)
def _transposition_table(n: int, l: int, r: int) -> np.ndarray:
    """dest[k] = rank of (transposition at states (l, r) applied to the
    rank-k permutation)."""
    perms = _all_perms(n)
    out = perms.copy()
    if l != r:
        mask_l = perms == l
        mask_r = perms == r
        out[mask_l] = r
        out[mask_r] = l
    return _rank_rows(out, n)


@lru_cache(maxsize=None)
def _kernel_table(n: int, u: int) -> np.ndarray:
    """dest[k] = rank of (renewal kernel step with draw u applied to the
    rank-k permutation): swap cards at states (0, u), then rotate +1."""
    perms = _all_perms(n)
    out = perms.copy()
    if u != 0:
        mask_0 = perms == 0
        mask_u = perms == u
        out[mask_0] = u
        out[mask_u] = 0
    out = (out + 1) % n
    return _rank_rows(out, n)


def step_kernel(mu: ExactDistribution, l: int) -> ExactDistribution:
    """Exact pushforward of one shuffle step at rule location l."""
    n = mu.n
    if not 0 <= l < n:
        raise ValueError(f"location {l} out of range for n={n}")
    size = mu.probs.size
    out = np.zeros(size)
    for r in range(n):
        dest = _transposition_table(n, l, r)
        out += np.bincount(dest, weights=mu.probs, minlength=size)
    return ExactDistribution(n=n, probs=out / n)


def step_kernel_annealed(mu: ExactDistribution) -> ExactDistribution:
    """Annealed uniform-iid step: average of step_kernel over l."""
    out = np.zeros_like(mu.probs)
    for l in range(mu.n):
        out += step_kernel(mu, l).probs
    return ExactDistribution(n=mu.n, probs=out / mu.n)


def renewal_kernel_step(mu: ExactDistribution) -> ExactDistribution:
    """Exact pushforward of one renewal-frame kernel step."""
    n = mu.n
    size = mu.probs.size
    out = np.zeros(size)
    for u in range(n):
        dest = _kernel_table(n, u)
        out += np.bincount(dest, weights=mu.probs, minlength=size)
    return ExactDistribution(n=n, probs=out / n)


def tv_to_uniform(mu: ExactDistribution) -> float:
    """(1/2) sum |mu(sigma) - 1/n!|."""
    return float(0.5 * np.abs(mu.probs - 1.0 / mu.probs.size).sum())


def single_card_marginal(mu: ExactDistribution, card: int) -> np.ndarray:
    """Law of one card's state under mu, as a length-n vector."""
    states = _all_perms(mu.n)[:, card].astype(np.int64)
    return np.bincount(states, weights=mu.probs, minlength=mu.n)


# ---------------------------------------------------------------------------
# Mixing time
# ---------------------------------------------------------------------------

@dataclass
class MixingResult:
    tau_mix: int | None
    threshold: float
    tv_curve: list[tuple[int, float]] = field(default_factory=list)


DEFAULT_THRESHOLD = 1.0 / (2.0 * math.e)


def exact_mixing_time(n: int, rule: ShuffleRule, threshold: float =
                      DEFAULT_THRESHOLD, horizon: int | None = None,
                      start: Permutation | None = None) -> MixingResult:
    """Exact TV curve from a point mass and its first threshold crossing.

    The chain is time-inhomogeneous so the curve need not be monotone;
    the result is the first-crossing time plus the whole curve.  Only
    deterministic rules are meaningful here (the curve is per-realization
    of the rule otherwise).
    """
    if n > MAX_N:
        raise ValueError(f"exact evolution capped at n={MAX_N}")
    if rule.kind not in ("cyclic", "star", "explicit"):
        raise ValueError("exact_mixing_time needs a deterministic rule")
    if horizon is None:
        horizon = max(1, math.ceil(4 * n * math.log(n)))
    rule.reset()
    mu = ExactDistribution.point_mass(start or Permutation.identity(n))
    curve = [(0, tv_to_uniform(mu))]
    tau = None
    for t in range(1, horizon + 1):
        mu = step_kernel(mu, rule.location(t))
        tv = tv_to_uniform(mu)
        curve.append((t, tv))
        if tau is None and tv <= threshold:
            tau = t
    return MixingResult(tau_mix=tau, threshold=threshold, tv_curve=curve)


def renewal_tv_curve(n: int, horizon: int) -> list[tuple[int, float]]:
    """Exact TV-to-uniform curve of the renewal-frame kernel chain."""
    if n > MAX_N:
        raise ValueError(f"exact evolution capped at n={MAX_N}")
    mu = ExactDistribution.point_mass(Permutation.identity(n))
    curve = [(0, tv_to_uniform(mu))]
    for t in range(1, horizon + 1):
        mu = renewal_kernel_step(mu)
        curve.append((t, tv_to_uniform(mu)))
    return curve
