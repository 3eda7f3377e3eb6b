"""The semi-random transposition shuffle and its renewal frame.

Two simulation entry points:

* ``run_shuffle`` evolves the raw frame: at step t the cards at locations
  (L_t, R_t) are exchanged, L_t from a rule, R_t i.i.d. uniform.

* ``run_renewal`` / ``KernelEnsemble`` evolve the renewal frame directly:
  at every step the card at state 0 is transposed with a uniformly chosen
  card and then all cards move one state up (mod n).  In this frame the
  state sequence of every single card is a Markov chain with the renewal
  matrix M of the spectral module, which is what all moment formulas are
  stated against.

The two frames are linked by rotation: sigma_star(i) = sigma(i) + t mod n
(``from_renewal_frame``), under which a renewal-frame trajectory is a raw
trajectory for the descending cyclic rule L_t = (1 - t) mod n.  Converting
a raw *ascending*-cyclic trajectory (L_t = t mod n) with the same rotation
yields the renewal chain up to the fixed relabeling s -> 1 - s mod n of
the state circle; distributional quantities (total variation, mixing
times, uniformity) are unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import stream
from .permutation import Permutation
from .rules import ShuffleRule


@dataclass(frozen=True)
class StepRecord:
    """One transposition: step index (1-based) and the two locations."""
    t: int
    l: int
    r: int


@dataclass
class Trajectory:
    """Result of a simulated run."""
    n: int
    steps: int
    final: Permutation
    records: list[StepRecord] = field(default_factory=list)
    card_traces: dict[int, np.ndarray] = field(default_factory=dict)

    def records_csv_rows(self):
        for rec in self.records:
            yield rec.t, rec.l, rec.r

    def trace_csv_rows(self):
        for card, states in sorted(self.card_traces.items()):
            for t, s in enumerate(states):
                yield t, card, int(s)


def transpose_step(perm: Permutation, l: int, r: int) -> Permutation:
    """Exchange the cards occupying states l and r (no-op when l == r)."""
    return perm.swap_states(l, r)


def run_shuffle(start: Permutation, rule: ShuffleRule, steps: int, seed: int,
                *, record_steps: bool = False,
                trace_cards: tuple[int, ...] = (),
                debug_validate: bool = False) -> Trajectory:
    """Run the raw-frame shuffle for ``steps`` steps.

    R_t draws come from the "shuffle" stream of ``seed``; the rule supplies
    L_t (consuming its own stream for random kinds).  Reproducible given
    (start, rule kind + rule seed, steps, seed).  ``debug_validate``
    re-checks bijectivity after every step.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    n = start.n
    rule.reset()
    rng = stream(seed, "shuffle")
    perm = start.copy()
    traj = Trajectory(n=n, steps=steps, final=perm)
    for card in trace_cards:
        traj.card_traces[card] = np.empty(steps + 1, dtype=np.int64)
        traj.card_traces[card][0] = perm.card_to_state[card]
    for t in range(1, steps + 1):
        l = rule.location(t)
        r = int(rng.integers(n))
        perm = perm.swap_states(l, r)
        if debug_validate:
            perm.check()
        if record_steps:
            traj.records.append(StepRecord(t, l, r))
        for card in trace_cards:
            traj.card_traces[card][t] = perm.card_to_state[card]
    traj.final = perm
    return traj


def renewal_step(perm: Permutation, u: int) -> Permutation:
    """One renewal-frame step: swap the card at state 0 with the card at
    state u, then move all cards one state up."""
    return perm.swap_states(0, u).rotate_states(1)


def run_renewal(n: int, steps: int, seed: int, *, record_steps: bool = False,
                trace_cards: tuple[int, ...] = (),
                start: Permutation | None = None) -> Trajectory:
    """Run the renewal-frame kernel from the identity (or ``start``).

    The uniform-card draw of step t is recorded as the r field of its
    StepRecord (l is always 0 in this frame).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    perm = Permutation.identity(n) if start is None else start.copy()
    rng = stream(seed, "renewal")
    traj = Trajectory(n=n, steps=steps, final=perm)
    for card in trace_cards:
        traj.card_traces[card] = np.empty(steps + 1, dtype=np.int64)
        traj.card_traces[card][0] = perm.card_to_state[card]
    for t in range(1, steps + 1):
        u = int(rng.integers(n))
        perm = renewal_step(perm, u)
        if record_steps:
            traj.records.append(StepRecord(t, 0, u))
        for card in trace_cards:
            traj.card_traces[card][t] = perm.card_to_state[card]
    traj.final = perm
    return traj


def to_renewal_frame(perm_star: Permutation, t: int) -> Permutation:
    """Rotate a raw-frame permutation at time t into the renewal frame:
    sigma(i) = sigma_star(i) - t mod n."""
    return perm_star.rotate_states(-(t % perm_star.n))


def from_renewal_frame(perm: Permutation, t: int) -> Permutation:
    """Inverse rotation: sigma_star(i) = sigma(i) + t mod n."""
    return perm.rotate_states(t % perm.n)


def descending_cyclic_locations(n: int, steps: int) -> np.ndarray:
    """L_t = (1 - t) mod n: the raw rule whose rotation is exactly the
    renewal kernel (see module docstring)."""
    t = np.arange(1, steps + 1)
    return (1 - t) % n


class KernelEnsemble:
    """Vectorized renewal-frame shuffles, one row per replica.

    Internally cards live in fixed slots; slot j holds state (j + t) mod n
    at time t, so the per-step rotation is free and a step costs O(1) per
    replica.  All replicas start from the identity.
    """

    def __init__(self, n: int, replicas: int):
        self.n = n
        self.replicas = replicas
        self.t = 0
        # A[r, j] = card sitting in slot j; state of that card = (j + t) % n
        self.A = np.tile(np.arange(n, dtype=np.int32), (replicas, 1))
        self._rows = np.arange(replicas)

    def step(self, u: np.ndarray) -> None:
        """Advance every replica one step; u[r] is the uniform draw."""
        n, t = self.n, self.t
        j0 = (-t) % n                      # slot currently holding state 0
        ju = (np.asarray(u) - t) % n       # slot holding state u[r]
        rows = self._rows
        c0 = self.A[:, j0].copy()
        cu = self.A[rows, ju]
        self.A[rows, ju] = c0
        self.A[:, j0] = cu
        self.t += 1

    def run(self, rng: np.random.Generator, steps: int) -> None:
        for _ in range(steps):
            self.step(rng.integers(self.n, size=self.replicas))

    def card_states(self) -> np.ndarray:
        """(replicas, n) array: states[r, i] = state of card i."""
        states = np.empty_like(self.A)
        slot_state = (np.arange(self.n) + self.t) % self.n
        np.put_along_axis(states, self.A.astype(np.int64),
                          np.tile(slot_state, (self.replicas, 1)), axis=1)
        return states

    def overlap(self, f: np.ndarray, f_conj: np.ndarray) -> np.ndarray:
        """Per-replica value of (1/n) sum_i f(state of card i) conj(f(i))."""
        f_by_slot = np.roll(f, -(self.t % self.n))
        return (f_by_slot[np.newaxis, :] * f_conj[self.A]).sum(axis=1) / self.n

    def pair_states(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """States of cards i and j in every replica (O(replicas * n))."""
        st = self.card_states()
        return st[:, i].copy(), st[:, j].copy()
