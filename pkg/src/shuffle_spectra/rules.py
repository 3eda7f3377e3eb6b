"""Location rules for semi-random transposition shuffles.

A rule produces the deterministic-or-random location sequence L_1, L_2, ...
that is transposed with a fresh uniform location at every step.  Random
rules own a named Philox stream derived from their seed, so the sequence
is reproducible given (kind, n, seed).  Stateful random kinds must be
queried in order t = 1, 2, ...; deterministic kinds are random access.
"""

from __future__ import annotations

import numpy as np

from ._rng import stream


class RuleOrderError(RuntimeError):
    """A stateful rule was queried out of order."""


class ShuffleRule:
    """Base class; subclasses implement ``_location(t)``."""

    kind = "abstract"
    stateful = False

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("deck size must be >= 1")
        self.n = n
        self._next_t = 1

    def location(self, t: int) -> int:
        if t < 1:
            raise ValueError("step index is 1-based")
        if self.stateful and t != self._next_t:
            raise RuleOrderError(
                f"{self.kind} rule queried at t={t}, expected t={self._next_t}")
        loc = self._location(t)
        self._next_t = t + 1
        return loc

    def _location(self, t: int) -> int:
        raise NotImplementedError

    def reset(self) -> None:
        """Rewind to t=1; random kinds replay the identical sequence."""
        self._next_t = 1

    def locations(self, steps: int) -> np.ndarray:
        """The sequence L_1..L_steps (resets the rule first)."""
        self.reset()
        return np.array([self.location(t) for t in range(1, steps + 1)],
                        dtype=np.int64)


class CyclicRule(ShuffleRule):
    """L_t = t mod n, the cyclic-to-random shuffle."""

    kind = "cyclic"

    def _location(self, t: int) -> int:
        return t % self.n


class StarRule(ShuffleRule):
    """L_t = 0 for all t, star transpositions."""

    kind = "star"

    def _location(self, t: int) -> int:
        return 0


class ExplicitSequenceRule(ShuffleRule):
    """Replay a fixed location sequence (quenched runs, tests)."""

    kind = "explicit"

    def __init__(self, locations):
        seq = np.asarray(locations, dtype=np.int64)
        super().__init__(int(seq.max()) + 1 if seq.size else 1)
        self.seq = seq

    def with_n(self, n: int) -> "ExplicitSequenceRule":
        if self.seq.size and (self.seq.min() < 0 or self.seq.max() >= n):
            raise ValueError("explicit locations out of range for n")
        self.n = n
        return self

    def _location(self, t: int) -> int:
        if t > self.seq.size:
            raise ValueError(f"explicit sequence exhausted at t={t}")
        return int(self.seq[t - 1])


class UniformIIDRule(ShuffleRule):
    """L_t i.i.d. uniform on [n]: the random transposition shuffle."""

    kind = "uniform-iid"
    stateful = True

    def __init__(self, n: int, seed: int):
        super().__init__(n)
        self.seed = int(seed)
        self._rng = stream(self.seed, "rule")

    def _location(self, t: int) -> int:
        return int(self._rng.integers(self.n))

    def reset(self) -> None:
        super().reset()
        self._rng = stream(self.seed, "rule")


class QuenchedEpochPermutationRule(ShuffleRule):
    """Each block L_{kn+1}..L_{(k+1)n} is a uniform permutation of [n].

    Epoch permutations are drawn fresh per epoch from per-epoch streams and
    stored, so a quenched sequence can be replayed deterministically or
    exported as an ExplicitSequenceRule.
    """

    kind = "quenched-epoch"

    def __init__(self, n: int, seed: int):
        super().__init__(n)
        self.seed = int(seed)
        self.epochs: dict[int, np.ndarray] = {}

    def epoch_permutation(self, k: int) -> np.ndarray:
        if k not in self.epochs:
            self.epochs[k] = stream(self.seed, "rule", k).permutation(self.n)
        return self.epochs[k]

    def _location(self, t: int) -> int:
        k, r = divmod(t - 1, self.n)
        return int(self.epoch_permutation(k)[r])

    def materialize(self, steps: int) -> ExplicitSequenceRule:
        seq = [self._location(t) for t in range(1, steps + 1)]
        return ExplicitSequenceRule(seq).with_n(self.n)


class PakMemoryTwoRule(ShuffleRule):
    """Memory-2 chain: L_1=0, L_2=1, then L_{t+1} = 2L_t - L_{t-1} mod n
    with probability 1 - 1/n, else L_{t+1} = L_{t-1}."""

    kind = "pak-memory-2"
    stateful = True

    def __init__(self, n: int, seed: int):
        super().__init__(n)
        self.seed = int(seed)
        self._rng = stream(self.seed, "rule")
        self._prev2: tuple[int, int] = (-1, -1)  # (L_{t-1}, L_t)

    def _location(self, t: int) -> int:
        if t == 1:
            loc = 0
        elif t == 2:
            loc = 1 % self.n
        else:
            back, last = self._prev2
            if self._rng.random() < 1.0 - 1.0 / self.n:
                loc = (2 * last - back) % self.n
            else:
                loc = back
        self._prev2 = (self._prev2[1], loc)
        return loc

    def reset(self) -> None:
        super().reset()
        self._rng = stream(self.seed, "rule")
        self._prev2 = (-1, -1)


_KINDS = {
    "cyclic": CyclicRule,
    "star": StarRule,
    "uniform-iid": UniformIIDRule,
    "quenched-epoch": QuenchedEpochPermutationRule,
    "pak-memory-2": PakMemoryTwoRule,
}

RANDOM_KINDS = ("uniform-iid", "quenched-epoch", "pak-memory-2")
DETERMINISTIC_KINDS = ("cyclic", "star", "explicit")


def make_rule(kind: str, n: int, *, seed: int | None = None,
              locations=None) -> ShuffleRule:
    """Construct a rule by kind name."""
    if kind == "explicit":
        if locations is None:
            raise ValueError("explicit rule needs locations")
        return ExplicitSequenceRule(locations).with_n(n)
    if kind not in _KINDS:
        raise ValueError(f"unknown rule kind {kind!r}; valid: "
                         f"{sorted([*_KINDS, 'explicit'])}")
    if kind in RANDOM_KINDS:
        if seed is None:
            raise ValueError(f"rule kind {kind!r} needs a seed")
        return _KINDS[kind](n, seed)
    return _KINDS[kind](n)


def rule_location(rule: ShuffleRule, t: int) -> int:
    """The location L_t emitted by ``rule`` (module-level alias)."""
    return rule.location(t)
