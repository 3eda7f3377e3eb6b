"""Permutations in the card -> state convention.

``card_to_state[i]`` is the state (seat on the circle) currently occupied
by card ``i``.  All statistics in the package are functions of card
positions, so this is the primary representation; the state -> card view
is materialized lazily when needed.
"""

from __future__ import annotations

import numpy as np


class Permutation:
    """A bijection on {0, ..., n-1} stored as a card_to_state array."""

    __slots__ = ("n", "card_to_state", "_state_to_card")

    def __init__(self, card_to_state, *, validate: bool = True):
        arr = np.array(card_to_state, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("card_to_state must be a nonempty 1-d array")
        self.n = int(arr.size)
        self.card_to_state = arr
        self._state_to_card: np.ndarray | None = None
        if validate:
            self.check()

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        if n < 1:
            raise ValueError("deck size must be >= 1")
        return cls(np.arange(n), validate=False)

    def check(self) -> None:
        """Raise ValueError unless card_to_state is a bijection on [n]."""
        seen = np.zeros(self.n, dtype=bool)
        if self.card_to_state.min() < 0 or self.card_to_state.max() >= self.n:
            raise ValueError("states out of range")
        seen[self.card_to_state] = True
        if not seen.all():
            raise ValueError("card_to_state is not a bijection")

    @property
    def state_to_card(self) -> np.ndarray:
        if self._state_to_card is None:
            inv = np.empty(self.n, dtype=np.int64)
            inv[self.card_to_state] = np.arange(self.n)
            self._state_to_card = inv
        return self._state_to_card

    def copy(self) -> "Permutation":
        return Permutation(self.card_to_state.copy(), validate=False)

    def swap_states(self, l: int, r: int) -> "Permutation":
        """Exchange the cards occupying states ``l`` and ``r`` (new object)."""
        if not (0 <= l < self.n and 0 <= r < self.n):
            raise ValueError(f"locations ({l}, {r}) out of range for n={self.n}")
        out = self.card_to_state.copy()
        if l != r:
            a = self.state_to_card[l]
            b = self.state_to_card[r]
            out[a] = r
            out[b] = l
        return Permutation(out, validate=False)

    def rotate_states(self, shift: int) -> "Permutation":
        """Move every card ``shift`` states up (mod n), as a new object."""
        return Permutation((self.card_to_state + shift) % self.n, validate=False)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.card_to_state)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Permutation)
                and self.n == other.n
                and bool(np.array_equal(self.card_to_state, other.card_to_state)))

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def __repr__(self) -> str:
        return f"Permutation({self.card_to_state.tolist()})"
