"""Graded generators, canonical symmetric words, Koszul signs, shuffles.

A :class:`Word` is a canonical representative of an element ``v_1 ⊙ ... ⊙ v_k``
of the (reduced) symmetric tensor algebra on a graded, action-weighted basis:
letters are kept sorted by the fixed total order (action, name), and the sign
produced while sorting is handed back by :func:`normalize_word` rather than
stored.  A word with a repeated odd-degree letter is zero.

Letters are usually :class:`Generator` instances, but any object exposing
``degree``, ``action`` and ``sort_key`` works; in particular a ``Word`` can
itself be a letter, which is how bar-complex words over a graded-commutative
algebra are represented (words of monomials).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .novikov import fmt_rational


class Generator:
    """A graded basis symbol with an action weight."""

    __slots__ = ("name", "degree", "action")

    def __init__(self, name: str, degree: int, action):
        action = Fraction(action)
        if action < 0:
            raise ValueError(f"generator {name}: action must be >= 0")
        self.name = name
        self.degree = int(degree)
        self.action = action

    @property
    def sort_key(self):
        return (self.action, self.name)

    def __eq__(self, other):
        return (
            isinstance(other, Generator)
            and self.name == other.name
            and self.degree == other.degree
            and self.action == other.action
        )

    def __hash__(self):
        return hash((self.name, self.degree, self.action))

    def __repr__(self):
        return f"Generator({self.name!r}, {self.degree}, {fmt_rational(self.action)})"


class Word:
    """Canonical sorted word; also usable as a letter of an outer word."""

    __slots__ = ("letters", "_hash")

    def __init__(self, letters: Sequence):
        self.letters = tuple(letters)
        self._hash = hash(self.letters)

    @property
    def degree(self) -> int:
        return sum(l.degree for l in self.letters)

    @property
    def action(self) -> Fraction:
        return sum((l.action for l in self.letters), Fraction(0))

    @property
    def sort_key(self):
        return (self.action, tuple(l.sort_key for l in self.letters))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __eq__(self, other):
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Word({self.letters!r})"


def koszul_sign(degrees: Sequence[int], sigma: Sequence[int]) -> int:
    """Sign (-1)^{sum |v_i||v_j| over i<j with sigma(i)>sigma(j)}.

    ``sigma`` is a permutation of ``range(len(degrees))`` given as the tuple
    of images (0-based).
    """
    if len(degrees) != len(sigma):
        raise ValueError("degrees and permutation must have equal length")
    if sorted(sigma) != list(range(len(sigma))):
        raise ValueError(f"not a permutation: {sigma!r}")
    par = 0
    for i in range(len(sigma)):
        for j in range(i + 1, len(sigma)):
            if sigma[i] > sigma[j]:
                par += degrees[i] * degrees[j]
    return -1 if par % 2 else 1


def reorder_sign(degrees: Sequence[int], order: Sequence[int]) -> int:
    """Koszul sign of rearranging letters into the given output order.

    ``order`` lists original indices in their output sequence; the sign is
    the parity of the odd-odd inversions crossed.  Equivalent to
    ``koszul_sign(degrees, inverse(order))``.
    """
    par = 0
    for p in range(len(order)):
        for q in range(p + 1, len(order)):
            if order[p] > order[q]:
                par += degrees[order[p]] * degrees[order[q]]
    return -1 if par % 2 else 1


def crossing_sign(degrees: Sequence[int], chosen: Iterable[int]) -> int:
    """Sign of pulling the chosen positions to the front, order preserved."""
    chosen_set = set(chosen)
    par = 0
    for b in chosen_set:
        for a in range(b):
            if a not in chosen_set:
                par += degrees[a] * degrees[b]
    return -1 if par % 2 else 1


def normalize_word(letters: Sequence) -> tuple[int, Optional[Word]]:
    """Sort letters into canonical order, returning (sign, word).

    Returns ``(0, None)`` when an odd-degree letter repeats (the word is
    zero in the symmetric algebra).
    """
    if not letters:
        raise ValueError("normalize_word: empty letter list")
    indexed = sorted(range(len(letters)), key=lambda i: letters[i].sort_key)
    degrees = [l.degree for l in letters]
    sign = reorder_sign(degrees, indexed)
    out = [letters[i] for i in indexed]
    for a, b in zip(out, out[1:]):
        if a == b and a.degree % 2:
            return 0, None
    return sign, Word(out)


def shuffles(i: int, j: int) -> list[tuple[int, ...]]:
    """All (i,j)-shuffles of i+j elements, as 0-based image tuples.

    A shuffle is a permutation increasing on the first ``i`` slots and on the
    last ``j`` slots; there are binomial(i+j, i) of them.
    """
    if i < 0 or j < 0 or i + j < 1:
        raise ValueError("shuffles: need i,j >= 0 with i+j >= 1")
    n = i + j
    out = []
    for first in combinations(range(n), i):
        rest = [v for v in range(n) if v not in first]
        out.append(tuple(first) + tuple(rest))
    return out


def coproduct(w: Word) -> list[tuple[Word, Word, int]]:
    """All shuffle splittings of ``w`` into (left, right) with Koszul signs.

    Words of length 1 have empty reduced coproduct.  Splittings are indexed
    by proper nonempty position subsets, so duplicate letters contribute
    repeated (left, right) pairs rather than coefficients.
    """
    k = len(w)
    out: list[tuple[Word, Word, int]] = []
    if k < 2:
        return out
    degrees = [l.degree for l in w.letters]
    positions = range(k)
    for i in range(1, k):
        for left_pos in combinations(positions, i):
            sign = crossing_sign(degrees, left_pos)
            left = Word([w.letters[p] for p in left_pos])
            right = Word([w.letters[p] for p in positions if p not in left_pos])
            out.append((left, right, sign))
    return out


def word_multiplicity_factor(w: Word) -> int:
    """The factor i_1! ... i_m! of repeated-letter multiplicities."""
    fact = 1
    run = 1
    for a, b in zip(w.letters, w.letters[1:]):
        run = run + 1 if a == b else 1
        fact *= run if run > 1 else 1
    # the product above multiplies 2,3,...,i for each run, i.e. i!
    return fact
