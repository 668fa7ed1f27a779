"""Words over free products of the real line (group mode) or half line (monoid mode).

A word is a finite sequence of letters ``(index, value)``.  Values of letters
with equal adjacent indices combine additively; zero-valued letters drop out.
The unique minimal form of a word has no zero letters and no two adjacent
equal indices; the rewriting to minimal form is deterministic (drop the
leftmost zero first, else merge the leftmost adjacent equal pair) and every
rewriting route reaches the same minimal word, which is what makes the
evaluation of a word into a family of semigroups representation-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import eye, expm, op_norm

GROUP = "group"
MONOID = "monoid"

# Values at or below this are treated as the neutral element after merges.
# Exact cancellations (x + (-x)) hit 0.0; the dust threshold only matters for
# values produced by scaled merges.
ZERO_EPS = 1e-15


class Letter(NamedTuple):
    index: int
    value: float


@dataclass(frozen=True)
class Word:
    letters: tuple[Letter, ...]
    mode: str = MONOID

    def __post_init__(self):
        if self.mode not in (GROUP, MONOID):
            raise ValueError(f"unknown mode {self.mode!r}")
        letters = tuple(Letter(int(i), float(x)) for i, x in self.letters)
        object.__setattr__(self, "letters", letters)
        if self.mode == MONOID and any(x < 0 for _, x in letters):
            raise ValueError("monoid words cannot carry negative values")

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.letters)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(x for _, x in self.letters)


def word(pairs, mode: str = MONOID) -> Word:
    return Word(tuple(Letter(i, x) for i, x in pairs), mode=mode)


def is_bubble_swap_free(indices) -> bool:
    """True when no two adjacent entries are equal (vacuously for <= 1 entry)."""
    seq = list(indices)
    return all(a != b for a, b in zip(seq, seq[1:]))


def is_minimal(w: Word) -> bool:
    return is_bubble_swap_free(w.indices) and all(abs(x) > ZERO_EPS for x in w.values)


def _is_zero(x: float) -> bool:
    return x == 0.0 or abs(x) <= ZERO_EPS


def reduce(w: Word):
    """Rewrite ``w`` to its minimal form.

    Returns ``(minimal_word, trace)`` where the trace lists every
    intermediate ``(N, indices, values)`` snapshot starting from the input;
    each rewriting step removes exactly one letter, so the length sequence
    decreases strictly until the minimal form is reached.
    """
    letters = list(w.letters)
    trace = [(len(letters), tuple(i for i, _ in letters), tuple(x for _, x in letters))]
    while True:
        drop = next((k for k, (_, x) in enumerate(letters) if _is_zero(x)), None)
        if drop is not None:
            del letters[drop]
        else:
            merge = next(
                (
                    k
                    for k in range(len(letters) - 1)
                    if letters[k].index == letters[k + 1].index
                ),
                None,
            )
            if merge is None:
                break
            i = letters[merge].index
            combined = letters[merge].value + letters[merge + 1].value
            letters[merge : merge + 2] = [Letter(i, combined)]
        trace.append(
            (len(letters), tuple(i for i, _ in letters), tuple(x for _, x in letters))
        )
    return Word(tuple(letters), mode=w.mode), trace


def multiply(x: Word, y: Word) -> Word:
    """Product in the free structure: concatenate, then cancel at the junction."""
    if x.mode != y.mode:
        raise ValueError("cannot multiply words of different modes")
    return reduce(Word(x.letters + y.letters, mode=x.mode))[0]


def inverse(w: Word) -> Word:
    """Group inverse: reversed letters with negated values."""
    if w.mode != GROUP:
        raise ValueError("only group-mode words have inverses")
    return Word(tuple(Letter(i, -x) for i, x in reversed(w.letters)), mode=GROUP)


def _split_value(x: float, rng) -> tuple[float, float]:
    """Split ``x`` into two same-signed floats whose IEEE sum is exactly ``x``.

    The significand is split at a random integer cut, so both parts and every
    partial re-combination are exactly representable.
    """
    if x == 0.0:
        return 0.0, 0.0
    sign = 1.0 if x > 0 else -1.0
    m, e = math.frexp(abs(x))
    K = int(m * (1 << 53))
    K1 = int(rng.integers(0, K + 1))
    return sign * math.ldexp(K1, e - 53), sign * math.ldexp(K - K1, e - 53)


def expand(w: Word, seed: int, steps: int) -> Word:
    """Inverse rewriting: randomly split letters and insert zero letters.

    The result represents the same element: ``reduce(expand(w)) == reduce(w)``
    with index-exact agreement (values agree to the last few ulps).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = np.random.default_rng(seed)
    letters = list(w.letters)
    alphabet = sorted(set(w.indices)) or [0]
    for _ in range(steps):
        if letters and rng.random() < 0.7:
            k = int(rng.integers(0, len(letters)))
            i, x = letters[k]
            a, b = _split_value(x, rng)
            letters[k : k + 1] = [Letter(i, a), Letter(i, b)]
        else:
            k = int(rng.integers(0, len(letters) + 1))
            i = int(alphabet[int(rng.integers(0, len(alphabet)))])
            letters.insert(k, Letter(i, 0.0))
    return Word(tuple(letters), mode=w.mode)


def evaluate(w: Word, family) -> np.ndarray:
    """Evaluate the word into a family of semigroups: ``prod_k T_{i_k}(x_k)``.

    Monoid mode runs forward evaluations only; group mode permits negative
    values but then each referenced family member must generate a unitary
    group (skew generator), since contractive evolutions cannot be reversed.
    """
    family = list(family)
    if not family:
        raise ValueError("family must be non-empty")
    dim = family[0].dim
    out = eye(dim)
    for i, x in w.letters:
        if i not in range(len(family)):
            raise IndexError(f"letter index {i} has no family member")
        T = family[i]
        if x < 0 and not T.is_unitary_group():
            raise ValueError(
                f"negative value {x} against a non-unitary family member {i}"
            )
        out = out @ (eye(dim) if x == 0.0 else expm(T.generator, x))
    return out


def verify_algebraic_dilation(family, word_list, M: int) -> float:
    """Max word residual of the dilated evaluation against the direct one.

    Every monoid word is evaluated both directly (``evaluate``) and through
    the continuous dilations of the family members, letter by letter; the
    residual of each pair is the word-level dilation residual.
    """
    from .dilation import compress, continuous_dilation, embedding_r1

    family = list(family)
    word_list = list(word_list)
    if any(w.mode != MONOID for w in word_list):
        raise ValueError("algebraic dilation checks run on monoid words")
    n = family[0].dim
    used = sorted({i for w in word_list for i in w.indices})
    if any(i not in range(len(family)) for i in used):
        raise IndexError("word letter index outside the family")
    dils = {i: continuous_dilation(family[i], M) for i in used}
    r1 = embedding_r1(n, M)
    worst = 0.0
    for w in word_list:
        direct = evaluate(w, family)
        big = eye(2 * n * M)
        for i, x in w.letters:
            big = big @ dils[i].evolve(x)
        worst = max(worst, op_norm(direct - compress(big, r1)))
    return worst


def parse_word(text: str, mode: str = MONOID) -> Word:
    """Parse the ``i:x`` token syntax, e.g. ``"1:0.5 2:0.3 1:0.2"``."""
    pairs = []
    for token in text.split():
        try:
            idx, val = token.split(":")
            pairs.append((int(idx), float(val)))
        except ValueError as exc:
            raise ValueError(f"malformed word token {token!r}") from exc
    return word(pairs, mode=mode)
