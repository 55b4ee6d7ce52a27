"""Reduced words in the free group F_d.

A word is stored as a tuple of nonzero signed integers: ``+i`` is the
generator ``a_i`` and ``-i`` its inverse (generators are numbered from 1).
For d = 2 the generators are called ``a`` and ``b``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Iterator, Sequence

# 'e' is reserved for the identity in the text form, so it is skipped.
_ALPHABET = "abcdfghijklmnopqrstuvwxyz"


class WordError(ValueError):
    pass


class Word(tuple):
    """An immutable freely reduced word.

    ``Word((1, 2, -1))`` is ``a b a^{-1}``.  The constructor rejects
    unreduced input; use :func:`reduce_letters` or :meth:`__mul__` to
    build words from arbitrary letter sequences.
    """

    __slots__ = ()

    def __new__(cls, letters: Iterable[int] = ()) -> "Word":
        letters = tuple(int(l) for l in letters)
        for i, l in enumerate(letters):
            if l == 0:
                raise WordError("letter 0 is not a generator")
            if i and letters[i - 1] == -l:
                raise WordError(f"word {letters} is not freely reduced")
        return super().__new__(cls, letters)

    @classmethod
    def _trusted(cls, letters: tuple) -> "Word":
        return super().__new__(cls, letters)

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __pow__(self, n: int) -> "Word":
        return power(self, n)

    def __invert__(self) -> "Word":
        return invert(self)

    def __repr__(self) -> str:
        return f"Word({to_text(self)!r})"

    def __str__(self) -> str:
        return to_text(self)

    # tuple's own + and * would silently produce unreduced tuples
    def __add__(self, other):
        return NotImplemented

    def __rmul__(self, other):
        return NotImplemented

    @property
    def length(self) -> int:
        return len(self)

    def max_generator(self) -> int:
        return max((abs(l) for l in self), default=0)


IDENTITY = Word()
a = Word((1,))
b = Word((2,))
A = Word((-1,))
B = Word((-2,))


def gen(i: int, d: int | None = None) -> Word:
    """The generator ``a_i`` (negative ``i`` gives the inverse)."""
    if i == 0 or (d is not None and abs(i) > d):
        raise WordError(f"generator index {i} out of range for d={d}")
    return Word._trusted((i,))


def generators(d: int, inverses: bool = True) -> list[Word]:
    """Generators in letter order a < a^-1 < b < b^-1 < ..."""
    out = []
    for i in range(1, d + 1):
        out.append(gen(i))
        if inverses:
            out.append(gen(-i))
    return out


def reduce_letters(letters: Iterable[int]) -> Word:
    """Free reduction of an arbitrary letter sequence (stack based)."""
    stack: list[int] = []
    for l in letters:
        if l == 0:
            raise WordError("letter 0 is not a generator")
        if stack and stack[-1] == -l:
            stack.pop()
        else:
            stack.append(l)
    return Word._trusted(tuple(stack))


def multiply(x: Sequence[int], y: Sequence[int]) -> Word:
    # only the junction can cancel when both factors are reduced
    i = 0
    n, m = len(x), len(y)
    while i < n and i < m and x[n - 1 - i] == -y[i]:
        i += 1
    return Word._trusted(tuple(x[: n - i]) + tuple(y[i:]))


def invert(x: Sequence[int]) -> Word:
    return Word._trusted(tuple(-l for l in reversed(x)))


def power(x: Word, n: int) -> Word:
    if n < 0:
        x, n = invert(x), -n
    out = IDENTITY
    for _ in range(n):
        out = multiply(out, x)
    return out


def gpow(i: int, n: int) -> Word:
    """``a_i^n`` for an integer exponent of either sign."""
    return Word._trusted((i if n > 0 else -i,) * abs(n))


def letter_key(l: int) -> tuple[int, int]:
    return (abs(l), 0 if l > 0 else 1)


def word_key(x: Sequence[int]) -> tuple:
    """Length-lexicographic sort key with a < a^-1 < b < b^-1 < ..."""
    return (len(x), tuple(letter_key(l) for l in x))


def sphere_count(n: int, d: int) -> int:
    if n == 0:
        return 1
    return 2 * d * (2 * d - 1) ** (n - 1)


@lru_cache(maxsize=64)
def _ball(R: int, d: int) -> tuple[Word, ...]:
    layers: list[list[Word]] = [[IDENTITY]]
    order = [l for i in range(1, d + 1) for l in (i, -i)]
    for _ in range(R):
        nxt = []
        for w in layers[-1]:
            last = w[-1] if w else 0
            for l in order:
                if l != -last:
                    nxt.append(Word._trusted((*w, l)))
        layers.append(nxt)
    # appending letters in letter order to an already sorted layer keeps
    # each layer length-lex sorted
    return tuple(w for layer in layers for w in layer)


def ball(R: int, d: int = 2) -> list[Word]:
    """All reduced words of length <= R in length-lex order."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    if d < 1:
        raise ValueError("need at least one generator")
    return list(_ball(R, d))


def sphere(n: int, d: int = 2) -> list[Word]:
    return [w for w in _ball(n, d) if len(w) == n]


def begins_with(x: Sequence[int], p: Sequence[int]) -> bool:
    """Membership in W_p; W_e is the singleton {e}."""
    if len(p) == 0:
        return len(x) == 0
    return len(x) >= len(p) and tuple(x[: len(p)]) == tuple(p)


def prefix_member(x: Sequence[int], prefixes: Iterable[Sequence[int]]) -> bool:
    return any(begins_with(x, p) for p in prefixes)


def alpha(x: Sequence[int], d: int = 2) -> Word:
    """The automorphism of F_2 swapping a and b."""
    if d != 2:
        raise WordError("alpha is only defined on F_2")
    swap = {1: 2, 2: 1, -1: -2, -2: -1}
    try:
        return Word._trusted(tuple(swap[l] for l in x))
    except KeyError:
        raise WordError(f"{x!r} is not a word in F_2") from None


def beta(x: Sequence[int]) -> Word:
    """The automorphism sending every generator to its inverse."""
    return Word._trusted(tuple(-l for l in x))


def to_text(x: Sequence[int]) -> str:
    if len(x) == 0:
        return "e"
    chars = []
    for l in x:
        if abs(l) > len(_ALPHABET):
            raise WordError(f"no text form for generator {abs(l)}")
        c = _ALPHABET[abs(l) - 1]
        chars.append(c if l > 0 else c.upper())
    return "".join(chars)


def parse(text: str) -> Word:
    """Parse the text form ('e', 'aB', ...); the result is reduced."""
    text = text.strip()
    if text in ("", "e"):
        return IDENTITY
    letters = []
    for c in text:
        i = _ALPHABET.find(c.lower())
        if i < 0:
            raise WordError(f"unknown letter {c!r} in {text!r}")
        letters.append(i + 1 if c.islower() else -(i + 1))
    return reduce_letters(letters)


def iter_words(words: Iterable[str | Sequence[int]]) -> Iterator[Word]:
    for w in words:
        yield parse(w) if isinstance(w, str) else Word(w)
