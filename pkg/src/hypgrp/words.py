"""Letters, words, free reduction and cyclic machinery.

A letter is stored as a signed 1-based integer: ``+(i+1)`` is generator
number ``i``, ``-(i+1)`` its inverse.  A :class:`Word` is an immutable
sequence of such letters; nothing in this module reduces implicitly, so
a word spells exactly what was written.

Text syntax (used by the CLI and all file formats): a lowercase letter
is a generator, the corresponding uppercase letter its inverse;
multi-character generators are written ``g3``, inverses ``g3^-1``;
tokens may be separated by spaces or ``*``.  The identity is written
``1`` (the empty string also parses to it).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

from .errors import WordParseError


class Letter(NamedTuple):
    """Structured view of one signed generator letter."""

    generator_index: int
    sign: int

    def code(self) -> int:
        return self.sign * (self.generator_index + 1)

    @staticmethod
    def from_code(code: int) -> "Letter":
        if code == 0:
            raise ValueError("letter code 0 is reserved")
        return Letter(abs(code) - 1, 1 if code > 0 else -1)


@dataclass(frozen=True)
class Word:
    """Immutable word over the generators; all rewriting returns fresh words."""

    letters: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        # Plain concatenation: no implicit reduction.
        return Word(self.letters + other.letters)

    def __pow__(self, n: int) -> "Word":
        if n >= 0:
            return Word(self.letters * n)
        return Word(inverse_tuple(self.letters) * (-n))

    def inverse(self) -> "Word":
        return Word(inverse_tuple(self.letters))

    def is_empty(self) -> bool:
        return not self.letters

    def to_letters(self) -> tuple[Letter, ...]:
        return tuple(Letter.from_code(c) for c in self.letters)

    @staticmethod
    def from_letters(letters: Sequence[Letter]) -> "Word":
        return Word(tuple(l.code() for l in letters))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Word({self.letters!r})"


EMPTY = Word()


def inverse_tuple(letters: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(-c for c in reversed(letters))


def free_reduce_tuple(letters: Sequence[int]) -> tuple[int, ...]:
    """Cancel adjacent s·s⁻¹ pairs; the unique freely reduced form."""
    out: list[int] = []
    for c in letters:
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def free_reduce(w: Word) -> Word:
    return Word(free_reduce_tuple(w.letters))


def reduced_mul(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """Product of two freely reduced tuples, cancelling only at the seam."""
    i = len(a)
    j = 0
    while i > 0 and j < len(b) and a[i - 1] == -b[j]:
        i -= 1
        j += 1
    return a[:i] + b[j:]


def cyclic_conjugates(w: Word) -> list[Word]:
    """All length(w) rotations of w; the empty word yields [ε]."""
    if not w.letters:
        return [EMPTY]
    ls = w.letters
    return [Word(ls[t:] + ls[:t]) for t in range(len(ls))]


def cyclically_reduce_tuple(letters: tuple[int, ...]) -> tuple[int, ...]:
    """Freely reduce, then strip cancelling first/last pairs."""
    ls = free_reduce_tuple(letters)
    i, j = 0, len(ls)
    while j - i >= 2 and ls[i] == -ls[j - 1]:
        i += 1
        j -= 1
    return ls[i:j]


def min_rotation(letters: tuple[int, ...]) -> tuple[int, ...]:
    """Lexicographically least rotation; a cheap cyclic-word canonical form."""
    if not letters:
        return letters
    return min(letters[t:] + letters[:t] for t in range(len(letters)))


def validate_generator_names(names: Sequence[str]) -> None:
    seen: set[str] = set()
    for name in names:
        if not name or not name[0].isalpha() or not name.isalnum():
            raise WordParseError(f"bad generator name {name!r}: must be alphanumeric and start with a letter")
        if name == "1":
            raise WordParseError("generator name '1' is reserved for the identity")
        if name in seen:
            raise WordParseError(f"duplicate generator name {name!r}")
        # Single lowercase names reserve their uppercase for the inverse.
        if len(name) == 1 and name.isupper() and name.lower() in seen:
            raise WordParseError(f"name {name!r} collides with the inverse of {name.lower()!r}")
        if len(name) == 1 and name.islower() and name.upper() in seen:
            raise WordParseError(f"name {name!r} reserves {name.upper()!r}, already taken")
        seen.add(name)


def parse_word(text: str, generator_table: Sequence[str]) -> Word:
    """Parse `text` over the named generators; no implicit reduction.

    Unknown tokens raise :class:`WordParseError` naming the offending
    token and its position.
    """
    index_of = {name: i for i, name in enumerate(generator_table)}
    single = all(len(n) == 1 and n.islower() for n in generator_table)

    stripped = text.strip()
    if stripped in ("", "1"):
        return EMPTY

    tokens: list[tuple[str, int]] = []
    if ("*" in stripped) or (" " in stripped) or ("\t" in stripped):
        pos = 0
        for raw in stripped.replace("*", " ").split():
            tokens.append((raw, pos))
            pos += 1
    elif single:
        tokens = [(ch, i) for i, ch in enumerate(stripped)]
    else:
        tokens = [(stripped, 0)]

    letters: list[int] = []
    for tok, pos in tokens:
        if tok == "1":
            continue
        name, sign = tok, 1
        if tok.endswith("^-1"):
            name, sign = tok[:-3], -1
        elif len(tok) == 1 and tok.isupper() and tok.lower() in index_of:
            name, sign = tok.lower(), -1
        if name not in index_of:
            raise WordParseError(
                f"unknown generator {tok!r} at position {pos}", token=tok, position=pos
            )
        letters.append(sign * (index_of[name] + 1))
    return Word(tuple(letters))


def format_word(w: Word, generator_table: Sequence[str]) -> str:
    """Inverse of :func:`parse_word`; the identity prints as ``1``."""
    if not w.letters:
        return "1"
    single = all(len(n) == 1 and n.islower() for n in generator_table)
    parts: list[str] = []
    for c in w.letters:
        name = generator_table[abs(c) - 1]
        if c > 0:
            parts.append(name)
        elif single:
            parts.append(name.upper())
        else:
            parts.append(name + "^-1")
    return "".join(parts) if single else " ".join(parts)


def spiral(limit: int, include_zero: bool = True) -> Iterator[int]:
    """0, 1, -1, 2, -2, ... up to |n| <= limit: smallest-|n|, ties positive."""
    if include_zero:
        yield 0
    for n in range(1, limit + 1):
        yield n
        yield -n
