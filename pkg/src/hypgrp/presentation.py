"""Group presentations, symmetrized closure, small-cancellation checks.

Three backend disciplines ship; anything else is rejected at load time:

* ``free``            -- no relators; word problem by free reduction.
* ``free-product``    -- every relator is g^n for distinct generators g,
                         n >= 2 (free product of finite cyclic groups,
                         possibly with extra infinite-cyclic factors).
* ``small-cancellation`` -- metric condition C'(1/6) verified on the
                         symmetrized closure; word problem by Dehn's
                         algorithm.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import PresentationError
from .words import (
    Word,
    cyclically_reduce_tuple,
    format_word,
    free_reduce_tuple,
    inverse_tuple,
    parse_word,
    validate_generator_names,
)


class Backend(enum.Enum):
    FREE = "free"
    FREE_PRODUCT = "free-product"
    SMALL_CANCELLATION = "small-cancellation"


@dataclass(frozen=True)
class PieceReport:
    passes: bool
    max_piece_length: int
    min_relator_length: int


@dataclass(frozen=True)
class Presentation:
    generator_names: tuple[str, ...]
    relators: tuple[Word, ...]
    backend: Backend
    declared_delta: Optional[Fraction] = None
    # finite order per generator index, 0 meaning infinite (free factor)
    orders: tuple[int, ...] = field(default=(), compare=False)

    @property
    def num_generators(self) -> int:
        return len(self.generator_names)

    @property
    def alphabet_size(self) -> int:
        """card(S ∪ S⁻¹) counted as formal letters."""
        return 2 * len(self.generator_names)

    def all_letters(self) -> tuple[int, ...]:
        n = len(self.generator_names)
        return tuple(range(1, n + 1)) + tuple(range(-1, -n - 1, -1))

    def parse(self, text: str) -> Word:
        return parse_word(text, self.generator_names)

    def format(self, w: Word) -> str:
        return format_word(w, self.generator_names)

    def content_key(self) -> tuple:
        return (
            self.generator_names,
            tuple(r.letters for r in self.relators),
            self.backend.value,
            self.declared_delta,
        )


def make_presentation(
    generator_names: Sequence[str],
    relators: Sequence[Word],
    backend: Backend,
    declared_delta: Optional[Fraction] = None,
) -> Presentation:
    """Validate and normalize; relators stored freely and cyclically reduced."""
    validate_generator_names(generator_names)
    names = tuple(generator_names)

    reduced: list[Word] = []
    for r in relators:
        for c in r.letters:
            if abs(c) > len(names):
                raise PresentationError(f"relator letter {c} out of range")
        core = cyclically_reduce_tuple(r.letters)
        if not core:
            raise PresentationError("a relator reduces to the empty word")
        reduced.append(Word(core))

    orders = [0] * len(names)
    if backend is Backend.FREE:
        if reduced:
            raise PresentationError("free backend requires an empty relator list")
    elif not reduced:
        raise PresentationError(f"{backend.value} backend requires at least one relator")

    if backend is Backend.FREE_PRODUCT:
        seen: set[int] = set()
        for r in reduced:
            codes = set(r.letters)
            if len(codes) != 1 or min(codes) < 0:
                raise PresentationError(
                    f"free-product relator must be a positive power of one generator, got {codes}"
                )
            g = r.letters[0] - 1
            n = len(r.letters)
            if n < 2:
                raise PresentationError("free-product relator exponent must be >= 2")
            if g in seen:
                raise PresentationError(
                    f"generator {names[g]!r} appears in two free-product relators"
                )
            seen.add(g)
            orders[g] = n

    p = Presentation(names, tuple(reduced), backend, declared_delta, tuple(orders))

    if backend is Backend.SMALL_CANCELLATION:
        report = verify_small_cancellation(p, Fraction(1, 6))
        if not report.passes:
            raise PresentationError(
                "small-cancellation backend declared but C'(1/6) fails: "
                f"max piece {report.max_piece_length} vs min relator {report.min_relator_length}"
            )
    return p


def symmetrized_closure(relators: Sequence[Word]) -> set[Word]:
    """Closure under inversion and cyclic rotation; members cyclically reduced."""
    closure: set[tuple[int, ...]] = set()
    for r in relators:
        core = cyclically_reduce_tuple(r.letters)
        if not core:
            raise PresentationError("cannot symmetrize an empty relator")
        for base in (core, inverse_tuple(core)):
            for t in range(len(base)):
                closure.add(base[t:] + base[:t])
    return {Word(t) for t in closure}


def _min_rotation_period(letters: tuple[int, ...]) -> int:
    n = len(letters)
    for p in range(1, n):
        if n % p == 0 and letters == letters[p:] + letters[:p]:
            return p
    return n


def verify_small_cancellation(p: Presentation, ratio: Fraction) -> PieceReport:
    """Compute the metric small-cancellation report at the given ratio.

    A piece is a maximal common prefix of two distinct members of the
    symmetrized closure.  A relator that is a proper power x^m also
    yields the classical piece x^(m-1) (its rotations coincide as
    strings, so prefix comparison alone would miss it).
    """
    if not p.relators:
        return PieceReport(passes=True, max_piece_length=0, min_relator_length=0)

    closure = sorted((w.letters for w in symmetrized_closure(p.relators)))
    min_rel = min(len(w) for w in closure)

    max_piece = 0
    # Sorted order makes the maximal common prefix of any pair appear
    # between lexicographic neighbours.
    for a, b in zip(closure, closure[1:]):
        k = 0
        while k < len(a) and k < len(b) and a[k] == b[k]:
            k += 1
        max_piece = max(max_piece, k)

    for r in p.relators:
        period = _min_rotation_period(r.letters)
        if period < len(r.letters):
            max_piece = max(max_piece, len(r.letters) - period)

    return PieceReport(
        passes=max_piece < ratio * min_rel,
        max_piece_length=max_piece,
        min_relator_length=min_rel,
    )


def load_presentation(document: str) -> Presentation:
    """Parse the line-oriented presentation format.

    ::

        generators: a b c d
        relators: a b A B c d C D
        backend: small-cancellation      # or: free | free-product
        delta: 0                         # optional rational, e.g. 3/2

    ``relators:`` may repeat, one relator per line; ``#`` starts a comment.
    """
    names: Optional[list[str]] = None
    relator_texts: list[str] = []
    backend: Optional[Backend] = None
    delta: Optional[Fraction] = None

    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise PresentationError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, value = (part.strip() for part in line.split(":", 1))
        if key == "generators":
            if names is not None:
                raise PresentationError(f"line {lineno}: duplicate generators line")
            names = value.split()
            if not names:
                raise PresentationError(f"line {lineno}: empty generator list")
        elif key == "relators":
            if value:
                relator_texts.append(value)
        elif key == "backend":
            try:
                backend = Backend(value)
            except ValueError:
                raise PresentationError(
                    f"line {lineno}: unknown backend {value!r} "
                    "(expected free | free-product | small-cancellation)"
                ) from None
        elif key == "delta":
            try:
                delta = Fraction(value)
            except (ValueError, ZeroDivisionError):
                raise PresentationError(f"line {lineno}: bad delta {value!r}") from None
            if delta < 0:
                raise PresentationError(f"line {lineno}: delta must be non-negative")
        else:
            raise PresentationError(f"line {lineno}: unknown key {key!r}")

    if names is None:
        raise PresentationError("missing generators line")
    if backend is None:
        raise PresentationError("missing backend line")
    validate_generator_names(names)

    relators = [parse_word(t, names) for t in relator_texts]
    # Reject relators that are freely trivial before cyclic reduction hides it.
    for t, r in zip(relator_texts, relators):
        if not free_reduce_tuple(r.letters):
            raise PresentationError(f"relator {t!r} is freely trivial")

    if delta is None and backend is Backend.FREE:
        delta = Fraction(0)  # free groups act on trees
    return make_presentation(names, relators, backend, delta)
