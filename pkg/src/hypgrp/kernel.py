"""Word-problem and conjugacy-problem engine.

Each backend solves equality its own way: free reduction for free
groups, alternating normal forms for free products of finite cyclics,
and Dehn's monotone rewriting for small-cancellation presentations.
Geodesic representatives, the cyclic-shortening loop and the conjugacy
test sit on top of those.

A :class:`HyperbolicContext` packages a presentation with the constant
bundle (delta, C, lambda, epsilon, k).  It is immutable after
construction apart from memo caches, which never change an observable
answer, so one context can serve any number of concurrent readers.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

from .errors import (
    BoundInfeasibleError,
    InternalError,
    UnsupportedBackendError,
    ValidationError,
)
from .presentation import Backend, Presentation, symmetrized_closure
from .words import (
    Word,
    free_reduce_tuple,
    inverse_tuple,
    reduced_mul,
)

StepCallback = Optional[Callable[[Word], None]]


@dataclass(frozen=True)
class ConjugacyWitness:
    """g with g·u·g⁻¹ = v; verified by are_equal before being returned."""

    conjugator: Word


@dataclass(frozen=True)
class ContextConfig:
    validation_radius: int = 6
    exp_cap: int = 10**6
    ball_vertex_limit: int = 200_000
    k_provider: str = "auto"  # auto | tree | conservative
    geodesy_closure_cap: int = 20_000
    conjugacy_closure_cap: int = 50_000
    etape2_power_cap: int = 4_096
    validation_node_budget: int = 500_000
    validation_samples: int = 200


class HyperbolicContext:
    """Presentation plus computed constants plus observationally pure caches."""

    def __init__(self, presentation: Presentation, config: ContextConfig):
        self.presentation = presentation
        self.config = config
        self.delta: Fraction = Fraction(0)
        self.delta_source: str = "unset"
        self.C: int = 1
        self.lam: Fraction = Fraction(1)
        self.eps: Fraction = Fraction(0)
        self.k: Fraction = Fraction(0)
        self.k_provider: str = "tree"
        self.validation_exhaustive: bool = False

        p = presentation
        self._letters = p.all_letters()
        self._orders = p.orders

        # Dehn tables for the small-cancellation backend.
        self._dehn_tables: dict[int, dict[tuple, tuple]] = {}
        self._half_tables: dict[int, dict[tuple, list[tuple]]] = {}
        if p.backend is Backend.SMALL_CANCELLATION:
            closure = sorted(w.letters for w in symmetrized_closure(p.relators))
            for r in closure:
                length = len(r)
                for cut in range(length // 2 + 1, length + 1):
                    table = self._dehn_tables.setdefault(cut, {})
                    table.setdefault(r[:cut], inverse_tuple(r[cut:]))
                if length % 2 == 0:
                    half = length // 2
                    bucket = self._half_tables.setdefault(half, {})
                    repl = inverse_tuple(r[half:])
                    lst = bucket.setdefault(r[:half], [])
                    if repl not in lst:
                        lst.append(repl)
        self._dehn_lengths = sorted(self._dehn_tables, reverse=True)
        self._half_lengths = sorted(self._half_tables, reverse=True)

        # caches: idempotent fills, safe under concurrent readers
        self._geo_cache: dict[tuple, tuple] = {}
        self._class_cache: dict[tuple, object] = {}
        self._oracle_balls: dict = {}
        self._geometry_balls: dict = {}

    # ------------------------------------------------------------------
    # equality

    def equality_key(self, letters: tuple) -> tuple:
        """Canonical form for equality in free / free-product backends."""
        b = self.presentation.backend
        if b is Backend.FREE:
            return free_reduce_tuple(letters)
        if b is Backend.FREE_PRODUCT:
            return self.fp_syllables(letters)
        raise UnsupportedBackendError("no canonical equality key for small-cancellation")

    def are_equal_tuples(self, a: tuple, b: tuple) -> bool:
        backend = self.presentation.backend
        if backend is Backend.SMALL_CANCELLATION:
            return not self.dehn_tuple(reduced_mul(free_reduce_tuple(a), inverse_tuple(free_reduce_tuple(b))))
        return self.equality_key(a) == self.equality_key(b)

    def is_trivial_tuple(self, a: tuple) -> bool:
        backend = self.presentation.backend
        if backend is Backend.SMALL_CANCELLATION:
            return not self.dehn_tuple(a)
        return not self.equality_key(a)

    # ------------------------------------------------------------------
    # free-product normal forms

    def fp_syllables(self, letters: tuple) -> tuple:
        """Alternating normal form: ((gen, exp), ...), exp canonical residue."""
        orders = self._orders
        stack: list[list[int]] = []
        for c in letters:
            g = abs(c) - 1
            e = 1 if c > 0 else -1
            if stack and stack[-1][0] == g:
                stack[-1][1] += e
                n = orders[g]
                if n:
                    stack[-1][1] %= n
                if stack[-1][1] == 0:
                    stack.pop()
            else:
                n = orders[g]
                e0 = e % n if n else e
                if e0:
                    stack.append([g, e0])
        return tuple((g, e) for g, e in stack)

    def fp_spell(self, syllables: tuple) -> tuple:
        """Geodesic spelling of a normal form; exponent ties spell positive."""
        out: list[int] = []
        orders = self._orders
        for g, e in syllables:
            n = orders[g]
            e2 = e if (not n or e <= n // 2) else e - n
            out.extend([g + 1 if e2 > 0 else -(g + 1)] * abs(e2))
        return tuple(out)

    # ------------------------------------------------------------------
    # Dehn reduction (small-cancellation; free degenerates to free reduction)

    def dehn_tuple(self, letters: tuple, on_step: StepCallback = None) -> tuple:
        backend = self.presentation.backend
        if backend is Backend.FREE_PRODUCT:
            raise UnsupportedBackendError(
                "Dehn reduction is not defined for the free-product backend; it uses normal forms"
            )
        cur = free_reduce_tuple(letters)
        if on_step is not None and cur != tuple(letters):
            on_step(Word(cur))
        if backend is Backend.FREE:
            return cur
        changed = True
        while changed:
            changed = False
            m = len(cur)
            for i in range(m):
                for cut in self._dehn_lengths:
                    if i + cut > m:
                        continue
                    repl = self._dehn_tables[cut].get(cur[i : i + cut])
                    if repl is not None:
                        cur = free_reduce_tuple(cur[:i] + repl + cur[i + cut :])
                        if on_step is not None:
                            on_step(Word(cur))
                        changed = True
                        break
                if changed:
                    break
        return cur

    # ------------------------------------------------------------------
    # geodesic representatives

    def _sc_half_neighbors(self, x: tuple) -> Iterator[tuple]:
        m = len(x)
        for half in self._half_lengths:
            if half > m:
                continue
            table = self._half_tables[half]
            for i in range(m - half + 1):
                repls = table.get(x[i : i + half])
                if repls:
                    for repl in repls:
                        yield free_reduce_tuple(x[:i] + repl + x[i + half :])

    def _sc_search_shorter(self, w: tuple) -> Optional[tuple]:
        """BFS over equal-length half-relator rewrites of a Dehn-reduced word.

        Returns a strictly shorter equal word if one is reachable, else None.
        """
        cap = self.config.geodesy_closure_cap
        seen = {w}
        queue = deque([w])
        while queue:
            x = queue.popleft()
            for y in self._sc_half_neighbors(x):
                if len(y) < len(w):
                    return self.dehn_tuple(y)
                y = self.dehn_tuple(y)
                if len(y) < len(w):
                    return y
                if y not in seen:
                    if len(seen) >= cap:
                        raise BoundInfeasibleError(
                            "geodesic search closure exceeded its cap", bound_value=cap
                        )
                    seen.add(y)
                    queue.append(y)
        return None

    def geodesic_tuple(self, letters: tuple) -> tuple:
        """A geodesic word equal to the input; the input itself if already geodesic."""
        letters = tuple(letters)
        cached = self._geo_cache.get(letters)
        if cached is not None:
            return cached
        backend = self.presentation.backend
        if backend is Backend.FREE:
            result = free_reduce_tuple(letters)
        elif backend is Backend.FREE_PRODUCT:
            canonical = self.fp_spell(self.fp_syllables(letters))
            result = letters if len(canonical) == len(letters) else canonical
        else:
            cur = self.dehn_tuple(letters)
            while True:
                shorter = self._sc_search_shorter(cur)
                if shorter is None:
                    break
                cur = shorter
            result = letters if len(cur) == len(letters) else cur
        self._geo_cache[letters] = result
        return result

    def glen(self, letters: tuple) -> int:
        return len(self.geodesic_tuple(letters))

    # ------------------------------------------------------------------
    # abelianization (conjugation-invariant prefilter; None when the
    # relator lattice is not diagonal)

    @property
    def ab_moduli(self) -> Optional[tuple]:
        p = self.presentation
        if p.backend is Backend.FREE:
            return (0,) * p.num_generators
        if p.backend is Backend.FREE_PRODUCT:
            return p.orders
        vecs = []
        for r in p.relators:
            v = [0] * p.num_generators
            for c in r.letters:
                v[abs(c) - 1] += 1 if c > 0 else -1
            vecs.append(v)
        if all(all(x == 0 for x in v) for v in vecs):
            return (0,) * p.num_generators
        return None

    def ab_vector(self, letters: tuple) -> Optional[tuple]:
        moduli = self.ab_moduli
        if moduli is None:
            return None
        v = [0] * self.presentation.num_generators
        for c in letters:
            v[abs(c) - 1] += 1 if c > 0 else -1
        return tuple(x % n if n else x for x, n in zip(v, moduli))


# ----------------------------------------------------------------------
# element enumeration (one canonical word per element, by length)


def _free_words_exact(letters: tuple, length: int) -> Iterator[tuple]:
    if length == 0:
        yield ()
        return
    stack: list[tuple] = [()]
    while stack:
        w = stack.pop()
        for c in letters:
            if w and w[-1] == -c:
                continue
            nw = w + (c,)
            if len(nw) == length:
                yield nw
            else:
                stack.append(nw)


def _fp_words_exact(ctx: HyperbolicContext, length: int) -> Iterator[tuple]:
    """Canonical geodesic spellings of exactly the given length."""
    orders = ctx._orders
    ngen = ctx.presentation.num_generators

    def syllables(g: int, budget: int) -> Iterator[tuple]:
        n = orders[g]
        pos_max = n // 2 if n else budget
        neg_max = (n - 1) // 2 if n else budget
        for e in range(1, min(pos_max, budget) + 1):
            yield (g + 1,) * e
        for e in range(1, min(neg_max, budget) + 1):
            yield (-(g + 1),) * e

    def rec(prev_gen: int, remaining: int, prefix: tuple) -> Iterator[tuple]:
        if remaining == 0:
            yield prefix
            return
        for g in range(ngen):
            if g == prev_gen:
                continue
            for syl in syllables(g, remaining):
                yield from rec(g, remaining - len(syl), prefix + syl)

    yield from rec(-1, length, ())


def iter_elements(ctx: HyperbolicContext, max_len: int) -> Iterator[tuple]:
    """Yield one geodesic word per group element with |g| <= max_len, by length.

    Free and free-product backends enumerate closed-form canonical
    spellings; small-cancellation falls back to a ball graph (subject to
    the configured vertex limit).
    """
    backend = ctx.presentation.backend
    if backend is Backend.FREE:
        for length in range(max_len + 1):
            yield from _free_words_exact(ctx._letters, length)
    elif backend is Backend.FREE_PRODUCT:
        for length in range(max_len + 1):
            yield from sorted(_fp_words_exact(ctx, length))
    else:
        from .geometry import build_ball

        ball = build_ball(ctx, max_len)
        yield from ball.words


def count_elements_capped(ctx: HyperbolicContext, max_len: int, cap: int) -> int:
    """min(#elements with |g| <= max_len, cap + 1); never builds past the cap."""
    from .errors import BallOverflowError

    n = 0
    try:
        for _ in iter_elements(ctx, max_len):
            n += 1
            if n > cap:
                return n
    except BallOverflowError:
        return cap + 1
    return n


# ----------------------------------------------------------------------
# the cyclic-shortening loop (shared by conjugacy and C-reduction)


def cyclic_geodesic_core(
    ctx: HyperbolicContext, letters: tuple, on_step: StepCallback = None
) -> tuple[tuple, tuple]:
    """Shorten through cyclic rotations until every rotation is geodesic.

    Returns (core, v) with core = v·w·v⁻¹ in G.  Rotations are scanned
    in offset order and the first strict shortening is taken, so the
    result is deterministic.
    """
    v: tuple = ()
    cur = ctx.geodesic_tuple(tuple(letters))
    if on_step is not None:
        on_step(Word(cur))
    while True:
        n = len(cur)
        if n == 0:
            return cur, v
        improved = False
        for t in range(1, n):
            rot = cur[t:] + cur[:t]
            g = ctx.geodesic_tuple(rot)
            if len(g) < n:
                prefix = cur[:t]
                v = reduced_mul(inverse_tuple(prefix), v)
                cur = g
                improved = True
                if on_step is not None:
                    on_step(Word(cur))
                break
        if not improved:
            return cur, v


# ----------------------------------------------------------------------
# conjugacy


def _rotation_conjugator(ctx: HyperbolicContext, cu: tuple, cv: tuple) -> Optional[tuple]:
    """g with g·cu·g⁻¹ = cv among rotations, else None."""
    if len(cu) != len(cv):
        return None
    if len(cu) == 0:
        return ()
    backend = ctx.presentation.backend
    for t in range(len(cu)):
        rot = cu[t:] + cu[:t]
        if backend is Backend.FREE:
            equal = rot == cv
        else:
            equal = ctx.are_equal_tuples(rot, cv)
        if equal:
            # rot = p⁻¹·cu·p with p = cu[:t], so cv = (p⁻¹)·cu·(p⁻¹)⁻¹
            return inverse_tuple(cu[:t])
    return None


def _sc_class_closure(ctx: HyperbolicContext, seed: tuple) -> dict[tuple, tuple]:
    """Explore the conjugacy class of a cyclically geodesic word.

    Moves: cyclic rotations (conjugation by the rotated-away prefix) and
    half-relator substitutions (element-preserving).  Whenever a strictly
    shorter representative appears the closure restarts from it, so the
    returned set sits at the minimal length the moves can reach.  Maps
    each visited word w to a conjugator c with w = c·seed·c⁻¹ in G.
    """
    cap = ctx.config.conjugacy_closure_cap
    base, base_conj = seed, ()
    while True:
        reached: dict[tuple, tuple] = {base: base_conj}
        queue = deque([base])
        shorter: Optional[tuple[tuple, tuple]] = None
        while queue and shorter is None:
            w = queue.popleft()
            c = reached[w]
            neighbors: list[tuple[tuple, tuple]] = []
            for t in range(1, len(w)):
                rot = w[t:] + w[:t]
                neighbors.append((rot, reduced_mul(inverse_tuple(w[:t]), c)))
            for y in ctx._sc_half_neighbors(w):
                neighbors.append((ctx.dehn_tuple(y), c))
            for nw, nc in neighbors:
                if len(nw) < len(base):
                    shorter = (nw, nc)
                    break
                if nw not in reached:
                    if len(reached) >= cap:
                        raise BoundInfeasibleError(
                            "conjugacy class closure exceeded its cap", bound_value=cap
                        )
                    reached[nw] = nc
                    queue.append(nw)
        if shorter is None:
            return reached
        w0, c0 = shorter  # w0 = c0·seed·c0⁻¹, strictly shorter than base
        core2, v2 = cyclic_geodesic_core(ctx, w0)
        base, base_conj = core2, reduced_mul(v2, c0)


def are_conjugate(ctx: HyperbolicContext, u: Word, v: Word) -> Optional[ConjugacyWitness]:
    """Some witness iff u ~ v in G; the witness satisfies g·u·g⁻¹ = v."""
    au, av = ctx.ab_vector(u.letters), ctx.ab_vector(v.letters)
    if au is not None and au != av:
        return None
    cu, du = cyclic_geodesic_core(ctx, u.letters)
    cv, dv = cyclic_geodesic_core(ctx, v.letters)

    g0 = _rotation_conjugator(ctx, cu, cv)
    if g0 is None:
        backend = ctx.presentation.backend
        if backend is Backend.SMALL_CANCELLATION:
            g0 = _sc_conjugator(ctx, cu, cv)
        # free / free-product: rotation failure is conclusive
        if g0 is None:
            return None
    # cu = du·u·du⁻¹, cv = dv·v·dv⁻¹, g0·cu·g0⁻¹ = cv
    g = reduced_mul(inverse_tuple(dv), reduced_mul(g0, du))
    if not ctx.are_equal_tuples(reduced_mul(reduced_mul(g, u.letters), inverse_tuple(g)), v.letters):
        raise InternalError("conjugacy witness failed verification")
    return ConjugacyWitness(Word(g))


def _sc_conjugator(ctx: HyperbolicContext, cu: tuple, cv: tuple) -> Optional[tuple]:
    """Schupp-style annular search between cyclically geodesic words."""
    class_u = _sc_class_closure(ctx, cu)
    class_v = _sc_class_closure(ctx, cv)
    common = set(class_u) & set(class_v)
    if not common:
        return None
    w0 = min(common)
    gu = class_u[w0]  # w0 = gu·cu·gu⁻¹
    gv = class_v[w0]  # w0 = gv·cv·gv⁻¹
    # cv = (gv⁻¹·gu)·cu·(gv⁻¹·gu)⁻¹
    return reduced_mul(inverse_tuple(gv), gu)


def are_equal(ctx: HyperbolicContext, u: Word, v: Word) -> bool:
    """True iff u = v in G."""
    return ctx.are_equal_tuples(u.letters, v.letters)


def dehn_reduce(ctx: HyperbolicContext, w: Word, on_step: StepCallback = None) -> Word:
    """Monotone length-reducing rewriting; empty iff trivial (Dehn presentations)."""
    return Word(ctx.dehn_tuple(w.letters, on_step))


def geodesic_representative(ctx: HyperbolicContext, w: Word) -> Word:
    """A word of minimal length equal to w; w itself if already geodesic."""
    return Word(ctx.geodesic_tuple(w.letters))


# ----------------------------------------------------------------------
# context construction


def _tree_case(p: Presentation) -> bool:
    """Backends whose Cayley graph is a tree (so delta = 0 exactly)."""
    if p.backend is Backend.FREE:
        return True
    if p.backend is Backend.FREE_PRODUCT:
        return all(n in (0, 2) for n in p.orders)
    return False


def compute_constants(delta: Fraction) -> tuple[int, Fraction, Fraction]:
    """C = ceil(8δ)+1, λ = (C+4δ)/(C−4δ), ε = 2δ."""
    C = math.ceil(8 * delta) + 1
    lam = Fraction(C + 4 * delta, 1) / Fraction(C - 4 * delta, 1)
    eps = 2 * delta
    return C, lam, eps


def stability_constant(delta: Fraction, lam: Fraction, eps: Fraction, provider: str) -> Fraction:
    if provider == "tree":
        return Fraction(0)
    return 4 * delta * (lam + 1) + 2 * eps + 2


def build_context(
    presentation: Presentation,
    validation_radius: int = 6,
    *,
    config: Optional[ContextConfig] = None,
) -> HyperbolicContext:
    """Build and spot-validate a context.

    delta is the declared value when present, else 0 for tree backends,
    else the tripod lower-bound estimate at the validation radius.  The
    local-to-global property of the resulting constants is then checked
    against the oracle ball; a violating C-local geodesic rejects the
    construction.
    """
    if config is None:
        config = ContextConfig(validation_radius=validation_radius)
    elif validation_radius != config.validation_radius:
        config = ContextConfig(**{**config.__dict__, "validation_radius": validation_radius})
    ctx = HyperbolicContext(presentation, config)

    if presentation.declared_delta is not None:
        ctx.delta = presentation.declared_delta
        ctx.delta_source = "declared"
    elif _tree_case(presentation):
        ctx.delta = Fraction(0)
        ctx.delta_source = "tree"
    else:
        from .geometry import estimate_delta_lower_bound

        ctx.delta = estimate_delta_lower_bound(ctx, validation_radius)
        ctx.delta_source = f"estimated(radius={validation_radius})"

    ctx.C, ctx.lam, ctx.eps = compute_constants(ctx.delta)
    provider = config.k_provider
    if provider == "auto":
        provider = "tree" if ctx.delta == 0 and _tree_case(presentation) else "conservative"
        if ctx.delta == 0 and not _tree_case(presentation):
            # delta estimated as 0 on a non-tree backend: quasigeodesics in
            # the observable ball behave like tree ones; keep k conservative.
            provider = "conservative"
    ctx.k_provider = provider
    ctx.k = stability_constant(ctx.delta, ctx.lam, ctx.eps, provider)

    _validate_context(ctx)
    return ctx


def _validate_context(ctx: HyperbolicContext) -> None:
    """Spot-check: C-local geodesics in the ball satisfy lgr(u) <= λ|u| + ε.

    Exhaustive over all in-ball C-local geodesic paths from the origin
    (up to a node budget), plus relator-closure loops and seeded random
    walks.  Prefix subwords are checked against oracle ball distances.
    """
    from .oracle import oracle_ball

    radius = ctx.config.validation_radius
    ball = oracle_ball(ctx, radius)
    lam, eps, C = ctx.lam, ctx.eps, ctx.C
    max_len = 2 * radius

    def check_prefix(word: tuple, vid: int) -> None:
        if len(word) > lam * ball.dist[vid] + eps:
            raise ValidationError(
                "C-local geodesic violates the quasigeodesic inequality: "
                f"lgr={len(word)} vs λ·{ball.dist[vid]}+ε "
                f"(word {ctx.presentation.format(Word(word))!r})",
                violating_word=Word(word),
            )

    def window_ok(word: tuple) -> bool:
        # suffix windows ending at the last letter, length <= C+1
        for wl in range(2, min(C + 1, len(word)) + 1):
            sub = word[-wl:]
            if ctx.glen(sub) != wl:
                return False
        return True

    # exhaustive DFS with node budget
    budget = ctx.config.validation_node_budget
    nodes = 0
    exhaustive = True
    stack: list[tuple[tuple, int]] = [((), 0)]
    while stack:
        word, vid = stack.pop()
        nodes += 1
        if nodes > budget:
            exhaustive = False
            break
        check_prefix(word, vid)
        if len(word) >= max_len:
            continue
        for c in ctx._letters:
            nvid = ball.edges.get((vid, c))
            if nvid is None:
                continue
            nword = word + (c,)
            if window_ok(nword):
                stack.append((nword, nvid))
    ctx.validation_exhaustive = exhaustive

    # structured extras: relator loops are the canonical violators when the
    # declared constants are too small for the presentation
    extras: list[tuple] = []
    if ctx.presentation.backend is Backend.SMALL_CANCELLATION:
        for r in symmetrized_closure(ctx.presentation.relators):
            extras.append(r.letters)
            extras.append(r.letters * 2)
    rng = random.Random(97)
    for _ in range(ctx.config.validation_samples if not exhaustive else 0):
        word: tuple = ()
        vid = 0
        for _ in range(max_len):
            options = [c for c in ctx._letters if ball.edges.get((vid, c)) is not None]
            rng.shuffle(options)
            stepped = False
            for c in options:
                nword = word + (c,)
                if window_ok(nword):
                    word, vid = nword, ball.edges[(vid, c)]
                    stepped = True
                    break
            if not stepped:
                break
        extras.append(word)

    for cand in extras:
        vid = 0
        word: tuple = ()
        ok = True
        for c in cand:
            nvid = ball.edges.get((vid, c))
            if nvid is None:
                ok = False
                break
            word = word + (c,)
            vid = nvid
            if not window_ok(word):
                ok = False
                break
            check_prefix(word, vid)
        del ok
