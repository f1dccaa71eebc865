"""
sadic.py
────────────────────────────────────────────────────────────────────────────────
Directive sequences and what they generate.

A directive sequence is a chain σ_0, σ_1, ... with σ_n : A_{n+1}* → A_n*,
plus seed letters a_n ∈ A_n. From it we build:

  • limit words  u = lim σ_0⋯σ_{n-1}(a_n)  (strict seed compatibility)
  • depth-n languages, growth and primitivity witnesses
  • the generalized right eigenvector (letter frequencies) by cone contraction
  • convergence profiles, balance-criterion partial sums, entropy bounds
  • the universal expansion of an arbitrary finite word

Products A_n = M_0⋯M_{n-1} are exact and memoized per sequence; cone and
criterion arithmetic runs in mpmath at PRECISION_DIGITS.
"""

import math
import threading
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import pandas as pd

from base import (
    Alphabet,
    ConvergenceProfile,
    CriterionReport,
    DirectivePrimitivity,
    EntropyBound,
    FactorTable,
    FiniteWord,
    FrequencyResult,
    GrowthProfile,
    IncidenceMatrix,
    PrefixSuffixStep,
    SAdicGraph,
    Substitution,
)
from config import LANGUAGE_WORD_LIMIT, N_MAX, PRECISION_DIGITS, STALL_STEPS, TOL
from errors import (
    AlphabetMismatchError,
    NotConvergedError,
    PathError,
    PreconditionError,
    SeedIncompatibilityError,
    ShortStreamError,
    StalledGrowthError,
    UnknownNameError,
)
from logger_utils import log_debug, log_error, log_info, log_warning
from substitution import exact_array, expand_symbols, incidence
from words import WordStream

COMPONENT = "sadic"

AUTO = "auto"
SPECIAL_LETTER = "ℓ"
TAIL_POLICIES = ("halt", "cycle", "repeat-last")

SeedSpec = Union[str, Sequence[str]]


# ──────────────────────────────────────────────────────────────────────────────
# DIRECTIVE SEQUENCES
# ──────────────────────────────────────────────────────────────────────────────

class DirectiveSequence:
    """Substitutions σ_n (σ_n maps A_{n+1} into A_n*) with seed letters a_n.

    ``provider(n)`` returns σ_n. Fetched substitutions are cached, so the
    sequence behaves as a pure function of n even for sampled providers.
    ``length`` is None for infinite sequences; a finite sequence still has
    a seed at index ``length`` (a letter of the domain of the last σ).

    Seeds are ``"auto"``, a single letter used at every level, or an
    explicit list. Lists shorter than the requested index wrap along the
    period of periodic kinds.
    """

    def __init__(
        self,
        provider: Callable[[int], Substitution],
        kind: str,
        length: Optional[int] = None,
        seeds: SeedSpec = AUTO,
        name: str = "directive",
        period: Optional[Tuple[int, int]] = None,
        parts: Optional[Dict[str, Any]] = None,
    ):
        if length is not None and length < 1:
            raise PreconditionError("a finite directive sequence needs at least one substitution")
        self.provider = provider
        self.kind = kind
        self.length = length
        self.name = name
        self.period = period
        self.parts = parts or {}
        self.seeds: Union[str, Tuple[str, ...]] = seeds if isinstance(seeds, str) else tuple(seeds)
        self._subs: List[Substitution] = []
        self._products: List[np.ndarray] = []
        self._auto: List[int] = []
        self._lock = threading.RLock()

    # ── constructors ─────────────────────────────────────────────────────────

    @classmethod
    def periodic(cls, substitutions: Sequence[Substitution], seeds: SeedSpec = AUTO, name: str = "periodic"):
        cycle = tuple(substitutions)
        if not cycle:
            raise PreconditionError("periodic directive sequence needs a non-empty cycle")
        return cls(
            lambda n: cycle[n % len(cycle)],
            "periodic",
            seeds=seeds,
            name=name,
            period=(0, len(cycle)),
            parts={"cycle": cycle},
        )

    @classmethod
    def eventually_periodic(
        cls,
        pre: Sequence[Substitution],
        cycle: Sequence[Substitution],
        seeds: SeedSpec = AUTO,
        name: str = "eventually-periodic",
    ):
        pre, cycle = tuple(pre), tuple(cycle)
        if not cycle:
            raise PreconditionError("eventually periodic directive sequence needs a non-empty cycle")

        def provider(n: int) -> Substitution:
            return pre[n] if n < len(pre) else cycle[(n - len(pre)) % len(cycle)]

        return cls(
            provider,
            "eventually-periodic",
            seeds=seeds,
            name=name,
            period=(len(pre), len(cycle)),
            parts={"pre": pre, "cycle": cycle},
        )

    @classmethod
    def explicit(
        cls,
        substitutions: Sequence[Substitution],
        tail: str = "halt",
        seeds: SeedSpec = AUTO,
        name: str = "explicit",
    ):
        items = tuple(substitutions)
        if not items:
            raise PreconditionError("explicit directive sequence needs at least one substitution")
        if tail not in TAIL_POLICIES:
            raise PreconditionError(f"tail policy must be one of {TAIL_POLICIES}, got '{tail}'")
        parts = {"substitutions": items, "tail": tail}
        if tail == "halt":
            return cls(lambda n: items[n], "explicit", length=len(items), seeds=seeds, name=name, parts=parts)
        if tail == "cycle":
            return cls(
                lambda n: items[n % len(items)], "explicit", seeds=seeds, name=name, period=(0, len(items)), parts=parts
            )
        return cls(
            lambda n: items[min(n, len(items) - 1)],
            "explicit",
            seeds=seeds,
            name=name,
            period=(len(items) - 1, 1),
            parts=parts,
        )

    @classmethod
    def graph_path(
        cls,
        graph: SAdicGraph,
        path: Union[Sequence[str], Callable[[int], str]],
        seeds: SeedSpec = AUTO,
        name: Optional[str] = None,
    ):
        """σ_n = τ_{γ_n} along an edge path; consecutive edges must be adjacent."""
        if callable(path):
            edge_at, length = path, None
        else:
            fixed = tuple(path)
            if not fixed:
                raise PreconditionError("edge path must be non-empty")
            edge_at, length = fixed.__getitem__, len(fixed)

        def edge(n: int):
            edge_id = edge_at(n)
            try:
                return graph.edges[graph.edge_index(edge_id)]
            except KeyError:
                raise UnknownNameError("edge", edge_id, [e.id for e in graph.edges]) from None

        def provider(n: int) -> Substitution:
            current = edge(n)
            if n:
                previous = edge(n - 1)
                if previous.target != current.source:
                    log_error(f"edge {previous.id} -> {current.id} breaks adjacency at {n}", COMPONENT)
                    raise PathError(n, f"'{previous.id}' ends at {previous.target}, '{current.id}' starts at {current.source}")
            return current.substitution

        return cls(
            provider,
            "graph-path",
            length=length,
            seeds=seeds,
            name=name or f"path({graph.name})",
            parts={"graph": graph, "path": path},
        )

    # ── access ───────────────────────────────────────────────────────────────

    def available(self, n: int) -> bool:
        return n >= 0 and (self.length is None or n < self.length)

    def substitution(self, n: int) -> Substitution:
        if n < 0:
            raise PreconditionError(f"directive index must be non-negative, got {n}")
        if not self.available(n):
            raise PreconditionError(f"'{self.name}' has {self.length} substitutions, index {n} requested")
        with self._lock:
            while len(self._subs) <= n:
                k = len(self._subs)
                sigma = self.provider(k)
                if k and self._subs[-1].domain != sigma.codomain:
                    log_error(f"'{self.name}' is not composable at index {k}", COMPONENT)
                    raise AlphabetMismatchError(
                        f"domain of σ_{k - 1} ({list(self._subs[-1].domain.letters)}) differs from the codomain "
                        f"of σ_{k} ({list(sigma.codomain.letters)})"
                    )
                self._subs.append(sigma)
            return self._subs[n]

    def substitutions(self, n: int) -> List[Substitution]:
        return [self.substitution(k) for k in range(n)]

    def alphabet(self, n: int) -> Alphabet:
        """A_n: codomain of σ_n, or the domain of the last σ at index ``length``."""
        if self.available(n):
            return self.substitution(n).codomain
        if self.length is not None and n == self.length:
            return self.substitution(n - 1).domain
        raise PreconditionError(f"'{self.name}' has no alphabet at index {n}")

    def product_array(self, n: int) -> np.ndarray:
        """A_n = M_0⋯M_{n-1} as an exact object array (identity at n = 0)."""
        with self._lock:
            if not self._products:
                self._products.append(exact_array(IncidenceMatrix.identity(self.alphabet(0).size)))
            while len(self._products) <= n:
                k = len(self._products) - 1
                self._products.append(self._products[k].dot(exact_array(incidence(self.substitution(k)))))
            return self._products[n]

    def product(self, n: int) -> IncidenceMatrix:
        return IncidenceMatrix.from_rows(self.product_array(n).tolist())

    # ── seeds ────────────────────────────────────────────────────────────────

    def seed(self, n: int) -> str:
        return self.alphabet(n).letters[self.seed_index(n)]

    def seed_index(self, n: int) -> int:
        alphabet = self.alphabet(n)
        if self.seeds == AUTO:
            return self._auto_seed(n)
        if isinstance(self.seeds, str):
            return alphabet.index(self.seeds)
        return alphabet.index(self._listed_seed(n))

    def _listed_seed(self, n: int) -> str:
        seeds = self.seeds
        if n < len(seeds):
            return seeds[n]
        if self.period is not None:
            pre, cycle = self.period
            if len(seeds) >= pre + cycle:
                return seeds[pre + (n - pre) % cycle]
        raise PreconditionError(f"no seed letter given for index {n} of '{self.name}'")

    def _first_letters(self, n: int) -> Optional[FrozenSet[int]]:
        if not self.available(n):
            return None
        return frozenset(image[0] for image in self.substitution(n).images)

    def _auto_seed(self, n: int) -> int:
        # a_k must be a first letter of σ_k and σ_{k-1}(a_k) must begin with a_{k-1}
        with self._lock:
            while len(self._auto) <= n:
                k = len(self._auto)
                firsts = self._first_letters(k)
                if k == 0:
                    candidates = sorted(firsts) if firsts is not None else list(range(self.alphabet(0).size))
                else:
                    previous = self._auto[k - 1]
                    images = self.substitution(k - 1).images
                    candidates = [x for x, image in enumerate(images) if image[0] == previous]
                    if firsts is not None:
                        candidates = [x for x in candidates if x in firsts]
                if not candidates:
                    log_error(f"no compatible seed at index {k} of '{self.name}'", COMPONENT)
                    raise SeedIncompatibilityError(
                        max(k - 1, 0), "no seed letter continues the expansion; the sequence is language-only from here"
                    )
                self._auto.append(candidates[0])
            return self._auto[n]

    def check_seeds(self, depth: int) -> None:
        """Strict compatibility: σ_n(a_{n+1}) begins with a_n for every n < depth."""
        for n in range(depth):
            sigma = self.substitution(n)
            a_n, a_next = self.seed_index(n), self.seed_index(n + 1)
            if sigma.images[a_next][0] != a_n:
                log_error(f"seed check failed at {n} on '{self.name}'", COMPONENT)
                raise SeedIncompatibilityError(
                    n, f"σ_{n}({self.alphabet(n + 1).letters[a_next]}) does not begin with {self.alphabet(n).letters[a_n]}"
                )

    def seed_compatible(self, depth: int) -> bool:
        try:
            self.check_seeds(depth)
        except SeedIncompatibilityError:
            return False
        return True


def power_block_sequence(
    sigma: Substitution,
    tau: Substitution,
    exponents: Union[Sequence[int], Callable[[int], int]],
    seeds: SeedSpec = AUTO,
) -> DirectiveSequence:
    """σ^{k_0} τ σ^{k_1} τ σ^{k_2} ⋯; a finite exponent list repeats its last value."""
    if callable(exponents):
        k_of = exponents
    else:
        ks = tuple(exponents)
        if not ks:
            raise PreconditionError("exponent list must be non-empty")
        k_of = lambda i: ks[min(i, len(ks) - 1)]  # noqa: E731
    chain: List[Substitution] = []
    blocks = [0]

    def provider(n: int) -> Substitution:
        while len(chain) <= n:
            k = k_of(blocks[0])
            if k < 0:
                raise PreconditionError(f"exponent k_{blocks[0]} is negative")
            chain.extend([sigma] * k)
            chain.append(tau)
            blocks[0] += 1
        return chain[n]

    return DirectiveSequence(
        provider,
        "generated",
        seeds=seeds,
        name=f"power-blocks({sigma.label()}, {tau.label()})",
        parts={"sigma": sigma, "tau": tau, "exponents": exponents},
    )


# ──────────────────────────────────────────────────────────────────────────────
# LIMIT WORDS
# ──────────────────────────────────────────────────────────────────────────────

def approximant(ds: DirectiveSequence, n: int, letter: Optional[str] = None, max_len: Optional[int] = None) -> FiniteWord:
    """σ_0⋯σ_{n-1}(letter), the seed a_n by default; ``max_len`` truncates level by level."""
    if n < 0:
        raise PreconditionError(f"depth must be non-negative, got {n}")
    alphabet = ds.alphabet(n)
    symbols: Tuple[int, ...] = (alphabet.index(letter) if letter is not None else ds.seed_index(n),)
    for k in range(n - 1, -1, -1):
        symbols = expand_symbols(ds.substitution(k).images, symbols, limit=max_len)
    return FiniteWord(alphabet=ds.alphabet(0), symbols=symbols)


def _reach(ds: DirectiveSequence, m: int, stall_steps: int = STALL_STEPS) -> Tuple[int, List[List[int]]]:
    """Smallest n with |σ_[0,n)(a_n)| >= m and the image-length vectors of levels 0..n.

    Stops early at the end of a finite sequence. Checks seed compatibility
    on the way down.
    """
    levels = [[1] * ds.alphabet(0).size]
    n = 0
    best_len, best_depth = 0, 0
    while True:
        a_n = ds.seed_index(n)
        current = levels[n][a_n]
        if current >= m:
            return n, levels
        if current > best_len:
            best_len, best_depth = current, n
        elif n - best_depth >= stall_steps:
            log_error(f"no growth on '{ds.name}' between depth {best_depth} and {n}", COMPONENT)
            raise StalledGrowthError(n, stall_steps)
        if not ds.available(n):
            return n, levels
        sigma = ds.substitution(n)
        a_next = ds.seed_index(n + 1)
        if sigma.images[a_next][0] != a_n:
            log_error(f"seed check failed at {n} on '{ds.name}'", COMPONENT)
            raise SeedIncompatibilityError(
                n, f"σ_{n}({ds.alphabet(n + 1).letters[a_next]}) does not begin with {ds.alphabet(n).letters[a_n]}"
            )
        levels.append([sum(levels[n][c] for c in image) for image in sigma.images])
        n += 1


def limit_word_stream(ds: DirectiveSequence, stall_steps: int = STALL_STEPS) -> WordStream:
    """Lazily generated limit word; prefix(m) is read from the first approximant of length >= m."""

    def provider(m: int) -> Tuple[int, ...]:
        depth, _ = _reach(ds, m, stall_steps)
        log_debug(f"prefix {m} of '{ds.name}' read at depth {depth}", COMPONENT)
        return approximant(ds, depth, max_len=m).symbols

    return WordStream(ds.alphabet(0), provider, name=f"limit({ds.name})")


def prefix_suffix_expansion(ds: DirectiveSequence, position: int) -> List[PrefixSuffixStep]:
    """Locate a position of the limit word through the levels of the expansion.

    Step k gives σ_k(x_{k+1}) = p_k x_k s_k; the lengths |σ_[0,k)(p_k)| add
    up to ``position``.
    """
    if position < 0:
        raise PreconditionError(f"position must be non-negative, got {position}")
    depth, levels = _reach(ds, position + 1)
    x = ds.seed_index(depth)
    if levels[depth][x] <= position:
        raise ShortStreamError(position + 1, levels[depth][x])
    offset = position
    steps: List[PrefixSuffixStep] = []
    for k in range(depth - 1, -1, -1):
        image = ds.substitution(k).images[x]
        lengths = levels[k]
        consumed = 0
        j = 0
        for j, y in enumerate(image):
            if consumed + lengths[y] > offset:
                break
            consumed += lengths[y]
        letters = ds.alphabet(k).letters
        steps.append(
            PrefixSuffixStep(
                level=k,
                prefix=tuple(letters[c] for c in image[:j]),
                letter=letters[image[j]],
                suffix=tuple(letters[c] for c in image[j + 1 :]),
            )
        )
        offset -= consumed
        x = image[j]
    steps.reverse()
    return steps


# ──────────────────────────────────────────────────────────────────────────────
# LANGUAGES, GROWTH, PRIMITIVITY
# ──────────────────────────────────────────────────────────────────────────────

_SEP = -1


class _Piece:
    """σ_[0,k)(x) kept as its full word when short, else as head, tail and inner factors."""

    __slots__ = ("length", "full", "head", "tail", "inner")

    def __init__(self, length, full, head, tail, inner):
        self.length = length
        self.full = full
        self.head = head
        self.tail = tail
        self.inner = inner


def _segment_factors(word: Sequence[int], max_len: int, out: set) -> None:
    n = len(word)
    for i in range(n):
        for ell in range(1, min(max_len, n - i) + 1):
            out.add(tuple(word[i : i + ell]))


def _skeleton_factors(skeleton: Tuple[int, ...], max_len: int, out: set) -> None:
    segment: List[int] = []
    for symbol in skeleton + (_SEP,):
        if symbol == _SEP:
            _segment_factors(segment, max_len, out)
            segment = []
        else:
            segment.append(symbol)


def _concatenate(pieces: Sequence[_Piece], max_len: int) -> _Piece:
    keep = max_len - 1
    skeleton: List[int] = []
    inner: set = set()
    for piece in pieces:
        if piece.full is not None:
            skeleton.extend(piece.full)
        else:
            skeleton.extend(piece.head)
            skeleton.append(_SEP)
            skeleton.extend(piece.tail)
            inner |= piece.inner
    frozen = tuple(skeleton)
    _skeleton_factors(frozen, max_len, inner)
    length = sum(piece.length for piece in pieces)
    if length <= 2 * keep:
        return _Piece(length, frozen, None, None, frozenset(inner))
    first = frozen.index(_SEP) if _SEP in frozen else len(frozen)
    last = len(frozen) - 1 - frozen[::-1].index(_SEP) if _SEP in frozen else -1
    head = frozen[:first][:keep]
    tail = frozen[last + 1 :][-keep:] if keep else ()
    return _Piece(length, None, head, tail, frozenset(inner))


def sadic_language(ds: DirectiveSequence, depth: int, max_len: int) -> FactorTable:
    """Factors up to ``max_len`` of the factorial closure of σ_0⋯σ_{depth-1}(A_depth*)."""
    if depth < 0 or max_len < 1:
        raise PreconditionError(f"need depth >= 0 and max_len >= 1, got depth={depth}, max_len={max_len}")
    if ds.length is not None and depth > ds.length:
        raise PreconditionError(f"'{ds.name}' has {ds.length} substitutions, depth {depth} requested")
    log_info(f"🔎 language of '{ds.name}' at depth {depth} up to length {max_len}", COMPONENT)
    pieces = [
        _Piece(1, (y,), None, None, frozenset({(y,)})) for y in range(ds.alphabet(0).size)
    ]
    for k in range(depth):
        images = ds.substitution(k).images
        pieces = [_concatenate([pieces[y] for y in image], max_len) for image in images]

    found: set = set()
    for piece in pieces:
        found |= piece.inner
    keep = max_len - 1
    seen = {()}
    stack: List[Tuple[int, ...]] = [()]
    # free concatenations: the state is the open tail of the word built so far
    while stack:
        state = stack.pop()
        for piece in pieces:
            if piece.full is not None:
                joined = state + piece.full
                following = joined[-keep:] if keep else ()
            else:
                joined = state + piece.head
                following = piece.tail
            _segment_factors(joined, max_len, found)
            if following not in seen:
                if len(seen) >= LANGUAGE_WORD_LIMIT:
                    log_error(f"language enumeration of '{ds.name}' hit {LANGUAGE_WORD_LIMIT} states", COMPONENT)
                    raise PreconditionError(
                        f"language enumeration exceeded {LANGUAGE_WORD_LIMIT} states; lower max_len or raise SADIC_LANGUAGE_WORD_LIMIT"
                    )
                seen.add(following)
                stack.append(following)

    by_length = {n: tuple(sorted(f for f in found if len(f) == n)) for n in range(1, max_len + 1)}
    return FactorTable(alphabet=ds.alphabet(0), max_length=max_len, factors_by_length=by_length, depth=depth)


def _length_levels(ds: DirectiveSequence, depth: int) -> List[List[int]]:
    """Image lengths |σ_[0,n)(x)| for x in A_n, n = 0..depth (column sums of A_n)."""
    levels = [[1] * ds.alphabet(0).size]
    for n in range(depth):
        levels.append([sum(levels[n][c] for c in image) for image in ds.substitution(n).images])
    return levels


def _clamp(ds: DirectiveSequence, depth: int) -> int:
    if depth < 0:
        raise PreconditionError(f"depth must be non-negative, got {depth}")
    return depth if ds.length is None else min(depth, ds.length)


def everywhere_growing_check(ds: DirectiveSequence, depth: int) -> GrowthProfile:
    """β_n^- = min_x |σ_[0,n)(x)| for n <= depth.

    ``growing`` is a finite-depth heuristic, not a proof: it is set when β^-
    exceeds 1 at the checked depth and still increased over the second half
    of the range. A sequence whose β^- grows only beyond ``depth`` is
    reported as not growing; ``beta_minus`` carries the evidence.
    """
    depth = _clamp(ds, depth)
    beta_minus = [min(level) for level in _length_levels(ds, depth)]
    growing = depth >= 1 and beta_minus[-1] > 1 and beta_minus[-1] > beta_minus[depth // 2]
    return GrowthProfile(growing=growing, beta_minus=beta_minus, depth=depth)


def _support(sigma: Substitution) -> np.ndarray:
    return np.asarray(incidence(sigma).entries, dtype=np.int64) > 0


def _positive_witness(ds: DirectiveSequence, n: int, r_max: int) -> Optional[int]:
    current: Optional[np.ndarray] = None
    for r in range(r_max + 1):
        if not ds.available(n + r):
            return None
        step = _support(ds.substitution(n + r))
        current = step if current is None else (current.astype(np.int64) @ step.astype(np.int64)) > 0
        if current.all():
            return r
    return None


def primitivity_check(ds: DirectiveSequence, start: int = 0, r_max: int = 16, scan: Optional[int] = None) -> DirectivePrimitivity:
    """Least r with M_n⋯M_{n+r} > 0 at n = start, and one r for every scanned n.

    Exhaustion is reported as "unknown", never as a negative answer.
    """
    if start < 0 or r_max < 0:
        raise PreconditionError("start and r_max must be non-negative")
    count = scan if scan is not None else r_max + 1
    scanned = [n for n in range(start, start + count) if ds.available(n)]
    witnesses = [_positive_witness(ds, n, r_max) for n in scanned]
    weak = witnesses[0] if witnesses else None
    strong = max(witnesses) if witnesses and all(w is not None for w in witnesses) else None
    return DirectivePrimitivity(
        start=start,
        r_max=r_max,
        weak_witness=weak,
        weak_status="witness" if weak is not None else "unknown",
        strong_witness=strong,
        strong_status="witness" if strong is not None else "unknown",
        scanned=scanned,
        witnesses=witnesses,
    )


# ──────────────────────────────────────────────────────────────────────────────
# FREQUENCIES AND CONE CONTRACTION
# ──────────────────────────────────────────────────────────────────────────────

def _cone_diameter(arr: np.ndarray):
    """Hilbert diameter of the cone spanned by the columns (mpmath, inf if not positive)."""
    rows = arr.tolist()
    if any(value <= 0 for row in rows for value in row):
        return mpmath.inf
    cols = arr.T.tolist()
    best = mpmath.mpf(0)
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            ratios = [mpmath.mpf(x) / y for x, y in zip(cols[i], cols[j])]
            best = max(best, mpmath.log(max(ratios) / min(ratios)))
    return best


def _barycenter(arr: np.ndarray) -> List[Any]:
    cols = arr.T.tolist()
    normalized = []
    for col in cols:
        total = sum(col)
        normalized.append([mpmath.mpf(x) / total for x in col])
    center = [mpmath.fsum(col[k] for col in normalized) / len(cols) for k in range(arr.shape[0])]
    total = mpmath.fsum(center)
    return [value / total for value in center]


def _refine_target():
    return mpmath.mpf(10) ** (-max(PRECISION_DIGITS - 10, 10))


def generalized_eigenvector(ds: DirectiveSequence, tol: float = TOL, n_max: int = N_MAX) -> FrequencyResult:
    """Contract the nested cones A_n R_+^d until their Hilbert diameter drops below ``tol``.

    ``f`` is the normalized barycenter of the columns at that depth. The
    contraction then continues to PRECISION_DIGITS - 10 digits (or n_max)
    to produce ``f_digits`` for the high-precision consumers.
    """
    log_info(f"📐 cone contraction on '{ds.name}' (tol={tol:g}, n_max={n_max})", COMPONENT)
    with mpmath.workdps(PRECISION_DIGITS):
        n = 0
        diameter = _cone_diameter(ds.product_array(0))
        while diameter >= tol and n < n_max and ds.available(n):
            n += 1
            diameter = _cone_diameter(ds.product_array(n))
        converged = diameter < tol
        center = _barycenter(ds.product_array(n))

        refined_depth, refined = n, diameter
        if converged:
            target = _refine_target()
            while refined >= target and refined_depth < n_max and ds.available(refined_depth):
                refined_depth += 1
                refined = _cone_diameter(ds.product_array(refined_depth))
        fine = _barycenter(ds.product_array(refined_depth)) if refined_depth != n else center
        digits = [mpmath.nstr(value, PRECISION_DIGITS - 5) for value in fine]

    if converged:
        log_info(f"📐 '{ds.name}' converged at depth {n} (diameter {float(diameter):.3g})", COMPONENT)
    else:
        log_warning(f"'{ds.name}' did not converge by depth {n} (diameter {float(diameter):.3g})", COMPONENT)
    return FrequencyResult(
        f=[float(value) for value in center],
        f_digits=digits,
        depth=n,
        diameter=float(diameter),
        converged=converged,
        letters=ds.alphabet(0).letters,
        refined_depth=refined_depth,
        refined_diameter=float(refined),
    )


FrequencyInput = Union[FrequencyResult, Sequence[float]]


def _frequency_mp(f: FrequencyInput, d: int) -> Tuple[List[Any], float]:
    """f as mpf values with its error scale; call inside a workdps block."""
    if isinstance(f, FrequencyResult):
        values = [mpmath.mpf(v) for v in f.f_digits] if f.f_digits else [mpmath.mpf(v) for v in f.f]
        if f.f_digits and f.refined_diameter is not None:
            error = max(f.refined_diameter, float(mpmath.mpf(10) ** (-(PRECISION_DIGITS - 5))))
        else:
            error = max(f.diameter, 1e-16)
    else:
        values = [mpmath.mpf(v) for v in f]
        error = 1e-16
    if len(values) != d:
        raise AlphabetMismatchError(f"frequency vector has {len(values)} entries, the alphabet has {d}")
    if any(v < 0 for v in values) or mpmath.fsum(values) == 0:
        raise PreconditionError("frequency vector must be non-negative and non-zero")
    total = mpmath.fsum(values)
    return [v / total for v in values], error


def convergence_profile(ds: DirectiveSequence, f: FrequencyInput, n: int) -> ConvergenceProfile:
    """Weak (normalized column) and strong (distance to the line R f) distances at depth n."""
    if n < 0:
        raise PreconditionError(f"depth must be non-negative, got {n}")
    arr = ds.product_array(n)
    with mpmath.workdps(PRECISION_DIGITS):
        fv, _ = _frequency_mp(f, arr.shape[0])
        norm = mpmath.sqrt(mpmath.fsum(v * v for v in fv))
        unit = [v / norm for v in fv]
        weak, strong, delta = [], [], mpmath.mpf(0)
        for col in arr.T.tolist():
            total = sum(col)
            normalized = [mpmath.mpf(x) / total for x in col]
            gaps = [w - v for w, v in zip(normalized, fv)]
            weak.append(float(mpmath.sqrt(mpmath.fsum(g * g for g in gaps))))
            delta = max([delta] + [abs(g) for g in gaps])
            c = [mpmath.mpf(x) for x in col]
            along = mpmath.fsum(ci * ui for ci, ui in zip(c, unit))
            residual = [ci - along * ui for ci, ui in zip(c, unit)]
            strong.append(float(mpmath.sqrt(mpmath.fsum(r * r for r in residual))))
        diameter = float(_cone_diameter(arr))
    return ConvergenceProfile(depth=n, weak=weak, strong=strong, diameter=diameter, delta=float(delta))


def convergence_table(ds: DirectiveSequence, f: FrequencyInput, n: int) -> pd.DataFrame:
    records = []
    for depth in range(_clamp(ds, n) + 1):
        profile = convergence_profile(ds, f, depth)
        row: Dict[str, Any] = {"depth": depth, "diameter": profile.diameter, "delta": profile.delta}
        letters = ds.alphabet(depth).letters
        row.update({f"weak_{letter}": value for letter, value in zip(letters, profile.weak)})
        row.update({f"strong_{letter}": value for letter, value in zip(letters, profile.strong)})
        records.append(row)
    return pd.DataFrame.from_records(records)


def _spectral_norm(matrix) -> Any:
    values = mpmath.svd_r(matrix, compute_uv=False)
    return max(values[i] for i in range(values.rows))


def _geometric_mean_ratio(terms: Sequence[float], indices: Sequence[int], step: int) -> Optional[float]:
    usable = set(indices)
    logs = [
        math.log(terms[i + step] / terms[i])
        for i in indices
        if i + step in usable and terms[i] > 0 and terms[i + step] > 0
    ]
    if not logs:
        return None
    return math.exp(sum(logs) / len(logs))


def balance_criterion_partial_sums(ds: DirectiveSequence, f: FrequencyInput, N: int) -> CriterionReport:
    """Partial sums of ‖ᵗA_n restricted to f⊥‖·‖M_n‖ (Euclidean operator norms), n < N.

    ‖ᵗA_n|f⊥‖ is computed as ‖P A_n‖ with P the orthogonal projection onto
    f⊥. Terms within a factor 10 of (error in f)·‖A_n‖ are precision-limited
    and left out of the tail ratios.
    """
    if isinstance(f, FrequencyResult) and not f.converged:
        log_error(f"criterion requested with an unconverged frequency vector on '{ds.name}'", COMPONENT)
        raise NotConvergedError(
            f"frequency vector did not converge (diameter {f.diameter:.3g} at depth {f.depth}); "
            "rerun generalized_eigenvector with a larger n_max or a looser tol"
        )
    if N < 1:
        raise PreconditionError(f"N must be >= 1, got {N}")
    N = _clamp(ds, N)
    d = ds.alphabet(0).size
    terms: List[float] = []
    flagged: List[int] = []
    with mpmath.workdps(PRECISION_DIGITS):
        fv, error = _frequency_mp(f, d)
        norm = mpmath.sqrt(mpmath.fsum(v * v for v in fv))
        unit = mpmath.matrix([v / norm for v in fv])
        projection = mpmath.eye(d) - unit * unit.T
        for n in range(N):
            a_n = mpmath.matrix(ds.product_array(n).tolist())
            restricted = _spectral_norm(projection * a_n)
            m_norm = float(np.linalg.norm(np.asarray(incidence(ds.substitution(n)).entries, dtype=float), 2))
            terms.append(float(restricted) * m_norm)
            if restricted <= 10 * error * _spectral_norm(a_n):
                flagged.append(n)
    partial = np.cumsum(terms).tolist()
    reliable = [n for n in range(N) if n not in flagged]
    tail = [n for n in reliable if n >= N // 2]
    ratio = _geometric_mean_ratio(terms, tail, 1)
    two_step = _geometric_mean_ratio(terms, tail, 2)
    if flagged:
        log_warning(f"{len(flagged)} criterion terms of '{ds.name}' are precision-limited", COMPONENT)
    if ratio is not None and ratio < 1:
        verdict = f"criterion satisfied up to N={N} with decaying terms (ratio {ratio:.4g})"
    else:
        verdict = f"no decay of the terms observed up to N={N}"
    return CriterionReport(
        terms=terms,
        partial_sums=partial,
        tail_ratio=ratio,
        two_step_ratio=two_step,
        precision_limited=flagged,
        verdict=verdict,
    )


# ──────────────────────────────────────────────────────────────────────────────
# ENTROPY
# ──────────────────────────────────────────────────────────────────────────────

def entropy_upper_bound(ds: DirectiveSequence, N: int, length: Optional[int] = None) -> EntropyBound:
    """min over n <= N of log Card A_n / β_n^-.

    With ``length``, also min over n of [log β_n^+ + (length/β_n^- + 2) log Card A_n] / length,
    an upper bound for log p(length)/length.
    """
    N = _clamp(ds, N)
    levels = _length_levels(ds, N)
    sizes = [ds.alphabet(n).size for n in range(N + 1)]
    profile = [math.log(size) / min(level) for size, level in zip(sizes, levels)]
    depth = int(np.argmin(profile))
    finite_bound, finite_depth = None, None
    if length is not None:
        if length < 1:
            raise PreconditionError(f"length must be >= 1, got {length}")
        candidates = [
            (math.log(max(level)) + (length / min(level) + 2) * math.log(size)) / length
            for size, level in zip(sizes, levels)
        ]
        finite_depth = int(np.argmin(candidates))
        finite_bound = candidates[finite_depth]
    return EntropyBound(
        bound=profile[depth],
        depth=depth,
        profile=profile,
        length=length,
        finite_length_bound=finite_bound,
        finite_length_depth=finite_depth,
    )


# ──────────────────────────────────────────────────────────────────────────────
# UNIVERSAL EXPANSION
# ──────────────────────────────────────────────────────────────────────────────

def cassaigne_expansion(w: FiniteWord) -> DirectiveSequence:
    """Expansion of any finite word over A ∪ {ℓ}.

    σ_a fixes A and sends ℓ to ℓa; the first substitution sends ℓ to u_0.
    σ_0 σ_{u_1} ⋯ σ_{u_{n-1}}(ℓ) = u_0 u_1 ⋯ u_{n-1}.
    """
    if not len(w):
        raise PreconditionError("the universal expansion needs a non-empty word")
    base_letters = w.alphabet.letters
    if SPECIAL_LETTER in base_letters:
        raise PreconditionError(f"letter '{SPECIAL_LETTER}' is reserved for the universal expansion")
    alphabet = Alphabet(letters=base_letters + (SPECIAL_LETTER,))
    special = alphabet.size - 1
    fixed = tuple((b,) for b in range(special))

    sigmas = {
        a: Substitution(name=f"sigma_{letter}", domain=alphabet, codomain=alphabet, images=fixed + ((special, a),))
        for a, letter in enumerate(base_letters)
    }
    first = w.symbols[0]
    tau = Substitution(name=f"tau_{SPECIAL_LETTER}", domain=alphabet, codomain=alphabet, images=fixed + ((first,),))
    chain = [tau] + [sigmas[a] for a in w.symbols[1:]]
    seeds = [base_letters[first]] + [SPECIAL_LETTER] * len(w)
    return DirectiveSequence.explicit(chain, tail="halt", seeds=seeds, name=f"universal({len(w)} letters)")
