"""
cf.py
────────────────────────────────────────────────────────────────────────────────
Multidimensional continued-fraction maps F(x) = M_i⁻¹ x and the directive
sequences their matrix records define.

Built-in maps: additive Sturmian (τ_a, τ_b), additive Arnoux-Rauzy (μ_1..μ_d),
Jacobi-Perron in its linear integer form. Generic maps come from a branch set
or an S-adic graph. Rational inputs are expanded exactly with Fraction;
anything else runs in mpmath at PRECISION_DIGITS.

Ties and zero coordinates halt the expansion instead of picking a branch.
"""

from fractions import Fraction
from functools import lru_cache
from itertools import groupby
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import sympy

from base import CFExpansion, SAdicGraph, Substitution
from config import PRECISION_DIGITS
from errors import ConeError, NonInvertibleError, PreconditionError, UnknownNameError
from library import arnoux_rauzy, get_substitution, jacobi_perron
from logger_utils import log_debug, log_error, log_info
from sadic import AUTO, DirectiveSequence, SeedSpec
from substitution import incidence, power

COMPONENT = "cf"

Branch = Tuple[str, Substitution, Any]
Selector = Callable[[Tuple[Any, ...], Any], Union[Branch, str]]


# ──────────────────────────────────────────────────────────────────────────────
# MAPS
# ──────────────────────────────────────────────────────────────────────────────

class CFMap:
    """A continued-fraction map given by its branch selector.

    ``selector(x, state)`` returns ``(symbol, substitution, next_state)`` for
    the branch whose inverse matrix keeps x non-negative, or a string
    naming the reason to halt. ``validate(x)`` may reject inputs outside
    the domain of the map.
    """

    def __init__(
        self,
        name: str,
        dimension: int,
        selector: Selector,
        state: Any = None,
        validate: Optional[Callable[[Tuple[Any, ...]], None]] = None,
    ):
        self.name = name
        self.dimension = dimension
        self.selector = selector
        self.state = state
        self.validate = validate

    @classmethod
    def from_branches(cls, name: str, substitutions: Dict[str, Substitution]) -> "CFMap":
        """Pick the unique branch whose inverse keeps the vector non-negative."""
        branches = dict(substitutions)
        if not branches:
            raise PreconditionError("a continued-fraction map needs at least one branch")
        dims = {sub.domain.size for sub in branches.values()}
        if len(dims) != 1 or any(not sub.is_square for sub in branches.values()):
            raise PreconditionError("branches must be endomorphisms of one alphabet")
        for symbol, sub in branches.items():
            _inverse(incidence(sub).entries)

        def selector(x, state):
            return _unique_branch(x, [(symbol, sub, None) for symbol, sub in branches.items()])

        return cls(name, dims.pop(), selector)

    @classmethod
    def from_graph(cls, graph: SAdicGraph, start_vertex: str) -> "CFMap":
        """Branches are the outgoing edges of the current vertex; the state is that vertex."""
        if start_vertex not in graph.vertices:
            raise UnknownNameError("vertex", start_vertex, graph.vertices)
        for edge in graph.edges:
            _inverse(incidence(edge.substitution).entries)

        def selector(x, vertex):
            options = [(edge.id, edge.substitution, edge.target) for edge in graph.edges if edge.source == vertex]
            if not options:
                return f"no edge leaves vertex {vertex}"
            return _unique_branch(x, options)

        return cls(f"graph({graph.name})", graph.alphabet.size, selector, state=start_vertex)


@lru_cache(maxsize=1024)
def _inverse(entries: Tuple[Tuple[int, ...], ...]) -> Tuple[Tuple[Fraction, ...], ...]:
    matrix = sympy.Matrix(entries)
    if matrix.det() == 0:
        log_error(f"singular branch matrix {entries}", COMPONENT)
        raise NonInvertibleError(f"matrix {[list(row) for row in entries]} is not invertible over the rationals")
    inverse = matrix.inv()
    return tuple(
        tuple(Fraction(int(v.p), int(v.q)) for v in inverse.row(i)) for i in range(matrix.rows)
    )


def _apply_inverse(entries: Tuple[Tuple[int, ...], ...], x: Tuple[Any, ...], exact: bool) -> Tuple[Any, ...]:
    inverse = _inverse(entries)
    if exact:
        return tuple(sum((c * v for c, v in zip(row, x)), Fraction(0)) for row in inverse)
    return tuple(
        mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * v for c, v in zip(row, x)) for row in inverse
    )


def _unique_branch(x: Tuple[Any, ...], options: Sequence[Branch]) -> Union[Branch, str]:
    exact = all(isinstance(v, Fraction) for v in x)
    fitting = [
        option for option in options
        if all(v >= 0 for v in _apply_inverse(incidence(option[1]).entries, x, exact))
    ]
    if not fitting:
        return "no branch keeps the vector non-negative"
    if len(fitting) > 1:
        return f"branches {[option[0] for option in fitting]} all apply"
    return fitting[0]


def _zero_coordinate(x: Tuple[Any, ...]) -> bool:
    return any(v == 0 for v in x)


def sturmian_map() -> CFMap:
    """Additive map on (x_a, x_b): τ_a when x_a > x_b, τ_b when x_b > x_a."""
    tau_a, tau_b = get_substitution("tau_a"), get_substitution("tau_b")

    def selector(x, state):
        if _zero_coordinate(x):
            return "zero coordinate"
        if x[0] > x[1]:
            return ("a", tau_a, None)
        if x[1] > x[0]:
            return ("b", tau_b, None)
        return "tie"

    return CFMap("sturmian", 2, selector)


def arnoux_rauzy_map(d: int = 3) -> CFMap:
    """μ_i when x_i > Σ_{j≠i} x_j; otherwise the vector is outside the gasket and the map halts."""
    if d < 2:
        raise PreconditionError(f"Arnoux-Rauzy maps need d >= 2, got {d}")
    branches = [arnoux_rauzy(i, d) for i in range(1, d + 1)]

    def selector(x, state):
        if _zero_coordinate(x):
            return "zero coordinate"
        total = sum(x)
        for i, value in enumerate(x):
            if value > total - value:
                return (str(i + 1), branches[i], None)
        return "not in the Rauzy gasket"

    return CFMap(f"arnoux-rauzy-{d}", d, selector)


def _jacobi_perron_cone(x: Tuple[Any, ...]) -> None:
    a, b, c = x
    if a < 0 or b < 0:
        raise ConeError("0 <= a, b")
    if not a < c:
        raise ConeError("a < c")
    if not b < c:
        raise ConeError("b < c")


def jacobi_perron_map() -> CFMap:
    """(a, b, c) ↦ (b − B a, c − C a, a) with B = ⌊b/a⌋, C = ⌊c/a⌋, on the cone 0 < a, b < c."""

    def selector(x, state):
        a, b, c = x
        if a == 0:
            return "zero coordinate"
        if isinstance(a, Fraction):
            big_b, big_c = int(b // a), int(c // a)
        else:
            big_b, big_c = int(mpmath.floor(b / a)), int(mpmath.floor(c / a))
        return (f"{big_b},{big_c}", jacobi_perron(big_b, big_c), None)

    return CFMap("jacobi-perron", 3, selector, validate=_jacobi_perron_cone)


def get_map(name: str, d: int = 3) -> CFMap:
    if name == "sturmian":
        return sturmian_map()
    if name == "arnoux-rauzy":
        return arnoux_rauzy_map(d)
    if name == "jacobi-perron":
        return jacobi_perron_map()
    raise UnknownNameError("algorithm", name, ["sturmian", "arnoux-rauzy", "jacobi-perron"])


# ──────────────────────────────────────────────────────────────────────────────
# EXPANSIONS
# ──────────────────────────────────────────────────────────────────────────────

def parse_vector(text: str) -> Tuple[Any, ...]:
    """Comma-separated entries; integers and p/q tokens stay exact, decimals become mpf."""
    tokens = [token.strip() for token in text.split(",") if token.strip()]
    if not tokens:
        raise PreconditionError("empty vector")
    try:
        if all("." not in t and "e" not in t.lower() for t in tokens):
            return tuple(Fraction(t) for t in tokens)
        with mpmath.workdps(PRECISION_DIGITS):
            return tuple(mpmath.mpf(t) for t in tokens)
    except (ValueError, ZeroDivisionError):
        raise PreconditionError(f"cannot parse vector '{text}'") from None


def _normalize_input(x: Sequence[Any]) -> Tuple[Tuple[Any, ...], bool]:
    if all(isinstance(v, (int, Fraction)) for v in x):
        return tuple(Fraction(v) for v in x), True
    return tuple(mpmath.mpf(v) for v in x), False


def cf_expand(cf_map: CFMap, x: Sequence[Any], n: int) -> CFExpansion:
    """At most n steps of F; x = M_{i_0}⋯M_{i_{k-1}} F^k(x) at every k."""
    if n < 0:
        raise PreconditionError(f"step count must be non-negative, got {n}")
    with mpmath.workdps(PRECISION_DIGITS):
        vector, exact = _normalize_input(x)
        if len(vector) != cf_map.dimension:
            raise PreconditionError(f"{cf_map.name} works on {cf_map.dimension}-vectors, got {len(vector)} entries")
        if any(v < 0 for v in vector) or all(v == 0 for v in vector):
            log_error(f"bad input vector for {cf_map.name}", COMPONENT)
            raise PreconditionError("input vector must be non-negative and non-zero")
        if cf_map.validate is not None:
            cf_map.validate(vector)
        floor = 0 if exact else mpmath.mpf(10) ** (5 - PRECISION_DIGITS) * max(vector)

        symbols: List[str] = []
        matrices: List[Tuple[Tuple[int, ...], ...]] = []
        subs: List[Substitution] = []
        remainders = [vector]
        state = cf_map.state
        halt: Optional[str] = None
        current = vector
        for _ in range(n):
            if not exact:
                # below the working precision a coordinate counts as zero
                current = tuple(v if v > floor else mpmath.mpf(0) for v in current)
            choice = cf_map.selector(current, state)
            if isinstance(choice, str):
                halt = choice
                break
            symbol, sub, state = choice
            entries = incidence(sub).entries
            following = _apply_inverse(entries, current, exact)
            if any(v < 0 for v in following):
                log_error(f"{cf_map.name} chose branch {symbol} with a negative remainder", COMPONENT)
                raise PreconditionError(f"branch {symbol} of {cf_map.name} leaves the non-negative cone")
            symbols.append(symbol)
            matrices.append(entries)
            subs.append(sub)
            remainders.append(following)
            current = following
    log_debug(f"{cf_map.name}: {len(symbols)} steps, halt={halt}", COMPONENT)
    return CFExpansion(
        algorithm=cf_map.name,
        x=vector,
        symbols=tuple(symbols),
        matrices=tuple(matrices),
        substitutions=tuple(subs),
        remainders=tuple(remainders),
        exact=exact,
        halt_reason=halt,
    )


def reconstruct(expansion: CFExpansion, k: Optional[int] = None) -> Tuple[Any, ...]:
    """M_{i_0}⋯M_{i_{k-1}} F^k(x); equals x exactly in rational mode."""
    k = expansion.steps if k is None else k
    vector = expansion.remainders[k]
    for entries in reversed(expansion.matrices[:k]):
        vector = tuple(sum((m * v for m, v in zip(row, vector)), type(vector[0])(0)) for row in entries)
    return vector


def accelerate(expansion: CFExpansion) -> CFExpansion:
    """Group runs of equal consecutive symbols into single steps with the matrix power."""
    symbols, matrices, subs, remainders = [], [], [], [expansion.remainders[0]]
    position = 0
    for symbol, run in groupby(range(expansion.steps), key=lambda k: expansion.symbols[k]):
        count = len(list(run))
        position += count
        sub = power(expansion.substitutions[position - 1], count)
        symbols.append(f"{symbol}^{count}")
        matrices.append(incidence(sub).entries)
        subs.append(sub)
        remainders.append(expansion.remainders[position])
    return expansion.model_copy(
        update={
            "algorithm": f"{expansion.algorithm}+accelerated",
            "symbols": tuple(symbols),
            "matrices": tuple(matrices),
            "substitutions": tuple(subs),
            "remainders": tuple(remainders),
        }
    )


def run_lengths(symbols: Sequence[str]) -> List[int]:
    return [len(list(run)) for _, run in groupby(symbols)]


def directive_from_expansion(expansion: CFExpansion, seeds: SeedSpec = AUTO) -> DirectiveSequence:
    """Finite directive sequence of the attached substitutions; no periodic extension is guessed."""
    if not expansion.steps:
        raise PreconditionError(f"expansion halted before the first step ({expansion.halt_reason})")
    log_info(f"directive sequence from {expansion.steps} steps of {expansion.algorithm}", COMPONENT)
    return DirectiveSequence.explicit(
        expansion.substitutions, tail="halt", seeds=seeds, name=f"{expansion.algorithm}-expansion"
    )
