"""
substitution.py
────────────────────────────────────────────────────────────────────────────────
Substitutions as non-erasing free-monoid morphisms: application, composition,
incidence matrices, positivity and primitivity, fixed points, Perron data,
the prefix-suffix automaton and growth bounds of composed chains.

Matrix products are exact (numpy object arrays of Python ints).
"""

from itertools import chain as _chain, islice
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from base import (
    Alphabet,
    FiniteWord,
    GrowthBounds,
    IncidenceMatrix,
    PerronData,
    PrefixSuffixAutomaton,
    PrefixSuffixEdge,
    PrimitivityResult,
    Substitution,
)
from config import N_MAX, TOL
from errors import AlphabetMismatchError, NotPrimitiveError, PreconditionError
from logger_utils import log_debug, log_error, log_info
from words import WordStream

COMPONENT = "substitution"


# ──────────────────────────────────────────────────────────────────────────────
# CONSTRUCTION AND APPLICATION
# ──────────────────────────────────────────────────────────────────────────────

def _split(image: Union[str, Sequence[str]]) -> List[str]:
    if isinstance(image, str):
        return image.split() if any(ch.isspace() for ch in image) else list(image)
    return list(image)


def substitution_from_rules(
    name: Optional[str],
    rules: Dict[str, Union[str, Sequence[str]]],
    domain: Optional[Sequence[str]] = None,
    codomain: Optional[Sequence[str]] = None,
) -> Substitution:
    """Build a substitution from ``{letter: image}``.

    Without an explicit codomain the codomain is the domain extended by any
    new image letters in order of appearance.
    """
    dom = Alphabet(letters=tuple(domain) if domain else tuple(rules))
    images = {letter: _split(rules[letter]) for letter in dom.letters if letter in rules}
    missing = [letter for letter in dom.letters if letter not in images]
    if missing:
        raise PreconditionError(f"no image given for {missing}")
    if codomain:
        cod = Alphabet(letters=tuple(codomain))
    else:
        letters = list(dom.letters)
        for image in images.values():
            letters.extend(letter for letter in image if letter not in letters)
        cod = Alphabet(letters=tuple(letters))
    return Substitution(
        name=name,
        domain=dom,
        codomain=cod,
        images=tuple(cod.encode(images[letter]) for letter in dom.letters),
    )


def expand_symbols(images: Sequence[Tuple[int, ...]], symbols: Sequence[int], limit: Optional[int] = None) -> Tuple[int, ...]:
    """Concatenate images of ``symbols``; with ``limit`` only the first ``limit`` letters are produced."""
    stream = _chain.from_iterable(map(images.__getitem__, symbols))
    if limit is None:
        return tuple(stream)
    return tuple(islice(stream, limit))


def apply(s: Substitution, w: FiniteWord) -> FiniteWord:
    if w.alphabet != s.domain:
        raise AlphabetMismatchError(f"word alphabet {list(w.alphabet.letters)} is not the domain of {s.label()}")
    return FiniteWord(alphabet=s.codomain, symbols=expand_symbols(s.images, w.symbols))


def compose(s: Substitution, t: Substitution) -> Substitution:
    """s∘t: a ↦ s(t(a))."""
    if t.codomain != s.domain:
        raise AlphabetMismatchError(f"cannot compose {s.label()} after {t.label()}: alphabets differ")
    name = f"{s.name}*{t.name}" if s.name and t.name else None
    return Substitution(
        name=name,
        domain=t.domain,
        codomain=s.codomain,
        images=tuple(expand_symbols(s.images, image) for image in t.images),
    )


def power(s: Substitution, k: int) -> Substitution:
    if not s.is_square:
        raise AlphabetMismatchError("powers need domain = codomain")
    if k < 0:
        raise PreconditionError("power must be non-negative")
    result = identity(s.domain)
    for _ in range(k):
        result = compose(s, result)
    return result.model_copy(update={"name": f"{s.name}^{k}" if s.name else None})


def identity(alphabet: Alphabet) -> Substitution:
    return Substitution(name="identity", domain=alphabet, codomain=alphabet, images=tuple((i,) for i in range(alphabet.size)))


# ──────────────────────────────────────────────────────────────────────────────
# INCIDENCE MATRICES
# ──────────────────────────────────────────────────────────────────────────────

def incidence(s: Substitution) -> IncidenceMatrix:
    rows = [[0] * s.domain.size for _ in range(s.codomain.size)]
    for j, image in enumerate(s.images):
        for letter in image:
            rows[letter][j] += 1
    return IncidenceMatrix.from_rows(rows)


def exact_array(m: IncidenceMatrix) -> np.ndarray:
    arr = np.empty((m.rows, m.cols), dtype=object)
    for i, row in enumerate(m.entries):
        for j, value in enumerate(row):
            arr[i, j] = int(value)
    return arr


def matrix_product(a: IncidenceMatrix, b: IncidenceMatrix) -> IncidenceMatrix:
    if a.cols != b.rows:
        raise AlphabetMismatchError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    return IncidenceMatrix.from_rows(exact_array(a).dot(exact_array(b)).tolist())


def _support(m: IncidenceMatrix) -> np.ndarray:
    return np.asarray(m.entries, dtype=np.int64) > 0


def _primitive_witness(support: np.ndarray, k_max: int) -> Optional[int]:
    current = support.copy()
    for k in range(1, k_max + 1):
        if current.all():
            return k
        current = (current.astype(np.int64) @ support.astype(np.int64)) > 0
    return None


def wielandt_bound(d: int) -> int:
    return (d - 1) ** 2 + 1


def is_positive(s: Substitution) -> bool:
    return incidence(s).is_positive()


def matrix_primitivity(m: IncidenceMatrix, k_max: Optional[int] = None) -> PrimitivityResult:
    if m.rows != m.cols:
        raise AlphabetMismatchError("primitivity needs a square matrix")
    bound = k_max if k_max is not None else wielandt_bound(m.rows)
    witness = _primitive_witness(_support(m), bound)
    return PrimitivityResult(primitive=witness is not None, witness=witness, k_max=bound)


def is_primitive(s: Substitution, k_max: Optional[int] = None) -> PrimitivityResult:
    """Exact decision: with the default Wielandt bound, exhaustion proves non-primitivity."""
    if not s.is_square:
        raise AlphabetMismatchError(f"{s.label()} is not an endomorphism")
    return matrix_primitivity(incidence(s), k_max)


def is_left_proper(s: Substitution) -> bool:
    return len({image[0] for image in s.images}) == 1


def is_right_proper(s: Substitution) -> bool:
    return len({image[-1] for image in s.images}) == 1


def is_proper(s: Substitution) -> bool:
    """Some power of s is both left and right proper."""
    if not s.is_square:
        raise AlphabetMismatchError(f"{s.label()} is not an endomorphism")
    d = s.domain.size
    first = [image[0] for image in s.images]
    last = [image[-1] for image in s.images]
    left, right = list(range(d)), list(range(d))
    for _ in range(d):
        left = [first[b] for b in left]
        right = [last[b] for b in right]
    return len(set(left)) == 1 and len(set(right)) == 1


# ──────────────────────────────────────────────────────────────────────────────
# FIXED POINTS AND PERRON DATA
# ──────────────────────────────────────────────────────────────────────────────

def fixed_point_stream(s: Substitution, letter: str, check_depth: int = 32) -> WordStream:
    if not s.is_square:
        raise AlphabetMismatchError(f"{s.label()} is not an endomorphism")
    a = s.domain.index(letter)
    image = s.images[a]
    if image[0] != a:
        log_error(f"{s.label()}({letter}) does not begin with {letter}", COMPONENT)
        raise PreconditionError(f"image of '{letter}' does not begin with '{letter}'")
    if len(image) < 2:
        raise PreconditionError(f"image of '{letter}' has length 1, the iterates do not grow")
    lengths = [1] * s.domain.size
    previous = 1
    for depth in range(1, check_depth + 1):
        lengths = [sum(lengths[c] for c in img) for img in s.images]
        if lengths[a] <= previous:
            raise PreconditionError(f"|{s.label()}^{depth}({letter})| stopped growing")
        previous = lengths[a]

    def provider(n: int) -> Tuple[int, ...]:
        word: Tuple[int, ...] = (a,)
        while len(word) < n:
            word = expand_symbols(s.images, word, limit=n)
        return word

    return WordStream(s.codomain, provider, name=f"{s.name or 'fixed-point'}^inf({letter})")


def hilbert_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """Hilbert projective distance between positive vectors; inf when supports differ."""
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if (xa <= 0).any() or (ya <= 0).any():
        return float("inf")
    ratio = xa / ya
    return float(np.log(ratio.max() / ratio.min()))


def _normalized(v: Sequence[int]) -> List[float]:
    total = sum(v)
    return [int(x) / total for x in v]


def perron(m: IncidenceMatrix, tol: float = TOL, max_iter: int = N_MAX) -> PerronData:
    """Power iteration on exact integer vectors M^k·1, normalized in floating point per step."""
    if m.rows != m.cols:
        raise AlphabetMismatchError("Perron data needs a square matrix")
    if not matrix_primitivity(m).primitive:
        log_error("Perron data requested for a non-primitive matrix", COMPONENT)
        raise NotPrimitiveError("matrix is not primitive; Perron positivity is not guaranteed")
    arr = exact_array(m)
    v = np.array([1] * m.rows, dtype=object)
    current = _normalized(v)
    distance = float("inf")
    iterations = 0
    for iterations in range(1, max_iter + 1):
        v = arr.dot(v)
        following = _normalized(v)
        distance = hilbert_distance(current, following)
        current = following
        if distance < tol:
            break
    else:
        log_info(f"power iteration stopped at {max_iter} with distance {distance:.3g}", COMPONENT)
    w = np.asarray(current)
    mw = np.asarray(m.entries, dtype=float) @ w
    eigenvalue = float(mw.sum())
    residual = float(np.abs(mw - eigenvalue * w).sum())
    log_debug(f"Perron eigenvalue {eigenvalue:.12g} after {iterations} steps", COMPONENT)
    return PerronData(
        eigenvalue=eigenvalue,
        right_eigenvector=w.tolist(),
        residual=residual,
        iterations=iterations,
        distance=distance,
    )


# ──────────────────────────────────────────────────────────────────────────────
# PREFIX-SUFFIX AUTOMATON AND GROWTH
# ──────────────────────────────────────────────────────────────────────────────

def prefix_suffix_automaton(s: Substitution) -> PrefixSuffixAutomaton:
    letters = s.codomain.letters
    edges = []
    for b, image in zip(s.domain.letters, s.images):
        for k, a in enumerate(image):
            edges.append(
                PrefixSuffixEdge(
                    source=b,
                    target=letters[a],
                    prefix=tuple(letters[c] for c in image[:k]),
                    suffix=tuple(letters[c] for c in image[k + 1 :]),
                )
            )
    return PrefixSuffixAutomaton(states=letters, edges=tuple(edges))


def image_lengths(chain: Sequence[Substitution], n: int) -> List[int]:
    """|σ_0⋯σ_{n-1}(x)| for every letter x of the domain of σ_{n-1} (column sums of the product)."""
    if n > len(chain):
        raise PreconditionError(f"chain has {len(chain)} substitutions, depth {n} requested")
    if n == 0:
        return [1] * (chain[0].codomain.size if chain else 1)
    lengths = [1] * chain[0].codomain.size
    for k in range(n):
        sigma = chain[k]
        if k and chain[k - 1].domain != sigma.codomain:
            raise AlphabetMismatchError(f"chain is not composable at index {k}")
        lengths = [sum(lengths[c] for c in image) for image in sigma.images]
    return lengths


def growth_bounds(chain: Sequence[Substitution], n: int) -> GrowthBounds:
    lengths = image_lengths(chain, n)
    return GrowthBounds(n=n, beta_minus=min(lengths), beta_plus=max(lengths))
