"""
words.py
────────────────────────────────────────────────────────────────────────────────
Finite words, lazily generated infinite words and the combinatorial metrics
read off a prefix window:

  • factors / complexity / entropy_estimate
  • recurrence_function (with longest return word R'(n))
  • return_words / derived_word
  • balance / discrepancy, letter frequencies, abelianization

Every language-level quantity is computed on an explicit prefix window and
reports the window it used.
"""

import math
import threading
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from base import (
    Alphabet,
    BalanceReport,
    ComplexityProfile,
    EntropyEstimate,
    FactorTable,
    FiniteWord,
    RecurrenceProfile,
    Substitution,
)
from errors import (
    AlphabetMismatchError,
    InsufficientOccurrencesError,
    NonRecurrentWindowError,
    PreconditionError,
    SAdicError,
    ShortStreamError,
)
from logger_utils import log_debug, log_error, log_info

COMPONENT = "word-core"


# ──────────────────────────────────────────────────────────────────────────────
# WORD STREAMS
# ──────────────────────────────────────────────────────────────────────────────

class WordStream:
    """A possibly infinite word given by a prefix provider.

    ``provider(n)`` returns a sequence of letter indices of length at least
    ``n``; a shorter answer means the word is finite and has ended. The
    largest prefix produced so far is cached and every new answer must
    extend it.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        provider: Callable[[int], Sequence[int]],
        length: Optional[int] = None,
        name: str = "stream",
    ):
        self.alphabet = alphabet
        self.name = name
        self._provider = provider
        self._length = length
        self._cache: Tuple[int, ...] = ()
        self._lock = threading.Lock()

    @classmethod
    def from_symbols(cls, alphabet: Alphabet, symbols: Sequence[int], name: str = "word") -> "WordStream":
        frozen = tuple(symbols)
        return cls(alphabet, lambda n: frozen, length=len(frozen), name=name)

    @classmethod
    def from_word(cls, word: FiniteWord, name: str = "word") -> "WordStream":
        return cls.from_symbols(word.alphabet, word.symbols, name=name)

    @classmethod
    def periodic(cls, alphabet: Alphabet, pattern: Sequence[int], name: str = "periodic") -> "WordStream":
        period = tuple(pattern)
        if not period:
            raise PreconditionError("periodic pattern must be non-empty")

        def provider(n: int) -> Tuple[int, ...]:
            reps = -(-n // len(period))
            return (period * reps)[:n]

        return cls(alphabet, provider, name=name)

    @property
    def is_finite(self) -> bool:
        return self._length is not None

    @property
    def length(self) -> Optional[int]:
        return self._length

    def symbols(self, n: int) -> Tuple[int, ...]:
        if n < 0:
            raise PreconditionError(f"prefix length must be non-negative, got {n}")
        with self._lock:
            exhausted = self._length is not None and len(self._cache) >= self._length
            if len(self._cache) < n and not exhausted:
                produced = tuple(self._provider(n))
                if produced[: len(self._cache)] != self._cache:
                    raise SAdicError(f"stream '{self.name}' produced inconsistent prefixes")
                if len(produced) < n:
                    self._length = len(produced)
                if len(produced) > len(self._cache):
                    self._cache = produced
            cache = self._cache
        if len(cache) < n:
            log_error(f"short stream '{self.name}': {len(cache)} < {n}", COMPONENT)
            raise ShortStreamError(n, len(cache))
        return cache[:n]

    def prefix(self, n: int) -> FiniteWord:
        return FiniteWord(alphabet=self.alphabet, symbols=self.symbols(n))

    def text(self, n: int) -> str:
        return self.alphabet.decode(self.symbols(n))


def power_concatenation_stream() -> WordStream:
    """The word 0 1 00 11 000 111 ... whose complexity is n(n+1)/2 + 1."""
    alphabet = Alphabet(letters=("0", "1"))

    def provider(n: int) -> List[int]:
        out: List[int] = []
        k = 1
        while len(out) < n:
            out.extend([0] * k)
            out.extend([1] * k)
            k += 1
        return out

    return WordStream(alphabet, provider, name="power-concatenation")


def parse_word(text: str, alphabet: Optional[Alphabet] = None) -> FiniteWord:
    """Letters are characters, or whitespace-separated tokens when whitespace is present."""
    stripped = text.strip()
    tokens = stripped.split() if any(ch.isspace() for ch in stripped) else list(stripped)
    if alphabet is None:
        if not tokens:
            raise PreconditionError("cannot infer an alphabet from an empty word")
        alphabet = Alphabet(letters=tuple(sorted(set(tokens))))
    return FiniteWord(alphabet=alphabet, symbols=alphabet.encode(tokens))


def abelianize(w: FiniteWord) -> List[int]:
    counts = np.bincount(np.asarray(w.symbols, dtype=np.int64), minlength=w.alphabet.size)
    return [int(c) for c in counts]


# ──────────────────────────────────────────────────────────────────────────────
# PRIVATE HELPERS
# ──────────────────────────────────────────────────────────────────────────────

def _check_window(prefix_len: int, max_n: int) -> None:
    if not (prefix_len >= max_n >= 1):
        log_error(f"bad window prefix_len={prefix_len} max_n={max_n}", COMPONENT)
        raise PreconditionError(f"need prefix_len >= max_n >= 1, got prefix_len={prefix_len}, max_n={max_n}")


def _suffix_array(arr: np.ndarray) -> np.ndarray:
    """Prefix doubling on numpy ranks."""
    n = len(arr)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rank = arr.astype(np.int64)
    k = 1
    while True:
        second = np.full(n, -1, dtype=np.int64)
        if k < n:
            second[: n - k] = rank[k:]
        sa = np.lexsort((second, rank))
        r1, r2 = rank[sa], second[sa]
        boundary = np.empty(n, dtype=bool)
        boundary[0] = True
        boundary[1:] = (r1[1:] != r1[:-1]) | (r2[1:] != r2[:-1])
        new_rank = np.empty(n, dtype=np.int64)
        new_rank[sa] = np.cumsum(boundary) - 1
        rank = new_rank
        if boundary.all():
            return sa
        k *= 2


def _lcp_array(symbols: Sequence[int], sa: np.ndarray) -> np.ndarray:
    """Kasai: lcp[r] = common prefix length of suffixes sa[r-1] and sa[r]; lcp[0] = 0."""
    n = len(symbols)
    sa_list = sa.tolist()
    rank = [0] * n
    for r, i in enumerate(sa_list):
        rank[i] = r
    lcp = [0] * n
    h = 0
    for i in range(n):
        r = rank[i]
        if r == 0:
            h = 0
            continue
        j = sa_list[r - 1]
        while i + h < n and j + h < n and symbols[i + h] == symbols[j + h]:
            h += 1
        lcp[r] = h
        if h:
            h -= 1
    return np.asarray(lcp, dtype=np.int64)


class _SuffixIndex:
    """Suffix array of a window; groups equal length-n factors into contiguous blocks."""

    def __init__(self, symbols: Tuple[int, ...]):
        self.symbols = symbols
        self.length = len(symbols)
        arr = np.asarray(symbols, dtype=np.int64)
        self.sa = _suffix_array(arr)
        self.lcp = _lcp_array(symbols, self.sa)
        self.suffix_len = self.length - self.sa

    def factor_starts(self, n: int) -> np.ndarray:
        """One start position per distinct length-n factor, in lexicographic order."""
        keep = (self.lcp < n) & (self.suffix_len >= n)
        return self.sa[keep]

    def blocks(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """(block id, start) for every occurrence of a length-n factor, sorted by block then position."""
        valid = self.suffix_len >= n
        block = np.cumsum(self.lcp < n) - 1
        ids, pos = block[valid], self.sa[valid]
        order = np.lexsort((pos, ids))
        return ids[order], pos[order]


def _occurrences(symbols: Tuple[int, ...], pattern: Tuple[int, ...]) -> np.ndarray:
    m = len(pattern)
    if m == 0 or m > len(symbols):
        return np.zeros(0, dtype=np.int64)
    arr = np.asarray(symbols, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(arr, m)
    return np.flatnonzero((windows == np.asarray(pattern, dtype=np.int64)).all(axis=1))


def _letter_counts(arr: np.ndarray, d: int) -> np.ndarray:
    """counts[i, k] = |u_0 ... u_{k-1}|_i."""
    counts = np.zeros((d, len(arr) + 1), dtype=np.int64)
    for i in range(d):
        counts[i, 1:] = np.cumsum(arr == i)
    return counts


# ──────────────────────────────────────────────────────────────────────────────
# FACTORS AND COMPLEXITY
# ──────────────────────────────────────────────────────────────────────────────

def factors(stream: WordStream, prefix_len: int, max_n: int) -> FactorTable:
    _check_window(prefix_len, max_n)
    symbols = stream.symbols(prefix_len)
    log_info(f"🔎 collecting factors up to {max_n} on {prefix_len} letters of '{stream.name}'", COMPONENT)
    index = _SuffixIndex(symbols)
    by_length = {}
    for n in range(1, max_n + 1):
        by_length[n] = tuple(symbols[s : s + n] for s in index.factor_starts(n).tolist())
    return FactorTable(
        alphabet=stream.alphabet,
        max_length=max_n,
        factors_by_length=by_length,
        prefix_len=prefix_len,
    )


def complexity(table: FactorTable) -> ComplexityProfile:
    ns = list(range(1, table.max_length + 1))
    p = [table.count(n) for n in ns]
    dp: List[Optional[int]] = [p[k + 1] - p[k] for k in range(len(p) - 1)] + [None]
    return ComplexityProfile(n=ns, p=p, dp=dp, prefix_len=table.prefix_len)


def entropy_estimate(p: Sequence[int]) -> EntropyEstimate:
    """log p(n)/n for each n; the value at the largest n is an upper-trend estimate of the entropy."""
    if isinstance(p, ComplexityProfile):
        p = p.p
    if not len(p):
        raise PreconditionError("complexity sequence must be non-empty")
    if any(v < 1 for v in p):
        raise PreconditionError("complexity values must be positive")
    ratios = [math.log(v) / n for n, v in enumerate(p, start=1)]
    envelope = np.minimum.accumulate(np.asarray(ratios)).tolist()
    return EntropyEstimate(estimate=ratios[-1], ratios=ratios, envelope=envelope)


def stabilized_complexity(
    stream: WordStream, max_n: int, start_len: Optional[int] = None, max_len: int = 1 << 20
) -> Tuple[ComplexityProfile, int]:
    """Recompute p on doubling prefixes.

    Returns the last profile and the largest n such that p(1..n) did not
    change across the last doubling (0 when only one prefix was available).
    """
    length = max(start_len or 4 * max_n, max_n)
    previous: Optional[List[int]] = None
    while True:
        try:
            profile = complexity(factors(stream, length, max_n))
        except ShortStreamError as exc:
            if exc.available < max_n or (previous is not None and exc.available <= length // 2):
                raise
            length = exc.available
            profile = complexity(factors(stream, length, max_n))
        stable = 0
        if previous is not None:
            for a, b in zip(previous, profile.p):
                if a != b:
                    break
                stable += 1
        finished = stable == max_n or 2 * length > max_len
        if stream.is_finite and length >= (stream.length or 0):
            finished = True
        if finished:
            log_debug(f"complexity stable up to n={stable} at prefix {length}", COMPONENT)
            return profile, stable
        previous = profile.p
        length *= 2


# ──────────────────────────────────────────────────────────────────────────────
# RECURRENCE AND RETURN WORDS
# ──────────────────────────────────────────────────────────────────────────────

def recurrence_function(stream: WordStream, prefix_len: int, max_n: int) -> RecurrenceProfile:
    """Window recurrence function.

    R(n) is the least k such that every length-k window of the prefix contains
    every length-n factor of the prefix. It is undetermined when some factor
    occurs only once in the window.
    """
    _check_window(prefix_len, max_n)
    symbols = stream.symbols(prefix_len)
    index = _SuffixIndex(symbols)
    L = prefix_len
    values: List[Optional[int]] = []
    returns: List[Optional[int]] = []
    undetermined: List[int] = []
    for n in range(1, max_n + 1):
        ids, pos = index.blocks(n)
        starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
        ends = np.r_[starts[1:], len(ids)] - 1
        gaps = np.diff(pos)
        gaps[ids[1:] != ids[:-1]] = 0
        max_gap = np.maximum.reduceat(np.r_[gaps, 0], starts)
        recurring = ends > starts
        returns.append(int(max_gap[recurring].max()) if recurring.any() else None)
        if not recurring.all():
            values.append(None)
            undetermined.append(n)
            continue
        needed = np.maximum.reduce([pos[starts] + n, L - pos[ends], max_gap + n - 1])
        values.append(int(needed.max()))
    if undetermined:
        log_info(f"R(n) undetermined for {len(undetermined)} lengths on '{stream.name}'", COMPONENT)
    return RecurrenceProfile(
        n=list(range(1, max_n + 1)),
        R=values,
        return_lengths=returns,
        undetermined=undetermined,
        prefix_len=prefix_len,
    )


def _window_occurrences(stream: WordStream, prefix_len: int, w: FiniteWord):
    if w.alphabet != stream.alphabet:
        raise AlphabetMismatchError("word and stream use different alphabets")
    if not len(w):
        raise PreconditionError("return words need a non-empty word")
    symbols = stream.symbols(prefix_len)
    occ = _occurrences(symbols, w.symbols)
    if len(occ) < 2:
        log_error(f"'{w.text()}' occurs {len(occ)} time(s) in '{stream.name}'", COMPONENT)
        raise InsufficientOccurrencesError(w.text(), len(occ))
    return symbols, occ.tolist()


def return_words(stream: WordStream, prefix_len: int, w: FiniteWord) -> List[FiniteWord]:
    """Words separating consecutive occurrences of w in the window, sorted by letter index."""
    symbols, occ = _window_occurrences(stream, prefix_len, w)
    found = {symbols[a:b] for a, b in zip(occ, occ[1:])}
    return [FiniteWord(alphabet=stream.alphabet, symbols=s) for s in sorted(found)]


def derived_word(stream: WordStream, prefix_len: int, w: FiniteWord) -> Tuple[WordStream, Substitution]:
    """Recode the window between the first and last occurrence of w over its return words.

    Return words are numbered 1, 2, ... in order of first appearance. The
    coding substitution applied to the derived word gives back the window
    up to the last occurrence of w.
    """
    symbols, occ = _window_occurrences(stream, prefix_len, w)
    if occ[0] != 0:
        raise PreconditionError(f"'{w.text()}' must be a prefix of the stream to derive it")
    codes: List[int] = []
    numbering = {}
    for a, b in zip(occ, occ[1:]):
        codes.append(numbering.setdefault(symbols[a:b], len(numbering)))
    longest = max(len(r) for r in numbering)
    tail = prefix_len - occ[-1]
    if tail > longest + len(w):
        log_error(f"'{w.text()}' stops recurring after position {occ[-1]}", COMPONENT)
        raise NonRecurrentWindowError(
            f"no occurrence of '{w.text()}' in the last {tail} letters while return words have length <= {longest}"
        )
    alphabet = Alphabet(letters=tuple(str(i + 1) for i in range(len(numbering))))
    coding = Substitution(
        name=f"return-words({w.text()})",
        domain=alphabet,
        codomain=stream.alphabet,
        images=tuple(numbering),
    )
    derived = WordStream.from_symbols(alphabet, codes, name=f"derived({stream.name}, {w.text()})")
    return derived, coding


# ──────────────────────────────────────────────────────────────────────────────
# BALANCE AND FREQUENCIES
# ──────────────────────────────────────────────────────────────────────────────

def letter_frequencies(stream: WordStream, prefix_len: int) -> List[float]:
    if prefix_len < 1:
        raise PreconditionError("frequencies need a non-empty prefix")
    arr = np.asarray(stream.symbols(prefix_len), dtype=np.int64)
    counts = np.bincount(arr, minlength=stream.alphabet.size)
    return (counts / prefix_len).tolist()


def _frequency_vector(stream: WordStream, prefix_len: int, f: Optional[Sequence[float]]):
    if f is None:
        return np.asarray(letter_frequencies(stream, prefix_len)), "empirical"
    vec = np.asarray(f, dtype=float)
    if len(vec) != stream.alphabet.size or (vec < 0).any() or abs(vec.sum() - 1.0) > 1e-9:
        raise PreconditionError(f"frequency vector must be non-negative, of size {stream.alphabet.size}, summing to 1")
    return vec, "supplied"


def balance(
    stream: WordStream, prefix_len: int, max_n: int, f: Optional[Sequence[float]] = None
) -> BalanceReport:
    _check_window(prefix_len, max_n)
    freq, source = _frequency_vector(stream, prefix_len, f)
    arr = np.asarray(stream.symbols(prefix_len), dtype=np.int64)
    d = stream.alphabet.size
    counts = _letter_counts(arr, d)
    imbalance = []
    for i in range(d):
        row = counts[i]
        spread = 0
        for n in range(1, max_n + 1):
            window = row[n:] - row[:-n]
            spread = max(spread, int(window.max() - window.min()))
        imbalance.append(spread)
    lengths = np.arange(1, prefix_len + 1)
    deviation = [float(np.abs(counts[i, 1:] - lengths * freq[i]).max()) for i in range(d)]
    b_hat, delta_hat = max(imbalance), max(deviation)
    holds = delta_hat <= b_hat + 1e-12 and b_hat <= 4 * delta_hat + 1e-12
    log_info(f"⚖️ balance of '{stream.name}': B={b_hat} Delta={delta_hat:.6g} ({source} f)", COMPONENT)
    return BalanceReport(
        imbalance=b_hat,
        per_letter_imbalance=imbalance,
        discrepancy=delta_hat,
        per_letter_discrepancy=deviation,
        frequencies=freq.tolist(),
        frequency_source=source,
        window_length=prefix_len,
        max_n=max_n,
        relation_holds=holds,
    )


def discrepancy_slope(stream: WordStream, prefix_len: int, f: Optional[Sequence[float]] = None) -> float:
    """Least-squares slope of log D(n) against log n, D the running prefix discrepancy."""
    freq, _ = _frequency_vector(stream, prefix_len, f)
    arr = np.asarray(stream.symbols(prefix_len), dtype=np.int64)
    counts = _letter_counts(arr, stream.alphabet.size)
    lengths = np.arange(1, prefix_len + 1)
    deviation = np.abs(counts[:, 1:] - np.outer(freq, lengths)).max(axis=0)
    running = np.maximum.accumulate(deviation)
    grid = np.unique(np.geomspace(1, prefix_len, num=min(64, prefix_len)).astype(np.int64))
    keep = running[grid - 1] > 0
    if keep.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(np.log(grid[keep]), np.log(running[grid - 1][keep]), 1)
    return float(slope)
