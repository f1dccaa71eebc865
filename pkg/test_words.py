import math

import numpy as np
import pytest

from base import Alphabet, FiniteWord
from cocycle import random_directive_sequence, uniform_measure
from errors import InsufficientOccurrencesError, NonRecurrentWindowError, PreconditionError, ShortStreamError
from library import get_graph, get_substitution
from sadic import limit_word_stream
from substitution import apply, fixed_point_stream
from words import (
    WordStream,
    abelianize,
    balance,
    complexity,
    derived_word,
    discrepancy_slope,
    entropy_estimate,
    factors,
    letter_frequencies,
    parse_word,
    power_concatenation_stream,
    recurrence_function,
    return_words,
    stabilized_complexity,
)

GOLDEN = (math.sqrt(5) - 1) / 2


def _stream(name):
    if name == "power-concatenation":
        return power_concatenation_stream()
    return fixed_point_stream(get_substitution(name), "a")


@pytest.fixture(scope="module")
def fibonacci_word():
    return fixed_point_stream(get_substitution("fibonacci"), "a")


@pytest.fixture(scope="module")
def thue_morse_word():
    return fixed_point_stream(get_substitution("thue_morse"), "a")


def test_parse_word_characters_and_tokens():
    word = parse_word("abba")
    assert word.alphabet.letters == ("a", "b")
    assert word.symbols == (0, 1, 1, 0)

    tokens = parse_word("x1 x2 x1")
    assert tokens.alphabet.letters == ("x1", "x2")
    assert tokens.text() == "x1 x2 x1"


def test_parse_word_rejects_unknown_letter():
    with pytest.raises(ValueError):
        parse_word("abc", alphabet=Alphabet(letters=("a", "b")))


def test_finite_stream_is_short():
    stream = WordStream.from_word(parse_word("abab"))
    assert stream.text(4) == "abab"
    with pytest.raises(ShortStreamError) as info:
        stream.symbols(10)
    assert info.value.available == 4


def test_fibonacci_prefix(fibonacci_word):
    assert fibonacci_word.text(21) == "abaababaabaababaababa"


def test_abelianize():
    assert abelianize(parse_word("abaab")) == [3, 2]


def test_fibonacci_complexity_is_n_plus_one(fibonacci_word):
    profile = complexity(factors(fibonacci_word, 100_000, 200))
    assert profile.p == [n + 1 for n in range(1, 201)]
    assert set(profile.dp[:-1]) == {1}
    assert profile.dp[-1] is None


def test_thue_morse_small_complexity(thue_morse_word):
    # p(1..8) of the Thue-Morse word
    profile = complexity(factors(thue_morse_word, 4096, 8))
    assert profile.p == [2, 4, 6, 10, 12, 16, 20, 22]


@pytest.mark.parametrize("name", ["fibonacci", "thue_morse", "power-concatenation"])
def test_window_complexity_is_submultiplicative(name):
    p = complexity(factors(_stream(name), 5000, 24)).p
    for m in range(1, 24):
        for n in range(1, 25 - m):
            assert p[m + n - 1] <= p[m - 1] * p[n - 1]


def test_power_concatenation_complexity():
    stream = power_concatenation_stream()
    profile = complexity(factors(stream, 5000, 30))
    assert profile.p == [n * (n + 1) // 2 + 1 for n in range(1, 31)]


def test_arnoux_rauzy_complexity_is_2n_plus_one():
    graph = get_graph("arnoux_rauzy_3")
    ds = random_directive_sequence(graph, uniform_measure(graph), seed=7)
    profile = complexity(factors(limit_word_stream(ds), 100_000, 100))
    assert profile.p == [2 * n + 1 for n in range(1, 101)]


def test_factor_window_validation(fibonacci_word):
    with pytest.raises(PreconditionError):
        factors(fibonacci_word, 100, 0)
    with pytest.raises(PreconditionError):
        factors(fibonacci_word, 5, 10)


def test_stabilized_complexity(fibonacci_word):
    profile, stable = stabilized_complexity(fibonacci_word, 20, start_len=64)
    assert stable == 20
    assert profile.p == [n + 1 for n in range(1, 21)]


def test_entropy_estimate_envelope():
    estimate = entropy_estimate([2, 4, 8, 10])
    assert estimate.ratios[2] == pytest.approx(math.log(2))
    assert estimate.estimate == pytest.approx(math.log(10) / 4)
    assert estimate.envelope == sorted(estimate.envelope, reverse=True)


def test_entropy_estimate_rejects_zero():
    with pytest.raises(PreconditionError):
        entropy_estimate([1, 0])


def test_recurrence_of_periodic_word():
    stream = WordStream.periodic(Alphabet(letters=("a", "b")), [0, 1])
    profile = recurrence_function(stream, 100, 2)
    assert profile.R == [2, 3]
    assert profile.return_lengths == [2, 2]
    assert profile.undetermined == []


def test_fibonacci_recurrence_bounds(fibonacci_word):
    profile = recurrence_function(fibonacci_word, 20_000, 30)
    assert profile.undetermined == []
    for n, r, longest in zip(profile.n, profile.R, profile.return_lengths):
        # a window holding all n + 1 factors of length n has at least 2n letters
        assert r >= 2 * n
        assert longest <= r - n + 1


@pytest.mark.parametrize("name, prefix_len, max_n", [("fibonacci", 20_000, 30), ("thue_morse", 1 << 14, 12)])
def test_complexity_and_return_words_bound_recurrence(name, prefix_len, max_n):
    stream = _stream(name)
    p = complexity(factors(stream, prefix_len, max_n)).p
    profile = recurrence_function(stream, prefix_len, max_n)
    assert profile.undetermined == []
    for n, pn, r, longest in zip(profile.n, p, profile.R, profile.return_lengths):
        assert pn <= r
        assert r - n <= longest <= r - n + 1


def test_recurrence_undetermined_on_finite_word():
    stream = WordStream.from_word(parse_word("aab"))
    profile = recurrence_function(stream, 3, 2)
    assert profile.R == [None, None]
    assert profile.undetermined == [1, 2]


def test_return_words_of_fibonacci(fibonacci_word):
    words = return_words(fibonacci_word, 1000, parse_word("a", fibonacci_word.alphabet))
    assert sorted(w.text() for w in words) == ["a", "ab"]


def test_derived_fibonacci_word_is_fibonacci(fibonacci_word):
    derived, coding = derived_word(fibonacci_word, 1000, parse_word("a", fibonacci_word.alphabet))
    assert coding.rules() == {"1": "ab", "2": "a"}
    fibonacci = fixed_point_stream(get_substitution("fibonacci"), "a")
    n = derived.length
    expected = fibonacci.symbols(n)
    assert derived.symbols(n) == expected


@pytest.mark.parametrize("name, w", [("fibonacci", "aba"), ("thue_morse", "a"), ("thue_morse", "abba")])
def test_derived_word_decodes_to_window(name, w):
    stream = _stream(name)
    derived, coding = derived_word(stream, 1000, parse_word(w, stream.alphabet))
    text = stream.text(1000)
    decoded = apply(coding, derived.prefix(derived.length))
    assert decoded.text() == text[: text.rfind(w)]


def test_return_words_need_two_occurrences():
    stream = WordStream.from_word(parse_word("abc"))
    with pytest.raises(InsufficientOccurrencesError):
        return_words(stream, 3, parse_word("a", stream.alphabet))


def test_derived_word_rejects_non_recurrent_window():
    stream = WordStream.from_word(parse_word("abab" + "c" * 20))
    with pytest.raises(NonRecurrentWindowError):
        derived_word(stream, 24, parse_word("ab", stream.alphabet))


def test_fibonacci_is_one_balanced(fibonacci_word):
    report = balance(fibonacci_word, 1 << 16, 100)
    assert report.imbalance == 1
    assert report.relation_holds
    assert report.frequency_source == "empirical"


def test_thue_morse_is_two_balanced(thue_morse_word):
    report = balance(thue_morse_word, 1 << 16, 100)
    assert report.imbalance == 2
    assert report.relation_holds


@pytest.mark.parametrize("name, f", [("fibonacci", [GOLDEN, 1 - GOLDEN]), ("thue_morse", [0.5, 0.5])])
def test_factor_deviation_is_within_twice_the_imbalance(name, f):
    stream = _stream(name)
    report = balance(stream, 4096, 64, f=f)
    arr = np.asarray(stream.symbols(4096))
    for i, fi in enumerate(f):
        counts = np.r_[0, np.cumsum(arr == i)]
        for n in range(1, 65):
            window = counts[n:] - counts[:-n]
            assert np.abs(window - fi * n).max() <= 2 * report.imbalance + 1e-9


def test_balance_with_supplied_frequencies(fibonacci_word):
    report = balance(fibonacci_word, 10_000, 20, f=[GOLDEN, 1 - GOLDEN])
    assert report.frequency_source == "supplied"
    assert report.discrepancy < 1.0


def test_balance_rejects_bad_frequencies(fibonacci_word):
    with pytest.raises(PreconditionError):
        balance(fibonacci_word, 1000, 10, f=[0.5, 0.6])


def test_fibonacci_letter_frequencies(fibonacci_word):
    freq = letter_frequencies(fibonacci_word, 100_000)
    assert freq[0] == pytest.approx(GOLDEN, abs=1e-3)
    assert sum(freq) == pytest.approx(1.0)


def test_discrepancy_slope_is_flat_for_fibonacci(fibonacci_word):
    assert discrepancy_slope(fibonacci_word, 50_000) < 0.25


def test_finite_word_model_rejects_bad_symbols():
    with pytest.raises(ValueError):
        FiniteWord(alphabet=Alphabet(letters=("a",)), symbols=(0, 1))
