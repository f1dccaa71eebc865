import random
from fractions import Fraction
from math import gcd

import mpmath
import pytest
import sympy

from cf import (
    CFMap,
    accelerate,
    arnoux_rauzy_map,
    cf_expand,
    directive_from_expansion,
    get_map,
    jacobi_perron_map,
    parse_vector,
    reconstruct,
    run_lengths,
    sturmian_map,
)
from errors import ConeError, NonInvertibleError, PreconditionError, UnknownNameError
from library import get_graph, get_substitution
from sadic import approximant, generalized_eigenvector
from substitution import incidence


def partial_quotients(q: int, p: int):
    """Regular continued fraction of q/p by integer division."""
    quotients = []
    while p:
        quotients.append(q // p)
        q, p = p, q % p
    return quotients


def expected_runs(q: int, p: int):
    quotients = partial_quotients(q, p)
    if quotients[0] == 0:
        quotients = quotients[1:]
    quotients[-1] -= 1
    return [k for k in quotients if k]


def fitting_branches(x, inverses):
    """Symbols whose inverse matrix keeps the rational vector x non-negative."""
    vector = sympy.Matrix([sympy.Rational(v.numerator, v.denominator) for v in x])
    return [symbol for symbol, inverse in inverses.items() if all(v >= 0 for v in inverse * vector)]


def test_sturmian_small_example():
    expansion = cf_expand(sturmian_map(), (5, 2), 20)
    assert expansion.symbols == ("a", "a", "b")
    assert expansion.halt_reason == "tie"
    assert expansion.remainders[-1] == (Fraction(1), Fraction(1))
    assert run_lengths(expansion.symbols) == [2, 1]


def test_sturmian_run_lengths_match_partial_quotients():
    rng = random.Random(11)
    checked = 0
    while checked < 100:
        q, p = rng.randint(1, 1000), rng.randint(1, 1000)
        if gcd(q, p) != 1:
            continue
        expansion = cf_expand(sturmian_map(), (q, p), 2000)
        assert expansion.halt_reason == "tie"
        assert run_lengths(expansion.symbols) == expected_runs(q, p)
        assert expansion.steps == sum(partial_quotients(q, p)) - 1
        assert reconstruct(expansion) == (Fraction(q), Fraction(p))
        checked += 1


def test_sturmian_golden_ratio_in_high_precision():
    with mpmath.workdps(60):
        x = (mpmath.mpf(1), (mpmath.sqrt(5) - 1) / 2)
    expansion = cf_expand(sturmian_map(), x, 30)
    assert not expansion.exact
    assert expansion.steps == 30
    assert run_lengths(expansion.symbols) == [1] * 30
    with mpmath.workdps(60):
        rebuilt = reconstruct(expansion)
        assert abs(rebuilt[1] - x[1]) < mpmath.mpf(10) ** -40


def test_sturmian_zero_coordinate_halts():
    expansion = cf_expand(sturmian_map(), (3, 0), 5)
    assert expansion.steps == 0
    assert expansion.halt_reason == "zero coordinate"


def test_arnoux_rauzy_step():
    expansion = cf_expand(arnoux_rauzy_map(3), (5, 2, 1), 10)
    assert expansion.symbols == ("1",)
    assert expansion.remainders[1] == (Fraction(2), Fraction(2), Fraction(1))
    assert expansion.halt_reason == "not in the Rauzy gasket"


def test_arnoux_rauzy_needs_two_letters():
    with pytest.raises(PreconditionError):
        arnoux_rauzy_map(1)


def test_jacobi_perron_example():
    expansion = cf_expand(jacobi_perron_map(), (1, 3, 7), 10)
    assert expansion.symbols == ("3,7",)
    assert expansion.remainders[1] == (Fraction(0), Fraction(0), Fraction(1))
    assert expansion.halt_reason == "zero coordinate"
    assert expansion.substitutions[0].name == "jacobi_perron_3_7"


def test_jacobi_perron_reconstruction_is_exact():
    rng = random.Random(5)
    for _ in range(100):
        c = Fraction(rng.randint(50, 500), rng.randint(1, 30))
        a = c * Fraction(rng.randint(1, 999), 1000)
        b = c * Fraction(rng.randint(0, 999), 1000)
        expansion = cf_expand(jacobi_perron_map(), (a, b, c), 20)
        assert expansion.exact
        for k in range(expansion.steps + 1):
            assert reconstruct(expansion, k) == (a, b, c)
        for remainder in expansion.remainders[1:]:
            assert all(v >= 0 for v in remainder)
            assert remainder[0] < remainder[2] and remainder[1] < remainder[2]


@pytest.mark.parametrize("vector, inequality", [((3, 1, 2), "a < c"), ((1, 4, 2), "b < c")])
def test_jacobi_perron_cone(vector, inequality):
    with pytest.raises(ConeError) as info:
        cf_expand(jacobi_perron_map(), vector, 5)
    assert info.value.inequality == inequality


def test_expansion_input_checks():
    with pytest.raises(PreconditionError):
        cf_expand(sturmian_map(), (1, -1), 3)
    with pytest.raises(PreconditionError):
        cf_expand(sturmian_map(), (0, 0), 3)
    with pytest.raises(PreconditionError):
        cf_expand(sturmian_map(), (1, 2, 3), 3)
    with pytest.raises(PreconditionError):
        cf_expand(sturmian_map(), (1, 2), -1)


def test_accelerated_expansion():
    expansion = cf_expand(sturmian_map(), (5, 2), 20)
    fast = accelerate(expansion)
    assert fast.symbols == ("a^2", "b^1")
    assert fast.matrices[0] == ((1, 2), (0, 1))
    assert fast.algorithm == "sturmian+accelerated"
    assert reconstruct(fast) == (Fraction(5), Fraction(2))


def test_branch_map_agrees_with_sturmian_map():
    branches = CFMap.from_branches("sturm", {"a": get_substitution("tau_a"), "b": get_substitution("tau_b")})
    expansion = cf_expand(branches, (5, 2), 20)
    assert expansion.symbols == ("a", "a", "b")
    assert expansion.halt_reason.startswith("branches")


def test_graph_map_uses_edge_ids():
    cf_map = CFMap.from_graph(get_graph("sturmian"), "v")
    expansion = cf_expand(cf_map, (5, 2), 20)
    assert expansion.symbols == ("tau_a", "tau_a", "tau_b")


def test_graph_map_unknown_vertex():
    with pytest.raises(UnknownNameError):
        CFMap.from_graph(get_graph("sturmian"), "w")


def test_singular_branch_is_rejected():
    with pytest.raises(NonInvertibleError):
        CFMap.from_branches("bad", {"m": get_substitution("M_ab"), "r": get_substitution("R")})


def test_directive_sequence_from_expansion():
    expansion = cf_expand(sturmian_map(), (5, 2), 20)
    ds = directive_from_expansion(expansion)
    assert ds.length == 3
    assert ds.product(3).entries == ((3, 2), (1, 1))
    assert len(approximant(ds, 3, letter="a")) == 4
    with pytest.raises(PreconditionError):
        directive_from_expansion(cf_expand(sturmian_map(), (1, 1), 5))


def test_parse_vector():
    assert parse_vector("1/3, 2, 5") == (Fraction(1, 3), Fraction(2), Fraction(5))
    decimals = parse_vector("0.5, 1.25")
    assert all(isinstance(v, mpmath.mpf) for v in decimals)
    with pytest.raises(PreconditionError):
        parse_vector("a, b")
    with pytest.raises(PreconditionError):
        parse_vector("1/0, 2")
    with pytest.raises(PreconditionError):
        parse_vector(" , ")


def test_unknown_algorithm():
    with pytest.raises(UnknownNameError) as info:
        get_map("brun")
    assert "jacobi-perron" in info.value.available


@pytest.mark.parametrize(
    "cf_map, branches, seed",
    [
        (sturmian_map(), {"a": "tau_a", "b": "tau_b"}, 3),
        (arnoux_rauzy_map(3), {str(i): f"arnoux_rauzy_3_{i}" for i in (1, 2, 3)}, 4),
    ],
)
def test_selector_picks_the_only_admissible_branch(cf_map, branches, seed):
    inverses = {symbol: sympy.Matrix(incidence(get_substitution(name)).entries).inv() for symbol, name in branches.items()}
    rng = random.Random(seed)
    moved = 0
    for _ in range(200):
        x = tuple(Fraction(rng.randint(1, 400), rng.randint(1, 40)) for _ in range(cf_map.dimension))
        expansion = cf_expand(cf_map, x, 30)
        for k, symbol in enumerate(expansion.symbols):
            assert fitting_branches(expansion.remainders[k], inverses) == [symbol]
            assert all(v >= 0 for v in expansion.remainders[k + 1])
        moved += expansion.steps > 0
    assert moved >= 20


def test_tribonacci_direction_gives_back_its_frequencies():
    with mpmath.workdps(60):
        beta = mpmath.findroot(lambda t: t**3 - t**2 - t - 1, 1.8)
        x = (1 / beta, 1 / beta**2, 1 / beta**3)
    expansion = cf_expand(arnoux_rauzy_map(3), x, 60)
    assert expansion.steps == 60
    assert expansion.symbols[:6] == ("1", "2", "3", "1", "2", "3")
    result = generalized_eigenvector(directive_from_expansion(expansion))
    assert result.converged
    assert result.f == pytest.approx([0.5436890126911048, 0.2955977425217414, 0.16071324478715374], abs=1e-9)
    assert [float(v) for v in x] == pytest.approx(result.f, abs=1e-9)


def test_sturmian_direction_gives_letter_frequencies():
    with mpmath.workdps(60):
        alpha = mpmath.sqrt(2) - 1
        x = (1 - alpha, alpha)
    expansion = cf_expand(sturmian_map(), x, 80)
    assert expansion.steps == 80
    # partial quotients of sqrt(2) - 1 are all 2
    assert run_lengths(expansion.symbols)[:-1] == [1] + [2] * (len(run_lengths(expansion.symbols)) - 2)
    result = generalized_eigenvector(directive_from_expansion(expansion))
    assert result.converged
    assert result.f == pytest.approx([2 - 2**0.5, 2**0.5 - 1], abs=1e-9)
