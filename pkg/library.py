"""
library.py
────────────────────────────────────────────────────────────────────────────────
Built-in substitutions and S-adic graphs, one identifier away.

Parametric names:
  arnoux_rauzy_<d>_<i>   μ_i on {1..d}: i ↦ i, j ↦ j i
  jacobi_perron_<B>_<C>  1 ↦ 2, 2 ↦ 3, 3 ↦ 1 2^B 3^C
  arnoux_rauzy_<d>       (graphs) single vertex, one edge per μ_i

Note: mu_b is a ↦ ab, b ↦ b. Some texts print its name with an index 1
instead of b; the image is the same.
"""

import re
from functools import lru_cache
from typing import Callable, Dict, List

from base import Alphabet, GraphEdge, SAdicGraph, Substitution
from errors import UnknownNameError
from substitution import compose, identity, substitution_from_rules

AB = ("a", "b")
ABC = ("a", "b", "c")


def _rules(name: str, letters, rules) -> Substitution:
    return substitution_from_rules(name, rules, domain=letters, codomain=letters)


def arnoux_rauzy(i: int, d: int) -> Substitution:
    if not 1 <= i <= d:
        raise UnknownNameError("substitution", f"arnoux_rauzy_{d}_{i}", available_substitutions())
    letters = tuple(str(k) for k in range(1, d + 1))
    rules = {letter: [letter] if k == i else [letter, str(i)] for k, letter in enumerate(letters, start=1)}
    return _rules(f"arnoux_rauzy_{d}_{i}", letters, rules)


def jacobi_perron(b: int, c: int) -> Substitution:
    letters = ("1", "2", "3")
    image = ["1"] + ["2"] * b + ["3"] * c
    return _rules(f"jacobi_perron_{b}_{c}", letters, {"1": ["2"], "2": ["3"], "3": image})


def _quadratic() -> Substitution:
    return _rules("quadratic", AB, {"a": "aab", "b": "b"})


def _swap() -> Substitution:
    return _rules("swap", AB, {"a": "b", "b": "a"})


_SUBSTITUTIONS: Dict[str, Callable[[], Substitution]] = {
    "fibonacci": lambda: _rules("fibonacci", AB, {"a": "ab", "b": "a"}),
    "thue_morse": lambda: _rules("thue_morse", AB, {"a": "ab", "b": "ba"}),
    "tau_a": lambda: _rules("tau_a", AB, {"a": "a", "b": "ab"}),
    "tau_b": lambda: _rules("tau_b", AB, {"a": "ba", "b": "b"}),
    "mu_a": lambda: _rules("mu_a", AB, {"a": "a", "b": "ba"}),
    "mu_b": lambda: _rules("mu_b", AB, {"a": "ab", "b": "b"}),
    "quadratic": _quadratic,
    "swap": _swap,
    "quadratic_swap": lambda: compose(_quadratic(), _swap()).model_copy(update={"name": "quadratic_swap"}),
    "swap_quadratic": lambda: compose(_swap(), _quadratic()).model_copy(update={"name": "swap_quadratic"}),
    "identity_ab": lambda: identity(Alphabet(letters=AB)).model_copy(update={"name": "identity_ab"}),
    "R": lambda: _rules("R", ABC, {"a": "ab", "b": "b", "c": "c"}),
    "L": lambda: _rules("L", ABC, {"a": "ba", "b": "b", "c": "c"}),
    "E_ab": lambda: _rules("E_ab", ABC, {"a": "b", "b": "a", "c": "c"}),
    "E_bc": lambda: _rules("E_bc", ABC, {"a": "a", "b": "c", "c": "b"}),
    "M_ab": lambda: _rules("M_ab", ABC, {"a": "b", "b": "b", "c": "b"}),
    # strongly primitive pair whose alternating expansion is not linearly recurrent
    "nonlinrec_sigma": lambda: _rules("nonlinrec_sigma", ABC, {"a": "acb", "b": "bab", "c": "cbc"}),
    "nonlinrec_tau": lambda: _rules("nonlinrec_tau", ABC, {"a": "abc", "b": "acb", "c": "aac"}),
    # primitive with eigenvalues 3, 2, 0
    "singular": lambda: _rules("singular", ABC, {"a": "abc", "b": "bba", "c": "cca"}),
}

_AR = re.compile(r"^arnoux_rauzy_(\d+)_(\d+)$")
_JP = re.compile(r"^jacobi_perron_(\d+)_(\d+)$")


def available_substitutions() -> List[str]:
    return sorted(_SUBSTITUTIONS) + ["arnoux_rauzy_<d>_<i>", "jacobi_perron_<B>_<C>"]


@lru_cache(maxsize=256)
def get_substitution(name: str) -> Substitution:
    if name in _SUBSTITUTIONS:
        return _SUBSTITUTIONS[name]()
    match = _AR.match(name)
    if match:
        return arnoux_rauzy(int(match.group(2)), int(match.group(1)))
    match = _JP.match(name)
    if match:
        return jacobi_perron(int(match.group(1)), int(match.group(2)))
    raise UnknownNameError("substitution", name, available_substitutions())


# ──────────────────────────────────────────────────────────────────────────────
# GRAPHS
# ──────────────────────────────────────────────────────────────────────────────

def single_vertex_graph(name: str, substitutions: Dict[str, Substitution]) -> SAdicGraph:
    first = next(iter(substitutions.values()))
    edges = tuple(
        GraphEdge(id=edge_id, source="v", target="v", substitution=sub) for edge_id, sub in substitutions.items()
    )
    return SAdicGraph(name=name, alphabet=first.domain, vertices=("v",), edges=edges)


def _graph_from_names(name: str, names: List[str]) -> SAdicGraph:
    return single_vertex_graph(name, {n: get_substitution(n) for n in names})


_GRAPHS: Dict[str, Callable[[], SAdicGraph]] = {
    "fibonacci": lambda: _graph_from_names("fibonacci", ["fibonacci"]),
    "sturmian": lambda: _graph_from_names("sturmian", ["tau_a", "tau_b"]),
    "mu": lambda: _graph_from_names("mu", ["mu_a", "mu_b"]),
    "permutation": lambda: _graph_from_names("permutation", ["swap", "identity_ab"]),
    "moves": lambda: _graph_from_names("moves", ["R", "L", "E_ab", "E_bc"]),
}

_AR_GRAPH = re.compile(r"^arnoux_rauzy_(\d+)$")


def available_graphs() -> List[str]:
    return sorted(_GRAPHS) + ["arnoux_rauzy_<d>"]


@lru_cache(maxsize=64)
def get_graph(name: str) -> SAdicGraph:
    if name in _GRAPHS:
        return _GRAPHS[name]()
    match = _AR_GRAPH.match(name)
    if match:
        d = int(match.group(1))
        return single_vertex_graph(name, {str(i): arnoux_rauzy(i, d) for i in range(1, d + 1)})
    raise UnknownNameError("graph", name, available_graphs())
