import json
import logging
from fractions import Fraction

import mpmath
import pandas as pd
import pytest

from base import RunConfig
from cf import cf_expand, sturmian_map
from cocycle import uniform_measure, validate_measure
from errors import MeasureError, PreconditionError, UnknownNameError
from file_formats import (
    directive_from_dict,
    directive_to_dict,
    expansion_to_dict,
    graph_from_dict,
    graph_to_dict,
    json_text,
    load_directive,
    load_graph,
    normalize,
    read_json,
    render_number,
    resolve_substitution,
    substitution_from_spec,
    substitution_to_dict,
    table_text,
    write_result,
)
from library import available_substitutions, get_graph, get_substitution


@pytest.fixture
def config():
    return RunConfig(subcommand="unit", inputs={"word": "ab"}, parameters={"max_n": 3}, output_format="csv")


# ── library ──────────────────────────────────────────────────────────────────

def test_parametric_substitutions():
    assert get_substitution("arnoux_rauzy_3_2").rules() == {"1": "12", "2": "2", "3": "32"}
    assert get_substitution("jacobi_perron_1_2").rules() == {"1": "2", "2": "3", "3": "1233"}


def test_unknown_substitution_lists_builtins():
    with pytest.raises(UnknownNameError) as info:
        get_substitution("brun")
    assert "fibonacci" in info.value.available
    with pytest.raises(UnknownNameError):
        get_substitution("arnoux_rauzy_3_4")


def test_unknown_graph():
    with pytest.raises(UnknownNameError):
        get_graph("nowhere")
    assert "jacobi_perron_<B>_<C>" in available_substitutions()


# ── reading ──────────────────────────────────────────────────────────────────

def test_inline_substitution_rules():
    sub = substitution_from_spec({"name": "grow", "rules": {"a": "ab", "b": "c"}, "domain": ["a", "b"]})
    assert sub.codomain.letters == ("a", "b", "c")
    with pytest.raises(PreconditionError):
        substitution_from_spec({"name": "no-rules"})


def test_resolve_substitution_from_file(tmp_path):
    path = tmp_path / "tm.json"
    path.write_text(json.dumps({"name": "tm", "rules": {"a": "ab", "b": "ba"}}), encoding="utf-8")
    assert resolve_substitution(str(path)).rules() == get_substitution("thue_morse").rules()
    assert resolve_substitution("fibonacci").name == "fibonacci"


def test_periodic_directive_from_dict():
    ds = directive_from_dict({"kind": "periodic", "cycle": ["tau_a", "tau_b"], "name": "alt"})
    assert ds.name == "alt"
    assert [ds.substitution(n).name for n in range(4)] == ["tau_a", "tau_b", "tau_a", "tau_b"]


def test_eventually_periodic_directive_from_dict():
    ds = directive_from_dict({"kind": "eventually-periodic", "pre": ["tau_b"], "cycle": ["fibonacci"]})
    assert [ds.substitution(n).name for n in range(3)] == ["tau_b", "fibonacci", "fibonacci"]


def test_explicit_directive_with_tail():
    ds = directive_from_dict({"kind": "explicit", "substitutions": ["tau_a", "tau_b"], "tail": "repeat-last"})
    assert ds.substitution(5).name == "tau_b"
    halted = directive_from_dict({"kind": "explicit", "substitutions": ["tau_a"]})
    assert halted.length == 1


def test_unknown_directive_kind():
    with pytest.raises(PreconditionError):
        directive_from_dict({"kind": "spiral", "substitutions": ["fibonacci"]})


def test_directive_file_round_trip(tmp_path):
    ds = directive_from_dict({"kind": "periodic", "cycle": ["fibonacci", "thue_morse"], "seeds": "auto"})
    path = tmp_path / "ds.json"
    path.write_text(json.dumps(directive_to_dict(ds)), encoding="utf-8")
    loaded = load_directive(str(path))
    assert loaded.product(6) == ds.product(6)
    assert loaded.kind == "periodic"


def test_invalid_json_is_a_precondition_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(PreconditionError):
        read_json(str(path))


def test_graph_from_dict_with_measure():
    data = {
        "name": "two-cycle",
        "edges": [
            {"id": "go", "from": "u", "to": "v", "substitution": "fibonacci"},
            {"id": "back", "from": "v", "to": "u", "substitution": "tau_a"},
        ],
        "measure": {"initial": {"go": 0.5, "back": 0.5}, "transitions": {"go": {"back": 1}, "back": {"go": 1}}},
    }
    graph, measure = graph_from_dict(data)
    assert graph.vertices == ("u", "v")
    assert measure.transitions == ((0.0, 1.0), (1.0, 0.0))
    validate_measure(graph, measure)


def test_graph_measure_is_validated():
    data = {
        "edges": [{"id": "loop", "from": "v", "to": "v", "substitution": "fibonacci"}],
        "measure": {"initial": {"loop": 1.0}, "transitions": {"loop": {"loop": 0.5}}},
    }
    graph, measure = graph_from_dict(data)
    with pytest.raises(MeasureError):
        validate_measure(graph, measure)
    with pytest.raises(PreconditionError):
        graph_from_dict({"edges": data["edges"], "measure": {"initial": {"elsewhere": 1.0}}})
    with pytest.raises(PreconditionError):
        graph_from_dict({"edges": []})


def test_graph_round_trip_and_builtin_fallback(tmp_path):
    graph = get_graph("sturmian")
    path = tmp_path / "sturmian-graph.json"
    path.write_text(json.dumps(graph_to_dict(graph, uniform_measure(graph))), encoding="utf-8")
    loaded, measure = load_graph(str(path))
    assert [e.id for e in loaded.edges] == ["tau_a", "tau_b"]
    assert measure.initial == pytest.approx((0.5, 0.5))

    fallback, none = load_graph(str(tmp_path / "fibonacci.json"))
    assert fallback.name == "fibonacci"
    assert none is None


def test_missing_graph_file_fallback_is_logged(tmp_path, caplog):
    with caplog.at_level(logging.WARNING, logger="SADIC"):
        graph, _ = load_graph(str(tmp_path / "sturmian.json"))
    assert graph.name == "sturmian"
    assert any(r.levelno == logging.WARNING and "sturmian.json" in r.getMessage() for r in caplog.records)


def test_multichar_substitution_file_is_stable(tmp_path):
    text = json.dumps(
        {
            "name": "pairs",
            "domain": ["x1", "x2", "x10"],
            "codomain": ["x1", "x2", "x10"],
            "rules": {"x1": ["x1", "x2"], "x2": ["x10"], "x10": ["x1"]},
        },
        ensure_ascii=False,
    )
    path = tmp_path / "pairs.json"
    path.write_text(text, encoding="utf-8")
    sub = resolve_substitution(str(path))
    assert sub.images == ((0, 1), (2,), (0,))
    assert json.dumps(substitution_to_dict(sub), ensure_ascii=False) == text


def test_string_images_are_still_accepted():
    sub = substitution_from_spec({"name": "spaced", "rules": {"x1": "x1 x2", "x2": "x1"}})
    assert substitution_to_dict(sub)["rules"] == {"x1": ["x1", "x2"], "x2": ["x1"]}
    assert substitution_to_dict(get_substitution("fibonacci"))["rules"] == {"a": ["a", "b"], "b": ["a"]}


# ── writing ──────────────────────────────────────────────────────────────────

def test_render_number():
    assert render_number(Fraction(1, 3)) == "1/3"
    assert render_number(1 / 3) == 0.333333333333
    assert render_number(float("inf")) == "inf"
    assert render_number(7) == 7
    with mpmath.workdps(30):
        assert render_number(mpmath.mpf(1) / 3) == "0.333333333333"


def test_normalize_dumps_models(config):
    data = normalize({"config": config, "pair": (Fraction(1, 2), 2)})
    assert data["config"]["subcommand"] == "unit"
    assert data["pair"] == ["1/2", 2]


def test_expansion_to_dict():
    expansion = cf_expand(sturmian_map(), (5, 2), 10)
    data = expansion_to_dict(expansion, "matrices")
    assert data["symbols"] == ["a", "a", "b"]
    assert data["matrices"][0] == [[1, 1], [0, 1]]
    assert "remainders" not in data


def test_json_text_embeds_config(config):
    payload = json.loads(json_text({"value": 0.1 + 0.2}, config))
    assert payload["config"]["parameters"] == {"max_n": 3}
    assert payload["result"]["value"] == 0.3


def test_csv_header_and_float_format(config):
    text = table_text(pd.DataFrame({"n": [1, 2], "x": [1 / 3, 2.0]}), config, "csv")
    lines = text.splitlines()
    assert lines[0].startswith("# config: {")
    assert lines[1:] == ["n,x", "1,0.333333333333", "2,2"]


def test_write_result_without_frame(tmp_path, config):
    target = tmp_path / "out.csv"
    write_result({"imbalance": 1, "frequencies": [0.5, 0.5]}, None, config, str(target))
    lines = target.read_text(encoding="utf-8").splitlines()
    assert lines[1] == "imbalance,frequencies"
    assert lines[2].startswith("1,")


def test_text_table_embeds_config(config):
    text_config = config.model_copy(update={"output_format": "text"})
    lines = table_text(pd.DataFrame({"n": [1, 2], "p": [2, 3]}), text_config, "text").splitlines()
    assert lines[0] == "# unit"
    assert lines[1].startswith("# config: {")
    data = json.loads(lines[1][len("# config: "):])
    assert data["parameters"] == {"max_n": 3}
    assert data["output_format"] == "text"
    assert lines[2].split() == ["n", "p"]


@pytest.mark.parametrize("fmt", ["json", "csv", "text"])
def test_identical_runs_write_identical_bytes(tmp_path, config, fmt):
    run_config = config.model_copy(update={"output_format": fmt})
    result = {"frequencies": [1 / 3, 2 / 3], "ratio": Fraction(2, 7)}
    frame = pd.DataFrame({"letter": ["a", "b"], "frequency": [1 / 3, 2 / 3]})
    first, second = tmp_path / "first", tmp_path / "second"
    write_result(result, frame, run_config, str(first))
    write_result(result, frame, run_config, str(second))
    assert first.read_bytes() == second.read_bytes()
    assert b"max_n" in first.read_bytes()
