import json
import math

import pytest

from cocycle import uniform_measure
from file_formats import directive_to_dict, graph_to_dict
from library import get_graph, get_substitution
from main import main
from sadic import DirectiveSequence

LOG_PHI = math.log((1 + math.sqrt(5)) / 2)


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


def error_lines(err):
    return [line for line in err.splitlines() if line.startswith("error: ")]


def test_generate_fibonacci_prefix(capsys):
    payload = run_json(capsys, ["generate", "--substitution", "fibonacci", "--length", "21"])
    assert payload["result"]["word"] == "abaababaabaababaababa"
    assert payload["config"]["subcommand"] == "generate"
    assert payload["config"]["inputs"]["substitution"] == "fibonacci"
    assert payload["config"]["parameters"]["length"] == 21
    assert "tol" in payload["config"]["environment"]


def test_generate_from_generator(capsys):
    payload = run_json(capsys, ["generate", "--generator", "power-concatenation", "--length", "7"])
    assert payload["result"]["word"] == "0100110"


def test_complexity_csv_carries_config(capsys):
    assert main(["complexity", "--substitution", "fibonacci", "--max-n", "5", "--prefix-len", "1000", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):])["subcommand"] == "complexity"
    assert lines[1] == "n,p,dp,R"
    rows = [line.split(",") for line in lines[2:]]
    assert [row[1] for row in rows] == ["2", "3", "4", "5", "6"]
    assert all(int(row[1]) <= int(row[3]) for row in rows)


def test_text_format_has_title(capsys):
    assert main(["generate", "--word", "abba", "--length", "4", "--format", "text"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# generate\n")
    config_line = out.splitlines()[1]
    assert config_line.startswith("# config: ")
    assert json.loads(config_line[len("# config: "):])["parameters"]["length"] == 4
    assert "abba" in out


@pytest.mark.parametrize("fmt", ["json", "csv", "text"])
def test_repeated_runs_are_byte_identical(capsys, fmt):
    argv = ["complexity", "--substitution", "thue_morse", "--max-n", "6", "--prefix-len", "512", "--format", fmt]
    outputs = []
    for _ in range(2):
        assert main(argv) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    assert "thue_morse" in outputs[0]


def test_zero_max_n_is_a_precondition_error(capsys):
    assert main(["complexity", "--substitution", "fibonacci", "--max-n", "0"]) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    lines = error_lines(captured.err)
    assert len(lines) == 1
    assert lines[0].startswith("error: precondition: ")


def test_unknown_substitution_lists_builtins(capsys):
    assert main(["generate", "--substitution", "no_such_thing"]) == 2
    (line,) = error_lines(capsys.readouterr().err)
    assert line.startswith("error: unknown-name: ")
    assert "fibonacci" in line


def test_short_word_is_reported(capsys):
    assert main(["generate", "--word", "ab", "--length", "10"]) == 2
    assert error_lines(capsys.readouterr().err)


def test_cf_expand_sturmian(capsys):
    payload = run_json(capsys, ["cf-expand", "--algorithm", "sturmian", "--vector", "5,2", "--emit", "remainders"])
    result = payload["result"]
    assert result["symbols"] == ["a", "a", "b"]
    assert result["halt_reason"] == "tie"
    assert result["run_lengths"] == [2, 1]
    assert result["remainders"][-1] == ["1", "1"]
    assert payload["config"]["inputs"]["vector"] == "5,2"


def test_cf_expand_outside_cone(capsys):
    assert main(["cf-expand", "--algorithm", "jacobi-perron", "--vector", "3,1,2"]) == 2
    assert error_lines(capsys.readouterr().err)[0].startswith("error: outside-cone: ")


def test_frequencies_of_fibonacci(capsys):
    payload = run_json(capsys, ["frequencies", "--substitution", "fibonacci"])
    result = payload["result"]
    assert result["converged"]
    assert result["f"][0] == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-9)


def test_frequencies_from_directive_file(capsys, tmp_path):
    ds = DirectiveSequence.periodic([get_substitution("tau_a"), get_substitution("tau_b")], name="alternating")
    path = tmp_path / "directive.json"
    path.write_text(json.dumps(directive_to_dict(ds)), encoding="utf-8")
    payload = run_json(capsys, ["frequencies", "--directive", str(path)])
    assert payload["result"]["converged"]
    assert sum(payload["result"]["f"]) == pytest.approx(1.0)


def test_entropy_bound(capsys):
    payload = run_json(capsys, ["entropy-bound", "--substitution", "fibonacci", "--depth", "20"])
    assert payload["result"]["bound"] == pytest.approx(math.log(2) / 10946, rel=1e-9)


def test_primitivity_of_swap(capsys):
    payload = run_json(capsys, ["primitivity", "--substitution", "swap", "--r-max", "4"])
    assert payload["result"]["substitution"]["primitive"] is False
    assert payload["result"]["directive"]["weak_status"] == "unknown"
    assert payload["result"]["growth"]["growing"] is False


def test_lyapunov_on_builtin_graph(capsys):
    payload = run_json(capsys, ["lyapunov", "--graph", "fibonacci", "--steps", "512", "--trajectories", "8"])
    estimate = payload["result"]["estimate"]
    assert estimate["theta1"] == pytest.approx(LOG_PHI, rel=0.05)
    assert len(estimate["per_trajectory"]) == 8
    assert payload["result"]["pisot"]["verdict"] == "pisot"


def test_lyapunov_on_graph_file(capsys, tmp_path):
    graph = get_graph("sturmian")
    path = tmp_path / "graph.json"
    path.write_text(json.dumps(graph_to_dict(graph, uniform_measure(graph))), encoding="utf-8")
    assert main(["lyapunov", "--graph", str(path), "--steps", "128", "--trajectories", "4", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "trajectory,theta1,theta2"
    assert len(lines) == 2 + 4


def test_cassaigne_reproduces_word(capsys):
    payload = run_json(capsys, ["cassaigne", "--word", "abcab"])
    result = payload["result"]
    assert result["reproduces"] is True
    assert result["everywhere_growing"] is False
    assert result["alphabet"] == ["a", "b", "c", "ℓ"]
    assert result["seeds"] == ["a", "ℓ", "ℓ", "ℓ", "ℓ", "ℓ"]


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    assert main(["generate", "--word", "abab", "--length", "3", "--output", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(target.read_text(encoding="utf-8"))["result"]["word"] == "aba"


def test_missing_word_file_is_an_io_error(capsys, tmp_path):
    assert main(["generate", "--word-file", str(tmp_path / "missing.txt")]) == 2
    assert error_lines(capsys.readouterr().err)[0].startswith("error: io: ")
