"""
file_formats.py
────────────────────────────────────────────────────────────────────────────────
JSON files for substitutions, directive sequences and graphs, and the
result writers shared by every CLI subcommand.

Machine outputs are byte-stable: fields keep declaration order and floats
are rendered with FLOAT_DIGITS significant digits. Every output embeds the
effective run configuration.
"""

import json
import math
import os
import sys
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple, Union

import mpmath
import pandas as pd
from pydantic import BaseModel

from base import CFExpansion, GraphEdge, PathMeasure, RunConfig, SAdicGraph, Substitution
from config import FLOAT_DIGITS
from errors import PreconditionError
from library import get_graph, get_substitution
from logger_utils import log_error, log_info, log_warning
from sadic import AUTO, DirectiveSequence
from substitution import substitution_from_rules

COMPONENT = "file-formats"


# ──────────────────────────────────────────────────────────────────────────────
# READING
# ──────────────────────────────────────────────────────────────────────────────

def read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        log_error(f"invalid JSON in {path}: {exc}", COMPONENT)
        raise PreconditionError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None


def substitution_from_spec(spec: Union[str, Dict[str, Any]]) -> Substitution:
    """A built-in name, or ``{"name", "rules": {letter: image}, "domain", "codomain"}``."""
    if isinstance(spec, str):
        return get_substitution(spec)
    if not isinstance(spec, dict) or "rules" not in spec:
        raise PreconditionError("inline substitutions need a 'rules' mapping")
    return substitution_from_rules(spec.get("name"), spec["rules"], spec.get("domain"), spec.get("codomain"))


def resolve_substitution(value: str) -> Substitution:
    """Built-in name or path to a substitution JSON file."""
    if os.path.isfile(value):
        return substitution_from_spec(read_json(value))
    return get_substitution(value)


def substitution_to_dict(sub: Substitution) -> Dict[str, Any]:
    return {
        "name": sub.name,
        "domain": list(sub.domain.letters),
        "codomain": list(sub.codomain.letters),
        "rules": {
            letter: [sub.codomain.letters[i] for i in image] for letter, image in zip(sub.domain.letters, sub.images)
        },
    }


def directive_from_dict(data: Dict[str, Any]) -> DirectiveSequence:
    kind = data.get("kind", "periodic")
    seeds = data.get("seeds", AUTO)
    name = data.get("name", kind)
    subs = [substitution_from_spec(s) for s in data.get("substitutions", [])]
    if kind == "periodic":
        cycle = [substitution_from_spec(s) for s in data["cycle"]] if "cycle" in data else subs
        return DirectiveSequence.periodic(cycle, seeds=seeds, name=name)
    if kind == "eventually-periodic":
        pre = [substitution_from_spec(s) for s in data.get("pre", [])]
        cycle = [substitution_from_spec(s) for s in data.get("cycle", [])]
        return DirectiveSequence.eventually_periodic(pre, cycle, seeds=seeds, name=name)
    if kind == "explicit":
        return DirectiveSequence.explicit(subs, tail=data.get("tail", "halt"), seeds=seeds, name=name)
    raise PreconditionError(f"unknown directive kind '{kind}'; use periodic, eventually-periodic or explicit")


def load_directive(path: str) -> DirectiveSequence:
    log_info(f"📂 loading directive sequence from {path}", COMPONENT)
    return directive_from_dict(read_json(path))


def directive_to_dict(ds: DirectiveSequence) -> Dict[str, Any]:
    if ds.kind not in ("periodic", "eventually-periodic", "explicit"):
        raise PreconditionError(f"directive sequences of kind '{ds.kind}' have no file form")
    data: Dict[str, Any] = {"kind": ds.kind, "name": ds.name}
    if ds.kind == "periodic":
        data["cycle"] = [substitution_to_dict(s) for s in ds.parts["cycle"]]
    elif ds.kind == "eventually-periodic":
        data["pre"] = [substitution_to_dict(s) for s in ds.parts["pre"]]
        data["cycle"] = [substitution_to_dict(s) for s in ds.parts["cycle"]]
    else:
        data["substitutions"] = [substitution_to_dict(s) for s in ds.parts["substitutions"]]
        data["tail"] = ds.parts["tail"]
    data["seeds"] = ds.seeds if isinstance(ds.seeds, str) else list(ds.seeds)
    return data


def measure_from_dict(graph: SAdicGraph, data: Dict[str, Any]) -> PathMeasure:
    """``{"initial": {edge: p}, "transitions": {edge: {edge: p}}}``; missing entries are 0."""
    ids = tuple(edge.id for edge in graph.edges)
    initial = data.get("initial", {})
    transitions = data.get("transitions", {})
    unknown = (set(initial) | set(transitions)) - set(ids)
    if unknown:
        raise PreconditionError(f"measure mentions unknown edges {sorted(unknown)}")
    return PathMeasure(
        edge_ids=ids,
        initial=tuple(float(initial.get(e, 0.0)) for e in ids),
        transitions=tuple(tuple(float(transitions.get(e, {}).get(f, 0.0)) for f in ids) for e in ids),
    )


def graph_from_dict(data: Dict[str, Any]) -> Tuple[SAdicGraph, Optional[PathMeasure]]:
    edges = []
    for item in data.get("edges", []):
        edges.append(
            GraphEdge(
                id=str(item["id"]),
                source=str(item["from"]),
                target=str(item["to"]),
                substitution=substitution_from_spec(item["substitution"]),
            )
        )
    if not edges:
        raise PreconditionError("graph file lists no edges")
    vertices = tuple(str(v) for v in data.get("vertices", []))
    if not vertices:
        vertices = tuple(dict.fromkeys([e.source for e in edges] + [e.target for e in edges]))
    graph = SAdicGraph(
        name=data.get("name", "graph"),
        alphabet=edges[0].substitution.domain,
        vertices=vertices,
        edges=tuple(edges),
    )
    measure = measure_from_dict(graph, data["measure"]) if "measure" in data else None
    return graph, measure


def load_graph(value: str) -> Tuple[SAdicGraph, Optional[PathMeasure]]:
    """Path to a graph JSON file, or the name of a built-in graph (no measure)."""
    if os.path.isfile(value):
        log_info(f"📂 loading graph from {value}", COMPONENT)
        return graph_from_dict(read_json(value))
    if value.endswith(".json"):
        name = os.path.splitext(os.path.basename(value))[0]
        log_warning(f"⚠️ no graph file at {value}; using the built-in graph '{name}'", COMPONENT)
        return get_graph(name), None
    return get_graph(value), None


def graph_to_dict(graph: SAdicGraph, measure: Optional[PathMeasure] = None) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "name": graph.name,
        "vertices": list(graph.vertices),
        "edges": [
            {"id": e.id, "from": e.source, "to": e.target, "substitution": substitution_to_dict(e.substitution)}
            for e in graph.edges
        ],
    }
    if measure is not None:
        data["measure"] = {
            "initial": dict(zip(measure.edge_ids, measure.initial)),
            "transitions": {
                e: {f: p for f, p in zip(measure.edge_ids, row) if p > 0}
                for e, row in zip(measure.edge_ids, measure.transitions)
            },
        }
    return data


# ──────────────────────────────────────────────────────────────────────────────
# WRITING
# ──────────────────────────────────────────────────────────────────────────────

def render_number(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, mpmath.mpf):
        return mpmath.nstr(value, FLOAT_DIGITS)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return float(f"{value:.{FLOAT_DIGITS}g}")
    return value


def normalize(obj: Any) -> Any:
    """JSON-ready copy: models dumped, tuples listed, numbers rendered."""
    if isinstance(obj, BaseModel):
        obj = obj.model_dump()
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    return render_number(obj)


def expansion_to_dict(expansion: CFExpansion, emit: str = "symbols") -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "algorithm": expansion.algorithm,
        "x": normalize(expansion.x),
        "exact": expansion.exact,
        "steps": expansion.steps,
        "halt_reason": expansion.halt_reason,
        "symbols": list(expansion.symbols),
    }
    if emit == "matrices":
        data["matrices"] = [[list(row) for row in m] for m in expansion.matrices]
    elif emit == "remainders":
        data["remainders"] = normalize(expansion.remainders)
    return data


def emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def json_text(result: Any, config: RunConfig) -> str:
    payload = {"config": normalize(config), "result": normalize(result)}
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def config_line(config: RunConfig) -> str:
    return "# config: " + json.dumps(normalize(config), ensure_ascii=False, sort_keys=True) + "\n"


def table_text(frame: pd.DataFrame, config: RunConfig, fmt: str) -> str:
    if fmt == "csv":
        return config_line(config) + frame.to_csv(index=False, float_format=f"%.{FLOAT_DIGITS}g", lineterminator="\n")
    return f"# {config.subcommand}\n" + config_line(config) + frame.to_string(index=False) + "\n"


def write_result(
    result: Any,
    frame: Optional[pd.DataFrame],
    config: RunConfig,
    output: Optional[str] = None,
) -> None:
    """JSON gets the full result; csv and text get the table (or a one-row table of the result)."""
    if config.output_format == "json":
        emit(json_text(result, config), output)
        return
    if frame is None:
        flat = normalize(result)
        frame = pd.DataFrame([{k: v if not isinstance(v, (list, dict)) else json.dumps(v) for k, v in flat.items()}])
    emit(table_text(frame, config, config.output_format), output)
