"""
main.py
────────────────────────────────────────────────────────────────────────────────
Command-line entry point. Each subcommand delegates to one module operation
and writes JSON, CSV or a text table; every output embeds its effective
configuration. Precondition failures exit with status 2 and a single line
``error: <reason>: <message>`` on stderr.
"""

import argparse
import sys
from typing import Any, Callable, Dict, List, Optional

import pandas as pd
from pydantic import ValidationError

from base import RunConfig
from cf import accelerate, cf_expand, get_map, parse_vector, run_lengths
from cocycle import lyapunov, parry_measure, pisot_report, uniform_measure, validate_measure
from config import N_MAX, RENORM_PERIOD, TOL, WARMUP_STEPS, WORKERS, effective_config
from errors import PreconditionError, SAdicError
from file_formats import expansion_to_dict, load_directive, load_graph, resolve_substitution, substitution_to_dict, write_result
from logger_utils import log_error, log_info, log_timed, new_run_id
from sadic import (
    DirectiveSequence,
    approximant,
    cassaigne_expansion,
    convergence_table,
    entropy_upper_bound,
    everywhere_growing_check,
    generalized_eigenvector,
    limit_word_stream,
    primitivity_check,
)
from substitution import fixed_point_stream, is_primitive
from words import (
    WordStream,
    balance,
    complexity,
    factors,
    parse_word,
    power_concatenation_stream,
    recurrence_function,
    stabilized_complexity,
)

COMPONENT = "cli"

GENERATORS = {"power-concatenation": power_concatenation_stream}


# ──────────────────────────────────────────────────────────────────────────────
# SOURCES
# ──────────────────────────────────────────────────────────────────────────────

def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def add_word_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--word", help="Literal word (characters, or space-separated tokens)")
    source.add_argument("--word-file", help="File holding a word")
    source.add_argument("--substitution", help="Built-in name or JSON file; the word is its fixed point")
    source.add_argument("--directive", help="Directive-sequence JSON file; the word is its limit")
    source.add_argument("--generator", choices=sorted(GENERATORS), help="Built-in word generator")
    parser.add_argument("--seed-letter", default="a", help="Fixed-point letter for --substitution")


def resolve_stream(args: argparse.Namespace) -> WordStream:
    if args.word is not None:
        return WordStream.from_word(parse_word(args.word))
    if args.word_file is not None:
        return WordStream.from_word(parse_word(_read_text(args.word_file)), name=args.word_file)
    if args.substitution is not None:
        return fixed_point_stream(resolve_substitution(args.substitution), args.seed_letter)
    if args.directive is not None:
        return limit_word_stream(load_directive(args.directive))
    return GENERATORS[args.generator]()


def add_directive_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--directive", help="Directive-sequence JSON file")
    source.add_argument("--substitution", help="Built-in name or JSON file, repeated periodically")


def resolve_directive(args: argparse.Namespace) -> DirectiveSequence:
    if args.directive is not None:
        return load_directive(args.directive)
    sub = resolve_substitution(args.substitution)
    return DirectiveSequence.periodic([sub], name=sub.name or "periodic")


def _window(stream: WordStream, prefix_len: int) -> int:
    """Clamp the window to a finite stream."""
    if stream.is_finite:
        return min(prefix_len, stream.length or 0)
    return prefix_len


def _check_positive(**values: int) -> None:
    for name, value in values.items():
        if value is not None and value < 1:
            raise PreconditionError(f"--{name.replace('_', '-')} must be >= 1, got {value}")


# ──────────────────────────────────────────────────────────────────────────────
# SUBCOMMANDS
# ──────────────────────────────────────────────────────────────────────────────

def cmd_generate(args) -> tuple:
    _check_positive(length=args.length)
    stream = resolve_stream(args)
    text = stream.text(args.length)
    return {"word": text, "length": args.length}, pd.DataFrame([{"word": text}])


def cmd_complexity(args) -> tuple:
    _check_positive(max_n=args.max_n, prefix_len=args.prefix_len)
    stream = resolve_stream(args)
    if args.stabilize:
        profile, stable = stabilized_complexity(stream, args.max_n, start_len=args.prefix_len)
    else:
        profile, stable = complexity(factors(stream, _window(stream, args.prefix_len), args.max_n)), None
    recurrence = recurrence_function(stream, profile.prefix_len, args.max_n)
    frame = pd.DataFrame({"n": profile.n, "p": profile.p, "dp": profile.dp, "R": recurrence.R})
    return {"profile": profile, "recurrence": recurrence, "stable_up_to": stable}, frame


def cmd_recurrence(args) -> tuple:
    _check_positive(max_n=args.max_n, prefix_len=args.prefix_len)
    stream = resolve_stream(args)
    profile = recurrence_function(stream, _window(stream, args.prefix_len), args.max_n)
    frame = pd.DataFrame({"n": profile.n, "R": profile.R, "R_prime": profile.return_lengths})
    return profile, frame


def cmd_balance(args) -> tuple:
    _check_positive(max_n=args.max_n, prefix_len=args.prefix_len)
    stream = resolve_stream(args)
    f = [float(v) for v in args.frequencies.split(",")] if args.frequencies else None
    report = balance(stream, _window(stream, args.prefix_len), args.max_n, f=f)
    frame = pd.DataFrame(
        {
            "letter": list(stream.alphabet.letters),
            "imbalance": report.per_letter_imbalance,
            "discrepancy": report.per_letter_discrepancy,
            "frequency": report.frequencies,
        }
    )
    return report, frame


def cmd_frequencies(args) -> tuple:
    ds = resolve_directive(args)
    result = generalized_eigenvector(ds, tol=args.tol, n_max=args.n_max)
    if args.profile_depth is not None:
        return result, convergence_table(ds, result, args.profile_depth)
    frame = pd.DataFrame({"letter": list(result.letters), "f": result.f, "f_digits": result.f_digits})
    return result, frame


def cmd_entropy_bound(args) -> tuple:
    ds = resolve_directive(args)
    bound = entropy_upper_bound(ds, args.depth, length=args.length)
    frame = pd.DataFrame({"depth": list(range(len(bound.profile))), "bound": bound.profile})
    return bound, frame


def cmd_primitivity(args) -> tuple:
    result: Dict[str, Any] = {}
    if args.substitution is not None:
        sub = resolve_substitution(args.substitution)
        result["substitution"] = is_primitive(sub, args.k_max)
        ds = DirectiveSequence.periodic([sub], name=sub.name or "periodic")
    else:
        ds = load_directive(args.directive)
    check = primitivity_check(ds, start=args.start, r_max=args.r_max, scan=args.scan)
    result["directive"] = check
    result["growth"] = everywhere_growing_check(ds, args.growth_depth)
    frame = pd.DataFrame({"n": check.scanned, "witness": check.witnesses})
    return result, frame


def cmd_cf_expand(args) -> tuple:
    vector = parse_vector(args.vector)
    cf_map = get_map(args.algorithm, d=len(vector))
    expansion = cf_expand(cf_map, vector, args.steps)
    if args.accelerate:
        expansion = accelerate(expansion)
    data = expansion_to_dict(expansion, args.emit)
    if args.algorithm == "sturmian" and not args.accelerate:
        data["run_lengths"] = run_lengths(expansion.symbols)
    rows = []
    for k, symbol in enumerate(expansion.symbols):
        row = {"step": k, "symbol": symbol}
        if args.emit == "matrices":
            row["matrix"] = str([list(r) for r in expansion.matrices[k]])
        elif args.emit == "remainders":
            row["remainder"] = ",".join(str(v) for v in data["remainders"][k + 1])
        rows.append(row)
    return data, pd.DataFrame(rows)


def cmd_lyapunov(args) -> tuple:
    graph, measure = load_graph(args.graph)
    if args.measure == "parry":
        measure = parry_measure(graph)
    elif args.measure == "uniform" or measure is None:
        measure = uniform_measure(graph)
    validate_measure(graph, measure)
    estimate = lyapunov(
        graph,
        measure,
        steps=args.steps,
        trajectories=args.trajectories,
        seed=args.seed,
        renorm_period=args.renorm_period,
        warmup=args.warmup,
        workers=args.workers,
    )
    frame = pd.DataFrame(estimate.per_trajectory, columns=["theta1", "theta2"])
    frame.insert(0, "trajectory", range(len(frame)))
    return {"estimate": estimate, "pisot": pisot_report(estimate)}, frame


def cmd_cassaigne(args) -> tuple:
    if args.word is None and args.word_file is None:
        raise PreconditionError("cassaigne needs --word or --word-file")
    word = parse_word(args.word if args.word is not None else _read_text(args.word_file))
    ds = cassaigne_expansion(word)
    rebuilt = approximant(ds, len(word))
    growth = everywhere_growing_check(ds, len(word))
    subs = ds.substitutions(len(word))
    result = {
        "alphabet": list(ds.alphabet(0).letters),
        "substitutions": [substitution_to_dict(s) for s in subs],
        "seeds": [ds.seed(n) for n in range(len(word) + 1)],
        "reproduces": rebuilt.text() == word.text(),
        "everywhere_growing": growth.growing,
    }
    frame = pd.DataFrame({"n": list(range(len(subs))), "substitution": [s.name for s in subs]})
    return result, frame


# ──────────────────────────────────────────────────────────────────────────────
# PARSER
# ──────────────────────────────────────────────────────────────────────────────

def _subparser(subparsers, name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--format", choices=["json", "csv", "text"], default="json", help="Output format")
    parser.add_argument("--output", default=None, help="Output file (stdout when omitted)")
    parser.set_defaults(handler=handler)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sadic",
        description="S-adic expansions: words, substitutions, directive sequences, continued fractions, cocycles.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    p = _subparser(subparsers, "generate", cmd_generate, "Print a prefix of a word")
    add_word_source(p)
    p.add_argument("--length", type=int, default=100, help="Prefix length")

    p = _subparser(subparsers, "complexity", cmd_complexity, "Factor complexity p(n) on a prefix window")
    add_word_source(p)
    p.add_argument("--prefix-len", type=int, default=10000, help="Window length")
    p.add_argument("--max-n", type=int, default=50, help="Largest factor length")
    p.add_argument("--stabilize", action="store_true", help="Double the window until p(1..max-n) stops changing")

    p = _subparser(subparsers, "recurrence", cmd_recurrence, "Window recurrence function R(n) and R'(n)")
    add_word_source(p)
    p.add_argument("--prefix-len", type=int, default=10000, help="Window length")
    p.add_argument("--max-n", type=int, default=20, help="Largest factor length")

    p = _subparser(subparsers, "balance", cmd_balance, "Imbalance and discrepancy on a prefix window")
    add_word_source(p)
    p.add_argument("--prefix-len", type=int, default=1 << 16, help="Window length")
    p.add_argument("--max-n", type=int, default=100, help="Largest factor length compared")
    p.add_argument("--frequencies", default=None, help="Comma-separated frequency vector (empirical when omitted)")

    p = _subparser(subparsers, "frequencies", cmd_frequencies, "Generalized right eigenvector by cone contraction")
    add_directive_source(p)
    p.add_argument("--tol", type=float, default=TOL, help="Hilbert-diameter tolerance")
    p.add_argument("--n-max", type=int, default=N_MAX, help="Depth cap")
    p.add_argument("--profile-depth", type=int, default=None, help="Emit the convergence table up to this depth")

    p = _subparser(subparsers, "entropy-bound", cmd_entropy_bound, "Upper bound on the entropy from image lengths")
    add_directive_source(p)
    p.add_argument("--depth", type=int, default=20, help="Largest depth n")
    p.add_argument("--length", type=int, default=None, help="Also bound log p(N)/N at this N")

    p = _subparser(subparsers, "primitivity", cmd_primitivity, "Primitivity witnesses and growth")
    add_directive_source(p)
    p.add_argument("--k-max", type=int, default=None, help="Power bound for a single substitution (Wielandt when omitted)")
    p.add_argument("--start", type=int, default=0, help="First index scanned")
    p.add_argument("--r-max", type=int, default=16, help="Longest block tried")
    p.add_argument("--scan", type=int, default=None, help="Number of indices scanned (r-max + 1 when omitted)")
    p.add_argument("--growth-depth", type=int, default=32, help="Depth of the everywhere-growing check")

    p = _subparser(subparsers, "cf-expand", cmd_cf_expand, "Continued-fraction expansion of a vector")
    p.add_argument("--algorithm", choices=["sturmian", "arnoux-rauzy", "jacobi-perron"], required=True)
    p.add_argument("--vector", required=True, help="Comma-separated entries; p/q tokens stay exact")
    p.add_argument("--steps", type=int, default=20, help="Maximal number of steps")
    p.add_argument("--emit", choices=["symbols", "matrices", "remainders"], default="symbols")
    p.add_argument("--accelerate", action="store_true", help="Group runs of equal symbols")

    p = _subparser(subparsers, "lyapunov", cmd_lyapunov, "Lyapunov exponents of a graph cocycle")
    p.add_argument("--graph", required=True, help="Graph JSON file or built-in graph name")
    p.add_argument("--measure", choices=["file", "uniform", "parry"], default="file", help="Path measure (uniform when the file has none)")
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--trajectories", type=int, default=64)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--renorm-period", type=int, default=RENORM_PERIOD)
    p.add_argument("--warmup", type=int, default=WARMUP_STEPS)
    p.add_argument("--workers", type=int, default=WORKERS)

    p = _subparser(subparsers, "cassaigne", cmd_cassaigne, "Universal expansion of a finite word")
    p.add_argument("--word", default=None, help="Literal word")
    p.add_argument("--word-file", default=None, help="File holding a word")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    skip = {"handler", "subcommand", "format", "output"}
    values = {k: v for k, v in vars(args).items() if k not in skip}
    input_keys = {"word", "word_file", "substitution", "directive", "generator", "graph", "vector"}
    return RunConfig(
        subcommand=args.subcommand,
        inputs={k: (None if v is None else str(v)) for k, v in values.items() if k in input_keys},
        parameters={k: v for k, v in values.items() if k not in input_keys},
        output_format=args.format,
        environment=effective_config(),
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = run_config(args)
    run_id = new_run_id()
    log_info(f"▶️ {config.subcommand} {config.inputs}", COMPONENT, run_id)
    try:
        with log_timed(config.subcommand, COMPONENT, run_id):
            result, frame = args.handler(args)
        write_result(result, frame, config, args.output)
    except SAdicError as exc:
        log_error(exc.one_line(), COMPONENT, run_id)
        print(exc.one_line(), file=sys.stderr)
        return 2
    except ValidationError as exc:
        message = str(exc).replace("\n", " ")
        log_error(message, COMPONENT, run_id)
        print(f"error: precondition: {message}", file=sys.stderr)
        return 2
    except OSError as exc:
        log_error(str(exc), COMPONENT, run_id)
        print(f"error: io: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
