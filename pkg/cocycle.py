"""
cocycle.py
────────────────────────────────────────────────────────────────────────────────
S-adic graphs with Markov measures on their edge paths, the matrix cocycle
A_n(γ) = M_{γ_0}⋯M_{γ_{n-1}} and Monte Carlo Lyapunov exponents θ₁ ≥ θ₂.

Trajectories are independent: each one gets its own RNG stream spawned from
the run seed, so results are identical whatever the worker count.
"""

import math
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy

from base import (
    IncidenceMatrix,
    LyapunovEstimate,
    PathMeasure,
    PisotReport,
    PositivePathResult,
    SAdicGraph,
)
from config import RENORM_PERIOD, WARMUP_STEPS, WORKERS
from errors import MeasureError, NonInvertibleError, PathError, PreconditionError, UnknownNameError
from logger_utils import log_debug, log_error, log_info, log_warning
from sadic import AUTO, DirectiveSequence, SeedSpec, balance_criterion_partial_sums, generalized_eigenvector
from substitution import exact_array, incidence

COMPONENT = "graph-lyap"

MEASURE_TOL = 1e-9
EXPONENT_EPS = 1e-9
SAMPLE_CHUNK = 1024


# ──────────────────────────────────────────────────────────────────────────────
# GRAPHS AND MEASURES
# ──────────────────────────────────────────────────────────────────────────────

def _reachable(graph: SAdicGraph, start: str, forward: bool) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        vertex = queue.popleft()
        for edge in graph.edges:
            src, dst = (edge.source, edge.target) if forward else (edge.target, edge.source)
            if src == vertex and dst not in seen:
                seen.add(dst)
                queue.append(dst)
    return seen


def is_strongly_connected(graph: SAdicGraph) -> bool:
    start = graph.vertices[0]
    everything = set(graph.vertices)
    return _reachable(graph, start, True) == everything and _reachable(graph, start, False) == everything


def check_graph(graph: SAdicGraph) -> SAdicGraph:
    if not is_strongly_connected(graph):
        log_warning(f"graph '{graph.name}' is not strongly connected", COMPONENT)
    return graph


def _edge_index(graph: SAdicGraph, edge_id: str) -> int:
    try:
        return graph.edge_index(edge_id)
    except KeyError:
        raise UnknownNameError("edge", edge_id, [edge.id for edge in graph.edges]) from None


def _follows(graph: SAdicGraph, i: int, j: int) -> bool:
    return graph.edges[i].target == graph.edges[j].source


def validate_measure(graph: SAdicGraph, measure: PathMeasure) -> PathMeasure:
    ids = tuple(edge.id for edge in graph.edges)
    if measure.edge_ids != ids:
        raise MeasureError(f"measure is indexed by {list(measure.edge_ids)}, the graph has edges {list(ids)}")
    initial = np.asarray(measure.initial, dtype=float)
    transitions = np.asarray(measure.transitions, dtype=float)
    k = len(ids)
    if initial.shape != (k,) or transitions.shape != (k, k):
        raise MeasureError(f"measure shapes must be ({k},) and ({k}, {k})")
    if (initial < 0).any() or (transitions < 0).any():
        raise MeasureError("probabilities must be non-negative")
    if abs(initial.sum() - 1.0) > MEASURE_TOL:
        raise MeasureError(f"initial law sums to {initial.sum():.12g}, not 1")
    for i in range(k):
        if abs(transitions[i].sum() - 1.0) > MEASURE_TOL:
            raise MeasureError(f"transition row of edge '{ids[i]}' sums to {transitions[i].sum():.12g}, not 1")
        for j in range(k):
            if transitions[i, j] > 0 and not _follows(graph, i, j):
                raise MeasureError(f"transition '{ids[i]}' -> '{ids[j]}' does not follow an adjacency")
    return measure


def stationary_distribution(measure: PathMeasure) -> np.ndarray:
    """Left fixed vector of the edge transition matrix, normalized to sum 1."""
    transitions = np.asarray(measure.transitions, dtype=float)
    k = len(transitions)
    system = np.vstack([transitions.T - np.eye(k), np.ones((1, k))])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _with_stationary_start(edge_ids, transitions) -> PathMeasure:
    draft = PathMeasure(edge_ids=edge_ids, initial=(1.0,) + (0.0,) * (len(edge_ids) - 1), transitions=transitions)
    pi = stationary_distribution(draft)
    return PathMeasure(edge_ids=edge_ids, initial=tuple(pi.tolist()), transitions=transitions)


def uniform_measure(graph: SAdicGraph) -> PathMeasure:
    """Next edge uniform among the edges leaving the current vertex; stationary start."""
    check_graph(graph)
    k = len(graph.edges)
    rows = []
    for i in range(k):
        options = [j for j in range(k) if _follows(graph, i, j)]
        if not options:
            raise MeasureError(f"no edge leaves the target of '{graph.edges[i].id}'")
        rows.append(tuple(1.0 / len(options) if j in options else 0.0 for j in range(k)))
    return _with_stationary_start(tuple(edge.id for edge in graph.edges), tuple(rows))


def parry_measure(graph: SAdicGraph) -> PathMeasure:
    """Measure of maximal entropy: P(e -> e') = v_{r(e')} / (λ v_{r(e)}), (λ, v) the Perron data of the vertex matrix."""
    check_graph(graph)
    index = {vertex: i for i, vertex in enumerate(graph.vertices)}
    adjacency = np.zeros((len(index), len(index)))
    for edge in graph.edges:
        adjacency[index[edge.source], index[edge.target]] += 1
    values, vectors = np.linalg.eig(adjacency)
    top = int(np.argmax(values.real))
    lam = float(values[top].real)
    v = np.abs(vectors[:, top].real)
    if lam <= 0 or (v <= 0).any():
        log_error(f"no positive Perron vector for graph '{graph.name}'", COMPONENT)
        raise MeasureError("the maximal-entropy measure needs a strongly connected graph")
    rows = []
    for e in graph.edges:
        rows.append(
            tuple(
                float(v[index[f.target]] / (lam * v[index[e.target]])) if f.source == e.target else 0.0
                for f in graph.edges
            )
        )
    return _with_stationary_start(tuple(edge.id for edge in graph.edges), tuple(rows))


@lru_cache(maxsize=512)
def _determinant(entries: Tuple[Tuple[int, ...], ...]) -> int:
    return int(sympy.Matrix(entries).det())


def expected_log_det(graph: SAdicGraph, measure: PathMeasure) -> float:
    """Σ_e π_e log|det M_e|, the reference value for θ₁ + ⋯ + θ_d."""
    validate_measure(graph, measure)
    pi = stationary_distribution(measure)
    total = 0.0
    for weight, edge in zip(pi, graph.edges):
        det = _determinant(incidence(edge.substitution).entries)
        if det == 0:
            raise NonInvertibleError(f"edge '{edge.id}' has a singular matrix")
        total += weight * math.log(abs(det))
    return total


# ──────────────────────────────────────────────────────────────────────────────
# PATHS
# ──────────────────────────────────────────────────────────────────────────────

def cocycle_product(graph: SAdicGraph, path: Sequence[str]) -> IncidenceMatrix:
    """Exact A_n(γ) = M_{γ_0}⋯M_{γ_{n-1}}; identity for the empty path."""
    indices = [_edge_index(graph, edge_id) for edge_id in path]
    for k in range(1, len(indices)):
        if not _follows(graph, indices[k - 1], indices[k]):
            previous, current = graph.edges[indices[k - 1]], graph.edges[indices[k]]
            log_error(f"path breaks adjacency at {k}", COMPONENT)
            raise PathError(k, f"'{previous.id}' ends at {previous.target}, '{current.id}' starts at {current.source}")
    product = exact_array(IncidenceMatrix.identity(graph.alphabet.size))
    for i in indices:
        product = product.dot(exact_array(incidence(graph.edges[i].substitution)))
    return IncidenceMatrix.from_rows(product.tolist())


class _Sampler:
    """Markov sampling of edge indices from cumulative laws."""

    def __init__(self, measure: PathMeasure):
        self.initial = np.cumsum(np.asarray(measure.initial, dtype=float))
        self.rows = np.cumsum(np.asarray(measure.transitions, dtype=float), axis=1)
        self.iid = bool(np.allclose(self.rows, self.rows[0]))
        self.top = len(measure.edge_ids) - 1

    def _pick(self, cdf: np.ndarray, u) -> np.ndarray:
        return np.minimum(np.searchsorted(cdf, u, side="right"), self.top)

    def sample(self, rng: np.random.Generator, n: int, previous: Optional[int] = None) -> np.ndarray:
        if n <= 0:
            return np.zeros(0, dtype=np.int64)
        u = rng.random(n)
        out = np.empty(n, dtype=np.int64)
        out[0] = self._pick(self.initial if previous is None else self.rows[previous], u[0])
        if self.iid:
            out[1:] = self._pick(self.rows[0], u[1:])
            return out
        for k in range(1, n):
            out[k] = self._pick(self.rows[out[k - 1]], u[k])
        return out


def random_path(graph: SAdicGraph, measure: PathMeasure, seed: int, n: int) -> List[str]:
    validate_measure(graph, measure)
    if n < 0:
        raise PreconditionError(f"path length must be non-negative, got {n}")
    indices = _Sampler(measure).sample(np.random.default_rng(seed), n)
    return [graph.edges[i].id for i in indices.tolist()]


class _LazyPath:
    """Edge ids sampled chunk by chunk on demand; deterministic for a given seed."""

    def __init__(self, graph: SAdicGraph, measure: PathMeasure, seed: int):
        self.graph = graph
        self.sampler = _Sampler(measure)
        self.rng = np.random.default_rng(seed)
        self.indices: List[int] = []
        self.lock = threading.Lock()

    def __call__(self, n: int) -> str:
        with self.lock:
            while len(self.indices) <= n:
                previous = self.indices[-1] if self.indices else None
                self.indices.extend(self.sampler.sample(self.rng, SAMPLE_CHUNK, previous).tolist())
            return self.graph.edges[self.indices[n]].id


def random_directive_sequence(
    graph: SAdicGraph, measure: PathMeasure, seed: int, seeds: SeedSpec = AUTO
) -> DirectiveSequence:
    validate_measure(graph, measure)
    return DirectiveSequence.graph_path(graph, _LazyPath(graph, measure, seed), seeds=seeds, name=f"random({graph.name}, seed={seed})")


def positive_path_search(graph: SAdicGraph, max_len: int) -> PositivePathResult:
    """Shortest edge path with a positive matrix product, breadth-first over (vertex, support)."""
    if max_len < 1:
        raise PreconditionError(f"max_len must be >= 1, got {max_len}")
    supports = [np.asarray(incidence(edge.substitution).entries, dtype=np.int64) > 0 for edge in graph.edges]
    queue = deque()
    seen = set()
    for i, edge in enumerate(graph.edges):
        key = (edge.target, supports[i].tobytes())
        if key not in seen:
            seen.add(key)
            queue.append((supports[i], [i]))
    while queue:
        support, path = queue.popleft()
        if support.all():
            ids = [graph.edges[i].id for i in path]
            log_info(f"positive path of length {len(ids)} in '{graph.name}'", COMPONENT)
            return PositivePathResult(path=ids, length=len(ids), exhausted=False, max_len=max_len)
        if len(path) >= max_len:
            continue
        last = path[-1]
        for j in range(len(graph.edges)):
            if not _follows(graph, last, j):
                continue
            following = (support.astype(np.int64) @ supports[j].astype(np.int64)) > 0
            key = (graph.edges[j].target, following.tobytes())
            if key not in seen:
                seen.add(key)
                queue.append((following, path + [j]))
    return PositivePathResult(path=None, length=None, exhausted=True, max_len=max_len)


# ──────────────────────────────────────────────────────────────────────────────
# LYAPUNOV EXPONENTS
# ──────────────────────────────────────────────────────────────────────────────

def _trajectory(
    transposed: List[np.ndarray],
    exact_transposed: List[np.ndarray],
    sampler: _Sampler,
    rng: np.random.Generator,
    steps: int,
    renorm_period: int,
    warmup: int,
) -> Tuple[float, float]:
    d = transposed[0].shape[0]
    path = sampler.sample(rng, steps)
    frame = np.column_stack([rng.random(d) + 0.5, rng.standard_normal(d)])

    # exact warm-up on ᵗM_{γ_{k}}⋯ᵗM_{γ_0}
    head = min(warmup, steps)
    exact = None
    for k in range(head):
        m = exact_transposed[path[k]]
        exact = m if exact is None else m.dot(exact)
    if exact is not None:
        frame = np.asarray(exact.dot(frame.astype(object)), dtype=float)

    log_r1 = log_r2 = 0.0

    def renormalize(current: np.ndarray) -> np.ndarray:
        nonlocal log_r1, log_r2
        q, r = np.linalg.qr(current)
        log_r1 += math.log(abs(r[0, 0]))
        log_r2 += math.log(abs(r[1, 1]))
        return q

    frame = renormalize(frame)
    for k in range(head, steps):
        frame = transposed[path[k]] @ frame
        if (k - head + 1) % renorm_period == 0:
            frame = renormalize(frame)
    if (steps - head) % renorm_period:
        frame = renormalize(frame)
    return log_r1 / steps, log_r2 / steps


def lyapunov(
    graph: SAdicGraph,
    measure: PathMeasure,
    steps: int,
    trajectories: int,
    seed: int,
    renorm_period: int = RENORM_PERIOD,
    warmup: int = WARMUP_STEPS,
    workers: int = WORKERS,
) -> LyapunovEstimate:
    """θ₁ and θ₂ from the growth of a two-vector frame under ᵗM_{γ_{n-1}}⋯ᵗM_{γ_0}.

    Each trajectory is re-orthogonalized (QR) every ``renorm_period`` steps;
    logs of the diagonal of R accumulate θ₁ and θ₂. Standard errors are the
    spread across trajectories.
    """
    check_graph(graph)
    validate_measure(graph, measure)
    if graph.alphabet.size < 2:
        raise PreconditionError("two exponents need an alphabet of at least two letters")
    if steps < 1 or trajectories < 1 or renorm_period < 1 or warmup < 0:
        raise PreconditionError("steps, trajectories and renorm_period must be >= 1, warmup >= 0")
    entries = [incidence(edge.substitution).entries for edge in graph.edges]
    for edge, matrix in zip(graph.edges, entries):
        if _determinant(matrix) == 0:
            log_error(f"edge '{edge.id}' of '{graph.name}' is singular", COMPONENT)
            raise NonInvertibleError(f"edge '{edge.id}' has a singular incidence matrix; the cocycle needs invertible matrices")
    transposed = [np.asarray(matrix, dtype=float).T.copy() for matrix in entries]
    exact_transposed = [exact_array(IncidenceMatrix.from_rows(matrix)).T.copy() for matrix in entries]
    sampler = _Sampler(measure)
    streams = np.random.SeedSequence(seed).spawn(trajectories)

    def run(i: int) -> Tuple[float, float]:
        rng = np.random.default_rng(streams[i])
        return _trajectory(transposed, exact_transposed, sampler, rng, steps, renorm_period, warmup)

    log_info(f"🎲 lyapunov on '{graph.name}': {trajectories} x {steps} steps, seed {seed}", COMPONENT)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(trajectories)))
    else:
        results = [run(i) for i in range(trajectories)]

    values = np.asarray(results)
    means = values.mean(axis=0)
    if trajectories > 1:
        stderr = values.std(axis=0, ddof=1) / math.sqrt(trajectories)
    else:
        stderr = np.zeros(2)
    log_debug(f"theta1={means[0]:.6f} theta2={means[1]:.6f}", COMPONENT)
    return LyapunovEstimate(
        theta1=float(means[0]),
        theta2=float(means[1]),
        theta1_stderr=float(stderr[0]),
        theta2_stderr=float(stderr[1]),
        trajectories=trajectories,
        steps=steps,
        renorm_period=renorm_period,
        warmup_steps=warmup,
        seed=seed,
        log_integrable=True,
        per_trajectory=[(float(a), float(b)) for a, b in results],
    )


def pisot_report(estimate: LyapunovEstimate) -> PisotReport:
    """θ₁ > 0 > θ₂ decided on ±2·stderr bands."""
    t1, t2 = estimate.theta1, estimate.theta2
    s1, s2 = 2 * estimate.theta1_stderr, 2 * estimate.theta2_stderr
    if t1 - s1 > EXPONENT_EPS and t2 + s2 < -EXPONENT_EPS:
        verdict = "pisot"
    elif t1 + s1 <= EXPONENT_EPS or t2 - s2 >= -EXPONENT_EPS:
        verdict = "not-pisot"
    else:
        verdict = "inconclusive"
    deviation = t2 / t1 if t1 > EXPONENT_EPS else None
    return PisotReport(
        verdict=verdict,
        theta1=t1,
        theta2=t2,
        deviation_exponent=deviation,
        uniform_approximation_exponent=None if deviation is None else 1 - deviation,
    )


def theta2_cross_check(graph: SAdicGraph, measure: PathMeasure, seed: int, steps: int = 64) -> float:
    """θ₂ as the slope of log‖ᵗA_n restricted to f⊥‖ along one sampled path."""
    if steps < 8:
        raise PreconditionError("the cross-check needs at least 8 steps")
    path = random_path(graph, measure, seed, 4 * steps)
    ds = DirectiveSequence.graph_path(graph, path, name=f"cross-check({graph.name})")
    f = generalized_eigenvector(ds, n_max=4 * steps)
    report = balance_criterion_partial_sums(ds, f, steps)
    ns, logs = [], []
    for n in range(steps // 4, steps):
        if n in report.precision_limited or report.terms[n] <= 0:
            continue
        m_norm = float(np.linalg.norm(np.asarray(incidence(ds.substitution(n)).entries, dtype=float), 2))
        ns.append(n)
        logs.append(math.log(report.terms[n] / m_norm))
    if len(ns) < 2:
        raise PreconditionError("too few reliable terms for a slope; raise SADIC_PRECISION_DIGITS")
    slope, _ = np.polyfit(ns, logs, 1)
    return float(slope)
