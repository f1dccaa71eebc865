from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import AlphabetMismatchError


# ──────────────────────────────────────────────────────────────────────────────
# WORDS
# ──────────────────────────────────────────────────────────────────────────────

class Alphabet(BaseModel):
    """Ordered finite alphabet; the position of a letter is its matrix coordinate."""

    model_config = ConfigDict(frozen=True)

    letters: Tuple[str, ...] = Field(..., description="Distinct letters, index 0..d-1")

    @field_validator("letters")
    @classmethod
    def _check_letters(cls, letters):
        if not letters:
            raise ValueError("alphabet must be non-empty")
        if len(set(letters)) != len(letters):
            raise ValueError(f"alphabet letters must be distinct: {letters}")
        if any(not letter for letter in letters):
            raise ValueError("letters must be non-empty strings")
        return letters

    @property
    def size(self) -> int:
        return len(self.letters)

    @property
    def multichar(self) -> bool:
        return any(len(letter) > 1 for letter in self.letters)

    def index(self, letter: str) -> int:
        try:
            return self.letters.index(letter)
        except ValueError:
            raise AlphabetMismatchError(f"letter '{letter}' not in alphabet {list(self.letters)}") from None

    def encode(self, letters) -> Tuple[int, ...]:
        lookup = {letter: i for i, letter in enumerate(self.letters)}
        try:
            return tuple(lookup[letter] for letter in letters)
        except KeyError as exc:
            raise AlphabetMismatchError(f"letter {exc} not in alphabet {list(self.letters)}") from None

    def decode(self, symbols) -> str:
        sep = " " if self.multichar else ""
        return sep.join(self.letters[s] for s in symbols)


class FiniteWord(BaseModel):
    model_config = ConfigDict(frozen=True)

    alphabet: Alphabet
    symbols: Tuple[int, ...] = Field(default=(), description="Letter indices into the alphabet")

    @model_validator(mode="after")
    def _check_symbols(self):
        if self.symbols and (min(self.symbols) < 0 or max(self.symbols) >= self.alphabet.size):
            raise ValueError(f"symbol index out of range for alphabet of size {self.alphabet.size}")
        return self

    def __len__(self) -> int:
        return len(self.symbols)

    def text(self) -> str:
        return self.alphabet.decode(self.symbols)


class FactorTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    alphabet: Alphabet
    max_length: int = Field(..., description="Largest factor length collected")
    factors_by_length: Dict[int, Tuple[Tuple[int, ...], ...]] = Field(
        ..., description="Distinct factors per length, lexicographic by letter index"
    )
    prefix_len: Optional[int] = Field(None, description="Prefix window the factors were read from")
    depth: Optional[int] = Field(None, description="Expansion depth for S-adic language tables")

    def count(self, n: int) -> int:
        return len(self.factors_by_length.get(n, ()))

    def contains(self, factor: Tuple[int, ...]) -> bool:
        return tuple(factor) in set(self.factors_by_length.get(len(factor), ()))


class ComplexityProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: List[int]
    p: List[int]
    dp: List[Optional[int]] = Field(..., description="p(n+1) - p(n); None on the last row")
    prefix_len: Optional[int] = None


class EntropyEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimate: float = Field(..., description="log p(N)/N at the largest N")
    ratios: List[float] = Field(..., description="log p(n)/n for every n")
    envelope: List[float] = Field(..., description="Running minimum of the ratios")


class RecurrenceProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: List[int]
    R: List[Optional[int]] = Field(..., description="Window recurrence function, None when undetermined")
    return_lengths: List[Optional[int]] = Field(..., description="R'(n): longest return word in the window")
    undetermined: List[int] = Field(default_factory=list)
    prefix_len: int


class BalanceReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    imbalance: int = Field(..., description="B-hat: max over letters and lengths of the count spread")
    per_letter_imbalance: List[int]
    discrepancy: float = Field(..., description="Delta-hat over all prefixes of the window")
    per_letter_discrepancy: List[float]
    frequencies: List[float]
    frequency_source: Literal["empirical", "supplied"]
    window_length: int
    max_n: int
    relation_holds: bool = Field(..., description="Delta <= B and B <= 4 Delta on this window")


# ──────────────────────────────────────────────────────────────────────────────
# SUBSTITUTIONS
# ──────────────────────────────────────────────────────────────────────────────

class Substitution(BaseModel):
    """Non-erasing morphism sending each domain letter to a word over the codomain."""

    model_config = ConfigDict(frozen=True)

    name: Optional[str] = None
    domain: Alphabet
    codomain: Alphabet
    images: Tuple[Tuple[int, ...], ...] = Field(..., description="Image of each domain letter, as codomain indices")

    @model_validator(mode="after")
    def _check_images(self):
        if len(self.images) != self.domain.size:
            raise ValueError(f"{len(self.images)} images for a domain of size {self.domain.size}")
        for letter, image in zip(self.domain.letters, self.images):
            if not image:
                raise ValueError(f"erasing image for letter '{letter}'")
            if min(image) < 0 or max(image) >= self.codomain.size:
                raise ValueError(f"image of '{letter}' uses letters outside the codomain")
        return self

    @property
    def is_square(self) -> bool:
        return self.domain == self.codomain

    def image(self, letter: str) -> FiniteWord:
        return FiniteWord(alphabet=self.codomain, symbols=self.images[self.domain.index(letter)])

    def rules(self) -> Dict[str, str]:
        return {letter: self.codomain.decode(image) for letter, image in zip(self.domain.letters, self.images)}

    def label(self) -> str:
        return self.name or "{" + ", ".join(f"{k}->{v}" for k, v in self.rules().items()) + "}"


class IncidenceMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: int = Field(..., description="Codomain size")
    cols: int = Field(..., description="Domain size")
    entries: Tuple[Tuple[int, ...], ...] = Field(..., description="Exact non-negative integer entries")

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.entries) != self.rows or any(len(row) != self.cols for row in self.entries):
            raise ValueError(f"entries do not form a {self.rows}x{self.cols} matrix")
        if any(value < 0 for row in self.entries for value in row):
            raise ValueError("incidence entries must be non-negative")
        return self

    @classmethod
    def from_rows(cls, rows) -> "IncidenceMatrix":
        entries = tuple(tuple(int(v) for v in row) for row in rows)
        return cls(rows=len(entries), cols=len(entries[0]) if entries else 0, entries=entries)

    @classmethod
    def identity(cls, d: int) -> "IncidenceMatrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(d)] for i in range(d)])

    def column_sums(self) -> List[int]:
        return [sum(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)]

    def is_positive(self) -> bool:
        return all(value > 0 for row in self.entries for value in row)


class PerronData(BaseModel):
    model_config = ConfigDict(frozen=True)

    eigenvalue: float = Field(..., description="Dominant eigenvalue lambda")
    right_eigenvector: List[float] = Field(..., description="Positive, normalized to sum 1")
    residual: float = Field(..., description="|Mv - lambda v|_1")
    iterations: int
    distance: float = Field(..., description="Hilbert distance between the last two iterates")


class PrimitivityResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    primitive: bool
    witness: Optional[int] = Field(None, description="Least k with M^k > 0")
    k_max: int


class PrefixSuffixEdge(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: str = Field(..., description="Letter b whose image is factored")
    target: str = Field(..., description="Letter a at the factoring position")
    prefix: Tuple[str, ...]
    suffix: Tuple[str, ...]


class PrefixSuffixAutomaton(BaseModel):
    model_config = ConfigDict(frozen=True)

    states: Tuple[str, ...]
    edges: Tuple[PrefixSuffixEdge, ...]


class GrowthBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    beta_minus: int
    beta_plus: int


# ──────────────────────────────────────────────────────────────────────────────
# S-ADIC ANALYSES
# ──────────────────────────────────────────────────────────────────────────────

class GrowthProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    growing: bool
    beta_minus: List[int] = Field(..., description="beta_n^- for n = 0..depth")
    depth: int


class DirectivePrimitivity(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: int
    r_max: int
    weak_witness: Optional[int] = Field(None, description="Least r with M_start...M_start+r > 0")
    weak_status: Literal["witness", "unknown"]
    strong_witness: Optional[int] = Field(None, description="One r working for every scanned n")
    strong_status: Literal["witness", "unknown"]
    scanned: List[int]
    witnesses: List[Optional[int]]


class FrequencyResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    f: List[float] = Field(..., description="Generalized right eigenvector, sums to 1")
    f_digits: List[str] = Field(default_factory=list, description="High-precision decimal rendering of f")
    depth: int
    diameter: float = Field(..., description="Hilbert diameter of the cone at the stopping depth")
    converged: bool
    letters: Tuple[str, ...] = ()
    refined_depth: Optional[int] = Field(None, description="Depth at which f_digits were read off")
    refined_diameter: Optional[float] = Field(None, description="Cone diameter behind f_digits")


class ConvergenceProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    depth: int
    weak: List[float] = Field(..., description="|A_n e_i / |A_n e_i|_1 - f|_2 per letter")
    strong: List[float] = Field(..., description="Euclidean distance of A_n e_i to the line R f")
    diameter: float
    delta: float = Field(..., description="max | |w|_i/|w| - f_i | over images w of letters")


class CriterionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    terms: List[float]
    partial_sums: List[float]
    tail_ratio: Optional[float] = Field(None, description="Geometric mean ratio of successive reliable terms")
    two_step_ratio: Optional[float] = None
    precision_limited: List[int] = Field(default_factory=list, description="Indices dominated by the error in f")
    verdict: str


class EntropyBound(BaseModel):
    model_config = ConfigDict(frozen=True)

    bound: float = Field(..., description="min over n of log Card A_n / beta_n^-")
    depth: int = Field(..., description="Depth attaining the minimum")
    profile: List[float]
    length: Optional[int] = None
    finite_length_bound: Optional[float] = Field(None, description="Bound on log p(N)/N at N = length")
    finite_length_depth: Optional[int] = None


class PrefixSuffixStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    prefix: Tuple[str, ...]
    letter: str
    suffix: Tuple[str, ...]


# ──────────────────────────────────────────────────────────────────────────────
# CONTINUED FRACTIONS
# ──────────────────────────────────────────────────────────────────────────────

class CFExpansion(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    algorithm: str
    x: Tuple[Any, ...] = Field(..., description="Input vector (Fraction or mpf entries)")
    symbols: Tuple[str, ...] = ()
    matrices: Tuple[Tuple[Tuple[int, ...], ...], ...] = ()
    substitutions: Tuple[Substitution, ...] = ()
    remainders: Tuple[Tuple[Any, ...], ...] = Field((), description="F^k(x) for k = 0..steps")
    exact: bool = True
    halt_reason: Optional[str] = None

    @property
    def steps(self) -> int:
        return len(self.symbols)


# ──────────────────────────────────────────────────────────────────────────────
# GRAPHS AND COCYCLES
# ──────────────────────────────────────────────────────────────────────────────

class GraphEdge(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    source: str
    target: str
    substitution: Substitution


class SAdicGraph(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "graph"
    alphabet: Alphabet
    vertices: Tuple[str, ...]
    edges: Tuple[GraphEdge, ...]

    @model_validator(mode="after")
    def _check_edges(self):
        ids = [edge.id for edge in self.edges]
        if not self.edges or len(set(ids)) != len(ids):
            raise ValueError("graph needs at least one edge and distinct edge ids")
        for edge in self.edges:
            if edge.source not in self.vertices or edge.target not in self.vertices:
                raise ValueError(f"edge '{edge.id}' uses an unknown vertex")
            sub = edge.substitution
            if sub.domain != self.alphabet or sub.codomain != self.alphabet:
                raise ValueError(f"edge '{edge.id}' substitution is not over the graph alphabet")
        return self

    def edge_index(self, edge_id: str) -> int:
        for i, edge in enumerate(self.edges):
            if edge.id == edge_id:
                return i
        raise KeyError(edge_id)


class PathMeasure(BaseModel):
    """Markov measure on edge paths: initial law plus edge-to-edge transitions."""

    model_config = ConfigDict(frozen=True)

    edge_ids: Tuple[str, ...]
    initial: Tuple[float, ...]
    transitions: Tuple[Tuple[float, ...], ...]


class LyapunovEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta1: float
    theta2: float
    theta1_stderr: float
    theta2_stderr: float
    trajectories: int
    steps: int
    renorm_period: int
    warmup_steps: int
    seed: int
    log_integrable: bool
    per_trajectory: List[Tuple[float, float]] = Field(default_factory=list)


class PisotReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: Literal["pisot", "not-pisot", "inconclusive"]
    theta1: float
    theta2: float
    deviation_exponent: Optional[float] = Field(None, description="theta2 / theta1")
    uniform_approximation_exponent: Optional[float] = Field(None, description="1 - theta2 / theta1")


class PositivePathResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: Optional[List[str]] = None
    length: Optional[int] = None
    exhausted: bool
    max_len: int


# ──────────────────────────────────────────────────────────────────────────────
# CLI
# ──────────────────────────────────────────────────────────────────────────────

class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    subcommand: str
    inputs: Dict[str, Optional[str]] = Field(default_factory=dict, description="Input files and names")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Numeric parameters after defaults")
    output_format: Literal["json", "csv", "text"] = "json"
    environment: Dict[str, Any] = Field(default_factory=dict, description="Environment-driven defaults")
