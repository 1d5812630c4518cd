"""Domain models for the Weber solver toolkit.

Plain dataclasses: problem data, solver parameters, per-iteration traces and
the result records produced by the analysis and comparison services. Arrays
are numpy float64; a center matrix is simply a k x n ndarray.
"""
from dataclasses import dataclass, field, fields
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from weber.exceptions import InvalidInputError, InvalidParameterError
from weber.services.gauge import GaugeSet
from weber.services.sets import ConvexRegion

VARIANTS = ('dca', 'abdca', 'abdca-skip')
MERITS = ('true-objective', 'penalized-objective', 'smoothed-objective')

# A center matrix is a k x n array; rows are the centers x^1..x^k.
CenterMatrix = np.ndarray


def frobenius_inner(U: np.ndarray, V: np.ndarray) -> float:
    """Frobenius inner product trace(U V^T)."""
    return float(np.sum(U * V))


def frobenius_norm(U: np.ndarray) -> float:
    """Entrywise Euclidean norm of a matrix."""
    return float(np.linalg.norm(U))


def as_center_matrix(X: Any, k: int, n: int) -> CenterMatrix:
    """Coerce X to a finite k x n float array.

    Raises:
        InvalidInputError: on shape mismatch or non-finite entries
    """
    X = np.asarray(X, dtype=float)
    if X.shape != (k, n):
        raise InvalidInputError(f"Center matrix has shape {X.shape}, expected {(k, n)}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("Center matrix contains non-finite entries")
    return X


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Demand points, center count, gauge and optional per-center constraints.

    `constraints` is either empty (unconstrained) or holds, for every center,
    a tuple of q regions; q is the same for every center.
    """
    A: np.ndarray
    k: int
    gauge: GaugeSet
    constraints: Tuple[Tuple[ConvexRegion, ...], ...] = ()
    name: str = 'instance'
    B: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2:
            raise InvalidInputError(f"Demand matrix must be 2-D, got {A.ndim}-D")
        if not np.all(np.isfinite(A)):
            raise InvalidInputError("Demand matrix contains non-finite entries")
        m, n = A.shape
        if m < 2:
            raise InvalidInputError(f"Need at least 2 demand points, got {m}")
        if not isinstance(self.k, (int, np.integer)) or not 1 <= self.k <= m:
            raise InvalidInputError(f"Center count must satisfy 1 <= k <= m={m}, got {self.k}")

        constraints = tuple(tuple(regions) for regions in self.constraints)
        if constraints:
            if len(constraints) != self.k:
                raise InvalidInputError(
                    f"Constraint lists given for {len(constraints)} centers, expected {self.k}")
            q_values = {len(regions) for regions in constraints}
            if len(q_values) != 1:
                raise InvalidInputError("Every center must have the same number of constraints")
            for regions in constraints:
                for region in regions:
                    if region.dim != n:
                        raise InvalidInputError(
                            f"Region dimension {region.dim} does not match data dimension {n}")
            if q_values == {0}:
                constraints = ()

        A.setflags(write=False)
        B = np.tile(A.sum(axis=0), (int(self.k), 1))
        B.setflags(write=False)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'k', int(self.k))
        object.__setattr__(self, 'constraints', constraints)
        object.__setattr__(self, 'B', B)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def q(self) -> int:
        return len(self.constraints[0]) if self.constraints else 0

    @property
    def constrained(self) -> bool:
        return self.q > 0

    def check_B(self) -> bool:
        """Recompute the column sum of A and compare with every row of B."""
        return bool(np.allclose(self.B, self.A.sum(axis=0)[None, :], rtol=0, atol=1e-12 * (1 + np.abs(self.A).sum())))

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Componentwise min and max of the demand points."""
        return self.A.min(axis=0), self.A.max(axis=0)


@dataclass(frozen=True)
class SolverParams:
    """Hyperparameters for the DCA family.

    All range constraints are checked at construction; violations raise
    InvalidParameterError naming the field.
    """
    alpha: float = 0.05
    beta: float = 0.01
    gamma: float = 2.0
    delta: float = 0.5
    sigma: float = 10.0
    mu0: float = 1.0
    mu_f: float = 1e-6
    tau0: float = 1.0
    tau_f: float = 1e8
    lambda_start: float = 1.0
    lambda_f: float = 1e-3
    lambda_skip: int = 30
    N: int = 5000
    tol: float = 1e-6
    merit: str = 'penalized-objective'
    lambda_min_guard: float = 1e-10

    def __post_init__(self):
        checks = [
            ('alpha', self.alpha > 0, "must be positive"),
            ('beta', 0 < self.beta < 1, "must lie in (0, 1)"),
            ('gamma', self.gamma > 1, "must exceed 1"),
            ('delta', 0 < self.delta < 1, "must lie in (0, 1)"),
            ('sigma', self.sigma > 1, "must exceed 1"),
            ('mu_f', self.mu_f > 0, "must be positive"),
            ('mu0', self.mu0 > self.mu_f, "must exceed mu_f"),
            ('tau0', self.tau0 > 0, "must be positive"),
            ('tau_f', self.tau_f > self.tau0, "must exceed tau0"),
            ('lambda_f', self.lambda_f > 0, "must be positive"),
            ('lambda_start', self.lambda_start > self.lambda_f, "must exceed lambda_f"),
            ('lambda_skip', isinstance(self.lambda_skip, (int, np.integer)) and self.lambda_skip >= 1,
             "must be a positive integer"),
            ('N', isinstance(self.N, (int, np.integer)) and self.N >= 1, "must be a positive integer"),
            ('tol', self.tol > 0, "must be positive"),
            ('merit', self.merit in MERITS, f"must be one of {', '.join(MERITS)}"),
            ('lambda_min_guard', self.lambda_min_guard > 0, "must be positive"),
        ]
        for name, ok, message in checks:
            if not ok:
                raise InvalidParameterError(f"{name}={getattr(self, name)!r} {message}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> 'SolverParams':
        """Build params from a dict, rejecting unknown keys."""
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise InvalidParameterError(f"Unknown solver parameter(s): {', '.join(sorted(unknown))}")
        kwargs = {}
        for f in fields(cls):
            if f.name not in values:
                continue
            value = values[f.name]
            if f.name in ('lambda_skip', 'N'):
                if isinstance(value, float) and value.is_integer():
                    value = int(value)
            elif f.name != 'merit':
                try:
                    value = float(value)
                except (TypeError, ValueError) as e:
                    raise InvalidParameterError(f"{f.name}={value!r} must be a number") from e
            kwargs[f.name] = value
        return cls(**kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class IterationRecord:
    """One inner iteration of a solve run."""
    stage: int
    iteration: int
    mu: float
    tau: float
    lambda_trial: float
    lambda_accepted: float
    backtracks: int
    f_value: float
    step_fro: float
    skipped: bool
    wall_ns: int


@dataclass
class StageRecord:
    """One fixed (mu, tau) pass of the continuation loop."""
    index: int
    mu: float
    tau: float
    iterations: int
    converged: bool
    value: float


@dataclass
class SolverReport:
    """Outcome of `solve`: final centers, value and the full trace."""
    X: CenterMatrix
    value: float
    total_iterations: int
    variant: str
    stages: List[StageRecord] = field(default_factory=list)
    trace: List[IterationRecord] = field(default_factory=list)

    @property
    def final_stage(self) -> Optional[StageRecord]:
        return self.stages[-1] if self.stages else None


@dataclass
class Clustering:
    """Natural clustering, attraction sets and level index sets (0-based)."""
    clusters: List[FrozenSet[int]]
    attraction: List[FrozenSet[int]]
    level_sets: List[FrozenSet[int]]


@dataclass
class Certificate:
    """Local-optimality certificate for a center matrix.

    status is 'local', 'not-local' or 'inconclusive' (some level set is not
    a singleton, so the characterisation does not apply).
    """
    status: str
    is_singleton: List[bool]
    per_center_residual: List[Optional[float]]
    local_values: List[Optional[float]]
    single_source_values: List[Optional[float]]
    ambiguous: List[int]
    value: float
    tol: float

    @property
    def is_local(self) -> Optional[bool]:
        if self.status == 'inconclusive':
            return None
        return self.status == 'local'


@dataclass
class CompareConfig:
    """Multi-start comparison settings."""
    runs: int
    seed: int
    params: SolverParams
    variants: Sequence[str] = VARIANTS
    init_box: Optional[Tuple[Sequence[float], Sequence[float]]] = None
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.runs, (int, np.integer)) or self.runs < 1:
            raise InvalidParameterError(f"runs={self.runs!r} must be a positive integer")
        if not self.variants:
            raise InvalidParameterError("At least one variant is required")
        for variant in self.variants:
            if variant not in VARIANTS:
                raise InvalidParameterError(f"Unknown variant: {variant}")
        if self.init_box is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.init_box)
            if lo.shape != hi.shape or np.any(lo > hi):
                raise InvalidParameterError("init_box must satisfy lo <= hi componentwise")
        if self.workers < 1:
            raise InvalidParameterError(f"workers={self.workers!r} must be at least 1")
        self.variants = tuple(self.variants)


@dataclass
class VariantResult:
    """One variant's outcome within a comparison run."""
    iterations: Optional[int]
    value: Optional[float]
    time_ns: Optional[int]
    failed: bool = False
    error: Optional[str] = None


@dataclass
class RunRecord:
    """All variants solved from one shared initial point."""
    run_index: int
    x0_hash: str
    results: Dict[str, VariantResult]


@dataclass
class CompareReport:
    """Aggregated multi-start comparison."""
    runs: List[RunRecord]
    mean_iterations: Dict[str, Optional[float]]
    mean_time_ns: Dict[str, Optional[float]]
    iter_ratio: Dict[str, Optional[float]]
    time_ratio: Dict[str, Optional[float]]
    failed: Dict[str, int]
    valid: bool
    lambda_traces: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)


@dataclass
class RunConfig:
    """Everything a CLI subcommand needs, after parsing flags and files."""
    data_path: str
    data_format: str = 'csv'
    gauge_kind: str = 'euclidean-ball'
    radius: float = 1.0
    k: int = 2
    constraints: Tuple[Tuple[ConvexRegion, ...], ...] = ()
    params: SolverParams = field(default_factory=SolverParams)
    variant: str = 'abdca'
    out: Optional[str] = None
    trace: Optional[str] = None
