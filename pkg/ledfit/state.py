"""
State Definitions for ledfit

This module defines the data structures that flow between the
photometry reader, the model, the optimizers and the experiment
harness.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple, TypedDict

import numpy as np

K_TERMS = 3
N_PARAMS = 3 * K_TERMS

# Canonical search ranges, ordered (a, b, c).
A_RANGE = (0.0, 1.0)
B_RANGE = (-90.0, 90.0)
C_RANGE = (0.0, 100.0)

# Range widths used to scale Newton steps, one per parameter.
PARAM_WIDTHS = np.array([1.0] * 3 + [180.0] * 3 + [100.0] * 3)

PARAM_NAMES = ("a1", "a2", "a3", "b1", "b2", "b3", "c1", "c2", "c3")


@dataclass(frozen=True)
class ModelParams:
    """
    Coefficients of the three-term cosine-power model.

    Amplitudes ``a`` are dimensionless, offsets ``b`` are in degrees and
    exponents ``c`` are dimensionless.
    """

    a: Tuple[float, float, float]
    b: Tuple[float, float, float]
    c: Tuple[float, float, float]

    def __post_init__(self):
        for name in ("a", "b", "c"):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != K_TERMS:
                raise ValueError(f"{name} must hold {K_TERMS} values, got {len(values)}")
            object.__setattr__(self, name, values)

    def to_vector(self) -> np.ndarray:
        """Return the 9-vector ordered (a1, a2, a3, b1, b2, b3, c1, c2, c3)."""
        return np.array(self.a + self.b + self.c, dtype=float)

    @classmethod
    def from_vector(cls, x) -> "ModelParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (N_PARAMS,):
            raise ValueError(f"expected a vector of {N_PARAMS} values, got shape {x.shape}")
        return cls(a=tuple(x[0:3]), b=tuple(x[3:6]), c=tuple(x[6:9]))

    def permuted(self, order) -> "ModelParams":
        """Reorder the three (a, b, c) triples."""
        order = list(order)
        return ModelParams(
            a=tuple(self.a[k] for k in order),
            b=tuple(self.b[k] for k in order),
            c=tuple(self.c[k] for k in order),
        )

    def in_canonical_ranges(self) -> bool:
        return (
            all(A_RANGE[0] <= v <= A_RANGE[1] for v in self.a)
            and all(B_RANGE[0] <= v <= B_RANGE[1] for v in self.b)
            and all(C_RANGE[0] <= v <= C_RANGE[1] for v in self.c)
        )

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(PARAM_NAMES, self.to_vector().tolist()))


@dataclass(frozen=True, eq=False)
class IntensitySamples:
    """
    Measured luminous intensity of one C-plane.

    ``phi`` holds polar angles in degrees (strictly increasing, starting at
    0) and ``candela`` the matching intensities. ``i_max`` is the model's
    intensity scale; it defaults to the largest measured value.
    """

    phi: np.ndarray
    candela: np.ndarray
    i_max: Optional[float] = None

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        candela = np.array(self.candela, dtype=float)
        if phi.ndim != 1 or phi.shape != candela.shape:
            raise ValueError("phi and candela must be 1-D arrays of equal length")
        if phi.size == 0:
            raise ValueError("at least one sample is required")
        if phi[0] != 0.0:
            raise ValueError(f"first polar angle must be 0, got {phi[0]:g}")
        if np.any(np.diff(phi) <= 0):
            raise ValueError("polar angles must be strictly increasing")
        if np.any(candela < 0) or not np.all(np.isfinite(candela)):
            raise ValueError("candela values must be finite and non-negative")
        i_max = float(candela.max()) if self.i_max is None else float(self.i_max)
        if not np.isfinite(i_max) or i_max < 0:
            raise ValueError(f"i_max must be finite and non-negative, got {i_max}")
        phi.setflags(write=False)
        candela.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "candela", candela)
        object.__setattr__(self, "i_max", i_max)

    @property
    def n(self) -> int:
        return int(self.phi.size)

    @property
    def total(self) -> float:
        return float(self.candela.sum())

    def scaled(self, factor: float) -> "IntensitySamples":
        return IntensitySamples(self.phi, self.candela * factor, self.i_max * factor)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntensitySamples):
            return NotImplemented
        return (
            np.array_equal(self.phi, other.phi)
            and np.array_equal(self.candela, other.candela)
            and self.i_max == other.i_max
        )


@dataclass(frozen=True, eq=False)
class PhotometricFile:
    """Candela grid of a photometric file, indexed [plane][polar]."""

    c_plane_angles: np.ndarray
    polar_angles: np.ndarray
    candela_grid: np.ndarray
    metadata: List[str] = field(default_factory=list)

    def __post_init__(self):
        planes = np.array(self.c_plane_angles, dtype=float)
        polar = np.array(self.polar_angles, dtype=float)
        grid = np.array(self.candela_grid, dtype=float).reshape(planes.size, polar.size)
        if np.any(np.diff(polar) <= 0):
            raise ValueError("polar angles must be strictly increasing")
        if np.any(grid < 0):
            raise ValueError("candela values must be non-negative")
        object.__setattr__(self, "c_plane_angles", planes)
        object.__setattr__(self, "polar_angles", polar)
        object.__setattr__(self, "candela_grid", grid)
        object.__setattr__(self, "metadata", list(self.metadata))

    @property
    def vector_count(self) -> int:
        return int(self.candela_grid.size)


@dataclass(frozen=True)
class ObjectiveValue:
    rms: float
    rmsp: float
    e: float


class Termination(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    SINGULAR_SYSTEM = "SingularSystem"
    DAMPING_EXHAUSTED = "DampingExhausted"
    # Result of a derivative-free search (IF walk or random sampling).
    BUDGET_EXHAUSTED = "BudgetExhausted"


@dataclass(frozen=True)
class NewtonOptions:
    max_iterations: int = 50
    delta_tolerance: float = 1e-10
    max_damping_halvings: int = 20
    # Off: plain Newton on the full Hessian, without the Gauss-Newton direction.
    gauss_newton: bool = True

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.delta_tolerance <= 0:
            raise ValueError("delta_tolerance must be positive")
        if self.max_damping_halvings <= 0:
            raise ValueError("max_damping_halvings must be positive")


@dataclass
class FitResult:
    """Outcome of one optimizer run."""

    params: ModelParams
    rms: float
    rmsp: float
    e: float
    iterations: int
    termination: Termination
    evaluations: int = 0
    # Scaled step norm of every Newton system solved, in order.
    step_norms: List[float] = field(default_factory=list)

    @property
    def objective(self) -> ObjectiveValue:
        return ObjectiveValue(rms=self.rms, rmsp=self.rmsp, e=self.e)


@dataclass(frozen=True)
class IFOptions:
    """Settings of the multi-start iterative improvement (IF) search."""

    multi_starts: int = 10
    steps_per_start: int = 100_000
    da0: float = 0.01
    db0: float = 1.0
    dc0: float = 10.0
    trials_before_morph: int = 1000
    morph_limit: int = 10
    refine_factor: float = 0.9
    rng_seed: int = 0

    def __post_init__(self):
        if self.multi_starts <= 0 or self.steps_per_start <= 0:
            raise ValueError("multi_starts and steps_per_start must be positive")
        if not 0.0 < self.refine_factor < 1.0:
            raise ValueError("refine_factor must lie in (0, 1)")

    @property
    def total_budget(self) -> int:
        return self.multi_starts * self.steps_per_start

    @property
    def initial_steps(self) -> Tuple[float, float, float]:
        return (self.da0, self.db0, self.dc0)


@dataclass(frozen=True)
class AlgorithmConfig:
    """
    One row of the experiment table.

    ``method`` is "random-newton" (uniform random sampling, the best
    ``pool_size`` refined by Newton), "if" (multi-start iterative
    improvement, optionally followed by Newton on every start) or
    "random" (best of uniform random sampling, no Newton).
    """

    name: str
    method: str
    multi_starts: int
    steps_per_start: int = 0
    pool_size: int = 100
    newton: bool = True
    number: int = 0

    @property
    def total_budget(self) -> int:
        if self.method == "if":
            return self.multi_starts * self.steps_per_start
        return self.multi_starts

    def scaled(self, factor: float) -> "AlgorithmConfig":
        """Shrink the evaluation budget, keeping the number of IF starts."""
        if self.method == "if":
            steps = max(1, int(round(self.steps_per_start * factor)))
            return AlgorithmConfig(
                self.name, self.method, self.multi_starts, steps,
                self.pool_size, self.newton, self.number,
            )
        samples = max(self.pool_size, int(round(self.multi_starts * factor)))
        return AlgorithmConfig(
            self.name, self.method, samples, 0, self.pool_size, self.newton, self.number
        )


@dataclass
class RunRecord:
    """One (configuration, instance) outcome."""

    config_name: str
    instance_id: str
    best_rmsp: float
    best_params: ModelParams
    evaluations: int
    newton_iterations: int
    wall_seconds: float
    seed: int
    repeat: int = 0
    best_rms: float = 0.0
    pre_newton_rmsp: float = float("nan")
    newton_converged: int = 0
    converged_iterations: int = 0

    @property
    def mean_converged_iterations(self) -> float:
        if self.newton_converged == 0:
            return float("nan")
        return self.converged_iterations / self.newton_converged


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std_dev: float
    min: float
    max: float


@dataclass
class RankTable:
    """Weighted-ranking totals per criterion ("Best", "Mean") and config."""

    scores: Dict[str, Dict[str, float]]
    instance_count: int
    config_count: int

    def total(self, criterion: str, config_name: str) -> float:
        return self.scores[criterion][config_name]


@dataclass(frozen=True)
class WilcoxonResult:
    pair: Tuple[str, str]
    n_effective: int
    w_statistic: float
    asymptotic_p: float
    exact_p: Optional[float] = None


class CliConfig(TypedDict, total=False):
    """
    Options of one CLI invocation after merging flags, the key=value
    config file and the environment.
    """

    subcommand: str
    inputs: List[str]
    output: Optional[str]
    method: str
    seed: int
    budget: Optional[int]
    starts: int
    report: str
    workers: int
    pool_size: int
    decimals: Optional[int]
    plane: int
    average: bool
    no_timestamp: bool


@dataclass(frozen=True)
class ArtificialInstance:
    """Generated instance whose ``truth`` reproduces ``samples`` exactly."""

    truth: ModelParams
    samples: IntensitySamples
    i_max: float
    seed: int
    index: int = 0

    @property
    def instance_id(self) -> str:
        return f"artificial_{self.index:03d}"
