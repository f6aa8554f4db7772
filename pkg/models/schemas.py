"""
Modelos Pydantic para documentos JSON y parámetros que cruzan módulos
"""
import math
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator


# ============================================
# DECOMPOSICIONES
# ============================================

class BuildStats(BaseModel):
    query_count: int
    node_count: int


class NodeDocument(BaseModel):
    B: str
    V: str
    T: str
    H: str  # elementos con marginal alta en B (expansión del ruteo)
    depth: int


class DecompositionDocument(BaseModel):
    version: int
    kind: Literal["monotone"] = "monotone"
    mode: Literal["exact", "tolerant"]
    gamma: float
    universe_size: int
    ordering: List[int]
    domain: str
    expand_threshold: float
    admissible_threshold: float
    nodes: List[NodeDocument]
    stats: BuildStats


class InnerDecompositionDocument(BaseModel):
    B: str
    decomposition: DecompositionDocument


class GeneralDecompositionDocument(BaseModel):
    version: int
    kind: Literal["general"] = "general"
    gamma: float
    outer: DecompositionDocument
    inner: List[InnerDecompositionDocument]
    stats: BuildStats


AnyDecompositionDocument = Annotated[
    Union[DecompositionDocument, GeneralDecompositionDocument],
    Field(discriminator="kind"),
]


# ============================================
# RELEASES Y PRIVACIDAD
# ============================================

class BucketMean(BaseModel):
    B: str
    C: Optional[str] = None
    mean: float
    samples: int


class ReleaseParams(BaseModel):
    alpha: float
    beta: float
    gamma: float
    accuracy: float
    confidence: float
    samples_per_bucket: int
    seed: int
    rates: List[float]
    width: Optional[int] = None


class BudgetReport(BaseModel):
    epsilon: Optional[float]
    k: int
    used: int
    n: int
    scale: float
    noise_off: bool = False


class ReleaseDocument(BaseModel):
    version: int
    family: Literal["disjunctions", "conjunctions", "cuts", "generic"]
    answer_transform: Literal["identity", "complement"] = "identity"
    params: ReleaseParams
    means: List[BucketMean]
    decomposition: AnyDecompositionDocument
    budget: Optional[BudgetReport] = None


class CensusReport(BaseModel):
    mode: Literal["exhaustive", "sampled"]
    distribution: str
    samples: Optional[int] = None
    alpha: float
    beta: float
    bin_edges: List[float]
    histogram: List[float]
    mass_total: float
    prob_error_above_alpha: float
    max_error: float
    mean_error: float
    passes: bool


class ConcentrationRow(BaseModel):
    bucket: str
    t: float
    empirical: float
    bound: float
    slack: float
    passes: bool


# ============================================
# MULTIPLICATIVE WEIGHTS
# ============================================

class MWConfig(BaseModel):
    """
    Parámetros del loop de multiplicative weights: η = β/2,
    T = ⌈8 ln|X| / β²⌉ + 1 y umbral de término β/2 − τ, con τ <= β/8.
    """

    beta: float = Field(gt=0, le=1)
    universe_size: int = Field(ge=2)
    tau: Optional[float] = None

    @model_validator(mode="after")
    def _tolerancia(self):
        if self.tau is None:
            self.tau = self.beta / 8
        if self.tau < 0 or self.tau > self.beta / 8 + 1e-15:
            raise ValueError(f"tau debe estar en [0, β/8] (recibido: {self.tau})")
        return self

    @property
    def eta(self) -> float:
        return self.beta / 2

    @property
    def round_cap(self) -> int:
        return math.ceil(8 * math.log(self.universe_size) / self.beta ** 2) + 1

    @property
    def threshold(self) -> float:
        return self.beta / 2 - self.tau


class MWRoundTrace(BaseModel):
    round: int
    v_plus: float
    v_minus: float
    v: float
    orientation: Optional[Literal["+", "-"]] = None
    updated: bool
    potential: Optional[float] = None
    drop: Optional[float] = None
    drop_floor: Optional[float] = None


class MWReport(BaseModel):
    rounds: int
    round_cap: int
    eta: float
    tau: float
    threshold: float
    terminated: bool
    sq_queries: int
    concept_count: int
    sup_error: Optional[float] = None
    rounds_below_quarter_beta_sq: int = 0
    answers: List[float]
    trace: List[MWRoundTrace]


# ============================================
# CLI
# ============================================

class HarnessModeBlock(BaseModel):
    enabled: bool
    exact_oracle: bool = False
    noise_off: bool = False


class RunConfig(BaseModel):
    """Flags de una ejecución de la CLI, validadas antes de tocar datos."""

    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    release: Optional[str] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    epsilon: Optional[float] = None
    gamma: Optional[float] = None
    width: Optional[int] = None
    rate: Optional[float] = None
    tolerance: Optional[float] = None
    seed: Optional[int] = None
    mode: Optional[str] = None
    family: Optional[str] = None
    census: bool = False
    exact_oracle: bool = False
    noise_off: bool = False
    samples: Optional[int] = None
    workers: int = 1

    @field_validator("alpha", "beta", "rate")
    @classmethod
    def _unitario(cls, v):
        if v is not None and not 0 < v <= 1:
            raise ValueError(f"debe estar en (0, 1] (recibido: {v})")
        return v

    @field_validator("epsilon", "gamma")
    @classmethod
    def _positivo(cls, v):
        if v is not None and not (math.isfinite(v) and v > 0):
            raise ValueError(f"debe ser positivo (recibido: {v})")
        return v

    @field_validator("tolerance")
    @classmethod
    def _no_negativo(cls, v):
        if v is not None and v < 0:
            raise ValueError(f"no puede ser negativa (recibido: {v})")
        return v

    @field_validator("width", "workers", "samples")
    @classmethod
    def _entero_positivo(cls, v):
        if v is not None and v < 1:
            raise ValueError(f"debe ser >= 1 (recibido: {v})")
        return v

    @field_validator("seed")
    @classmethod
    def _semilla(cls, v):
        if v is not None and v < 0:
            raise ValueError(f"la semilla debe ser no negativa (recibido: {v})")
        return v


class RunReport(BaseModel):
    version: str
    format_version: int
    config: RunConfig
    seed: Optional[int]
    dataset_hash: Optional[str] = None
    test_mode: HarnessModeBlock
    release: Optional[ReleaseDocument] = None
    releases: Optional[List[ReleaseDocument]] = None
    decomposition: Optional[AnyDecompositionDocument] = None
    census: Optional[CensusReport] = None
    mw: Optional[MWReport] = None
