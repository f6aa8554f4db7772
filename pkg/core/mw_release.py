"""
Query release por multiplicative weights a partir de un weak learner
agnóstico en el modelo SQ, y la reducción inversa (release → learner).
"""
import hashlib
from dataclasses import dataclass
from typing import Callable, List, Optional, Protocol

import numpy as np
from scipy.special import logsumexp

import config
from core.queries import BitDataset
from dependencies import derivar_rng, validar_positivo
from errors import ArgumentError, CapacityError, ContractError, DomainError
from models.schemas import MWConfig, MWReport, MWRoundTrace
from utils.registro import log


# ============================================
# DISTRIBUCIONES CON PESOS
# ============================================

class WeightedDistribution:
    """Pesos explícitos sobre X = {0..|X|-1}, guardados como log-probabilidades normalizadas."""

    def __init__(self, log_probs: np.ndarray):
        self.log_probs = np.asarray(log_probs, dtype=float)
        self.probs = np.exp(self.log_probs)
        total = self.probs.sum()
        if abs(total - 1.0) > config.NORMALIZATION_TOLERANCE:
            raise DomainError(f"La distribución no está normalizada (suma {total!r})")

    @classmethod
    def uniform(cls, size: int) -> "WeightedDistribution":
        return cls(np.full(size, -np.log(size)))

    @classmethod
    def from_weights(cls, weights) -> "WeightedDistribution":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.any(w > 0):
            raise DomainError("Los pesos deben ser no negativos y no todos cero")
        with np.errstate(divide="ignore"):
            logw = np.log(w)
        return cls(logw - logsumexp(logw))

    @property
    def size(self) -> int:
        return self.log_probs.size

    @property
    def support(self) -> np.ndarray:
        return self.probs > 0

    def expectation(self, q: np.ndarray) -> float:
        return float(np.dot(self.probs, q))

    def expectations(self, matrix: np.ndarray) -> np.ndarray:
        return matrix @ self.probs

    def entropy(self) -> float:
        p = self.probs[self.support]
        return float(-np.dot(p, self.log_probs[self.support]))


def mw_update(D_prev: WeightedDistribution, q: np.ndarray, eta: float) -> WeightedDistribution:
    """D_t(x) ∝ exp(η·q(x))·D_{t−1}(x)."""
    validar_positivo("eta", eta)
    logw = D_prev.log_probs + eta * np.asarray(q, dtype=float)
    return WeightedDistribution(logw - logsumexp(logw))


def relative_entropy(P: WeightedDistribution, Q: WeightedDistribution) -> float:
    """RE(P||Q) = Σ P(x) ln(P(x)/Q(x)); requiere soporte(P) ⊆ soporte(Q)."""
    if P.size != Q.size:
        raise DomainError("Las distribuciones viven en universos distintos")
    sp = P.support
    if np.any(sp & ~Q.support):
        raise DomainError("El soporte de P no está contenido en el de Q")
    valor = float(np.dot(P.probs[sp], P.log_probs[sp] - Q.log_probs[sp]))
    return max(0.0, valor)


def dataset_distribution(D: BitDataset) -> WeightedDistribution:
    """Distribución empírica del dataset sobre X = {0,1}^d (x codificado como máscara)."""
    if D.d > config.MAX_MW_UNIVERSE_BITS:
        raise CapacityError(f"|X| = 2^{D.d} supera el máximo 2^{config.MAX_MW_UNIVERSE_BITS}")
    cuentas = np.bincount(D.record_masks(), minlength=1 << D.d)
    return WeightedDistribution.from_weights(cuentas)


# ============================================
# FAMILIAS DE CONCEPTOS Y ORÁCULO SQ
# ============================================

@dataclass(frozen=True)
class ConceptFamily:
    """Conceptos c: X → {0,1} como matriz booleana |C| × |X|."""

    names: tuple
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.names):
            raise ArgumentError("La matriz de conceptos no coincide con la lista de nombres")

    def __len__(self) -> int:
        return len(self.names)

    @property
    def universe_size(self) -> int:
        return self.matrix.shape[1]


def _exigir_dimension(d: int) -> None:
    if not 1 <= d <= config.MAX_MW_UNIVERSE_BITS:
        raise CapacityError(f"d={d} fuera de 1..{config.MAX_MW_UNIVERSE_BITS}")


def monotone_conjunctions(d: int) -> ConceptFamily:
    """c_S(x) = 1 si x ⊇ S, para los 2^d conjuntos S."""
    _exigir_dimension(d)
    X = np.arange(1 << d, dtype=np.int64)
    S = np.arange(1 << d, dtype=np.int64)[:, None]
    return ConceptFamily(tuple(format(s, "x") for s in range(1 << d)), (X & S) == S)


def monotone_disjunctions(d: int) -> ConceptFamily:
    """d_S(x) = 1 si x ∩ S ≠ ∅."""
    _exigir_dimension(d)
    X = np.arange(1 << d, dtype=np.int64)
    S = np.arange(1 << d, dtype=np.int64)[:, None]
    return ConceptFamily(tuple(format(s, "x") for s in range(1 << d)), (X & S) != 0)


class StatisticalQueryOracle:
    """
    STAT_τ sobre una distribución explícita: responde E_{x∼D} q(x) con error
    uniforme en [−τ, τ], memorizado por consulta. τ = 0 es exacto.
    """

    def __init__(self, dist: WeightedDistribution, tau: float = 0.0, seed: Optional[int] = None):
        if tau < 0:
            raise ArgumentError(f"tau no puede ser negativa (recibido: {tau})")
        if tau > 0 and seed is None:
            raise ArgumentError("Un oráculo SQ con ruido requiere semilla")
        self.dist = dist
        self.tau = float(tau)
        self.seed = seed
        self._memo = {}

    @property
    def query_count(self) -> int:
        return len(self._memo)

    def _ruido(self, clave: bytes) -> float:
        if self.tau == 0:
            return 0.0
        sub = int.from_bytes(hashlib.sha256(clave).digest()[:8], "big") >> 1
        return float(derivar_rng(self.seed, sub).uniform(-self.tau, self.tau))

    def query(self, q: np.ndarray) -> float:
        q = np.asarray(q)
        clave = np.packbits(q.astype(bool)).tobytes()
        if clave not in self._memo:
            valor = self.dist.expectation(q) + self._ruido(clave)
            self._memo[clave] = min(1.0, max(0.0, valor))
        return self._memo[clave]

    def query_many(self, matrix: np.ndarray) -> np.ndarray:
        return np.array([self.query(fila) for fila in matrix])


# ============================================
# MEZCLAS ETIQUETADAS Y WEAK LEARNERS
# ============================================

@dataclass(frozen=True)
class LabeledMixture:
    """
    A⁺ = ½(D,1) + ½(D_{t−1},0) o A⁻ = ½(D,0) + ½(D_{t−1},1). D solo se
    conoce vía SQ; D_{t−1} es explícita.
    """

    model: WeightedDistribution
    orientation: str

    def __post_init__(self):
        if self.orientation not in ("+", "-"):
            raise ArgumentError(f"Orientación inválida: {self.orientation}")

    def agreements(self, data_answers: np.ndarray, model_answers: np.ndarray) -> np.ndarray:
        ventaja = 0.5 * (np.asarray(data_answers) - np.asarray(model_answers))
        return 0.5 + (ventaja if self.orientation == "+" else -ventaja)


def agreement(q: np.ndarray, A: LabeledMixture, sq_oracle: StatisticalQueryOracle) -> float:
    """Pr_{(x,b)∼A}[q(x) = b] con una consulta SQ del lado de los datos."""
    return float(A.agreements(sq_oracle.query(q), A.model.expectation(q)))


class WeakLearner(Protocol):
    def __call__(self, mixture: LabeledMixture, sq_oracle: StatisticalQueryOracle) -> np.ndarray: ...


class ExhaustiveWeakLearner:
    """
    Recorre todo C vía SQ y devuelve el concepto de mayor acuerdo estimado
    (primer índice en empates). Cumple el contrato (α/2, α/2 − 2τ, 0, τ).
    """

    def __init__(self, concepts: ConceptFamily, tau: float):
        self.concepts = concepts
        self.tau = tau
        self.last_index: Optional[int] = None

    def __call__(self, mixture: LabeledMixture, sq_oracle: StatisticalQueryOracle) -> np.ndarray:
        datos = sq_oracle.query_many(self.concepts.matrix)
        modelo = mixture.model.expectations(self.concepts.matrix)
        self.last_index = int(np.argmax(mixture.agreements(datos, modelo)))
        return self.concepts.matrix[self.last_index]


def exhaustive_weak_learner(concepts: ConceptFamily, tau: float) -> ExhaustiveWeakLearner:
    return ExhaustiveWeakLearner(concepts, tau)


def amplified(learner: WeakLearner, repeats: int) -> WeakLearner:
    """Repite el learner y se queda con la hipótesis de mayor acuerdo SQ."""
    if repeats < 1:
        raise ArgumentError("repeats debe ser >= 1")
    if repeats == 1:
        return learner

    def repetido(mixture: LabeledMixture, sq_oracle: StatisticalQueryOracle) -> np.ndarray:
        hipotesis = [learner(mixture, sq_oracle) for _ in range(repeats)]
        acuerdos = [agreement(q, mixture, sq_oracle) for q in hipotesis]
        return hipotesis[int(np.argmax(acuerdos))]

    return repetido


def _exigir_predicado(q, size: int) -> np.ndarray:
    arr = np.asarray(q)
    if arr.shape != (size,) or not np.all((arr == 0) | (arr == 1)):
        raise ContractError("El weak learner devolvió algo que no es un predicado sobre X")
    return arr.astype(bool)


# ============================================
# LOOP DE MULTIPLICATIVE WEIGHTS
# ============================================

@dataclass
class MWResult:
    answers: np.ndarray
    distribution: WeightedDistribution
    report: MWReport


def mw_release(data_dist: WeightedDistribution, concepts: ConceptFamily, learner: WeakLearner,
               cfg: MWConfig, sq_oracle: StatisticalQueryOracle) -> MWResult:
    """
    Ronda t: el learner corre sobre A⁺_t y A⁻_t; si la mejor ventaja v_t
    supera β/2 − τ se actualiza D_t con q⁺ (o ¬q⁻), si no termina y
    responde a_c = E_{D_t} c para todo c ∈ C.
    """
    if cfg.universe_size != data_dist.size or concepts.universe_size != data_dist.size:
        raise ArgumentError("MWConfig, los datos y la familia deben usar el mismo |X|")
    eta, tope, umbral = cfg.eta, cfg.round_cap, cfg.threshold
    actual = WeightedDistribution.uniform(data_dist.size)
    potencial = relative_entropy(data_dist, actual)
    traza: List[MWRoundTrace] = []
    terminado = False

    for t in range(1, tope + 1):
        mas, menos = LabeledMixture(actual, "+"), LabeledMixture(actual, "-")
        q_mas = _exigir_predicado(learner(mas, sq_oracle), data_dist.size)
        q_menos = _exigir_predicado(learner(menos, sq_oracle), data_dist.size)
        v_mas = agreement(q_mas, mas, sq_oracle) - 0.5
        v_menos = agreement(q_menos, menos, sq_oracle) - 0.5
        if v_mas >= v_menos:
            v, orientacion, q_upd = v_mas, "+", q_mas
        else:
            v, orientacion, q_upd = v_menos, "-", ~q_menos

        if v <= umbral:
            traza.append(MWRoundTrace(round=t, v_plus=v_mas, v_minus=v_menos, v=v, updated=False,
                                      potential=potencial))
            terminado = True
            break

        delta = data_dist.expectation(q_upd) - actual.expectation(q_upd)
        actual = mw_update(actual, q_upd, eta)
        nuevo = relative_entropy(data_dist, actual)
        traza.append(MWRoundTrace(
            round=t, v_plus=v_mas, v_minus=v_menos, v=v, orientation=orientacion, updated=True,
            potential=nuevo, drop=potencial - nuevo, drop_floor=eta * delta - eta ** 2,
        ))
        potencial = nuevo

    if not terminado:
        raise ContractError(
            f"multiplicative weights no terminó en {tope} rondas; el weak learner violó su contrato",
            trace=traza,
        )

    respuestas = actual.expectations(concepts.matrix)
    verdad = data_dist.expectations(concepts.matrix)
    bajo_cuarto = sum(1 for r in traza if r.updated and r.drop < cfg.beta ** 2 / 4)
    reporte = MWReport(
        rounds=len(traza), round_cap=tope, eta=eta, tau=cfg.tau, threshold=umbral,
        terminated=terminado, sq_queries=sq_oracle.query_count, concept_count=len(concepts),
        sup_error=float(np.max(np.abs(verdad - respuestas))),
        rounds_below_quarter_beta_sq=bajo_cuarto,
        answers=[float(a) for a in respuestas], trace=traza,
    )
    log("OK", f"MW terminó en {reporte.rounds}/{tope} rondas, error sup {reporte.sup_error:.4f}")
    return MWResult(respuestas, actual, reporte)


# ============================================
# REDUCCIÓN INVERSA: RELEASE → LEARNER AGNÓSTICO
# ============================================

@dataclass(frozen=True)
class LabeledDistribution:
    """Pesos conjuntos sobre X × {0,1}: yes[x] = Pr[(x,1)], no[x] = Pr[(x,0)]."""

    yes: np.ndarray
    no: np.ndarray

    def __post_init__(self):
        total = float(np.sum(self.yes) + np.sum(self.no))
        if np.any(self.yes < 0) or np.any(self.no < 0) or abs(total - 1) > 1e-9:
            raise DomainError("Los pesos etiquetados deben ser no negativos y sumar 1")

    @classmethod
    def planted(cls, base: WeightedDistribution, target: np.ndarray,
                flip: Optional[np.ndarray] = None) -> "LabeledDistribution":
        """Etiquetas b = target(x), invertidas donde flip(x)."""
        etiqueta = np.asarray(target, dtype=bool)
        if flip is not None:
            etiqueta = etiqueta ^ np.asarray(flip, dtype=bool)
        return cls(np.where(etiqueta, base.probs, 0.0), np.where(etiqueta, 0.0, base.probs))

    @property
    def p_yes(self) -> float:
        return float(np.sum(self.yes))

    def conditional(self, label: int) -> WeightedDistribution:
        return WeightedDistribution.from_weights(self.yes if label else self.no)

    def agreement(self, q: np.ndarray) -> float:
        q = np.asarray(q, dtype=float)
        return float(np.dot(self.yes, q) + np.dot(self.no, 1 - q))


Releaser = Callable[[StatisticalQueryOracle, ConceptFamily], np.ndarray]


def exhaustive_releaser(sq_oracle: StatisticalQueryOracle, concepts: ConceptFamily) -> np.ndarray:
    """Responde cada concepto con una consulta SQ (k = |C| consultas)."""
    return sq_oracle.query_many(concepts.matrix)


@dataclass(frozen=True)
class AgnosticResult:
    index: int
    name: str
    agreement: float
    best_agreement: float
    sq_queries: int


def release_to_agnostic(releaser: Releaser, concepts: ConceptFamily, labeled: LabeledDistribution,
                        tau: float = 0.0, seed: Optional[int] = None) -> AgnosticResult:
    """
    Corre el releaser sobre los condicionales Y (b=1) y N (b=0) y devuelve
    q* = argmax p_Y·a^Y − p_N·a^N, que maximiza el acuerdo estimado.
    """
    p_si = labeled.p_yes
    respuestas, consultas = {}, 0
    for etiqueta, peso in ((1, p_si), (0, 1 - p_si)):
        if peso <= 0:
            respuestas[etiqueta] = np.zeros(len(concepts))
            continue
        sq = StatisticalQueryOracle(labeled.conditional(etiqueta), tau,
                                    None if seed is None else seed + etiqueta)
        respuestas[etiqueta] = np.asarray(releaser(sq, concepts), dtype=float)
        consultas += sq.query_count
    puntaje = p_si * respuestas[1] - (1 - p_si) * respuestas[0]
    mejor = int(np.argmax(puntaje))
    reales = np.array([labeled.agreement(c) for c in concepts.matrix])
    return AgnosticResult(
        index=mejor, name=concepts.names[mejor], agreement=float(reales[mejor]),
        best_agreement=float(reales.max()), sq_queries=consultas,
    )
