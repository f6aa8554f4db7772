"""
Aproximación de funciones submodulares por medias de buckets (Learn).

Cada bucket de la decomposición se reemplaza por la media de su pieza
Lipschitz bajo la distribución producto restringida a la celda de ruteo;
`evaluate` rutea S y devuelve esa media.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from core.decomposition import (
    AnyDecomposition, BucketKey, DoubleDecomposition, MonotoneDecomposition,
    bucket_capacity, decompose_general, decompose_tolerant, max_depth, MODE_TOLERANT,
)
from core.submodular import MaskLike, ValueOracle, as_bits, iter_bits, popcount, tabulate
from dependencies import derivar_rng, validar_intervalo_unitario, validar_positivo, validar_probabilidad
from errors import ArgumentError, CapacityError
from models.schemas import (
    BucketMean, BudgetReport, CensusReport, ConcentrationRow, ReleaseDocument, ReleaseParams,
)
from utils.archivos import hex_to_mask, mask_to_hex
from utils.registro import log

# Máscaras muestreadas se empaquetan en int64
MAX_SAMPLING_DIMENSION = 62


@dataclass(frozen=True)
class ProductDistribution:
    """
    Distribución producto sobre 2^U: x ∈ S con probabilidad rates[x].
    Una restricción fija elementos dentro (prob. 1) o fuera (prob. 0).
    """

    rates: Tuple[float, ...]
    forced_in: int = 0
    forced_out: int = 0

    def __post_init__(self):
        for p in self.rates:
            validar_probabilidad("rate", p)
        if self.forced_in & self.forced_out:
            raise ArgumentError("Un elemento no puede estar forzado dentro y fuera a la vez")

    @classmethod
    def uniform(cls, d: int, p: float = 0.5) -> "ProductDistribution":
        return cls(tuple([float(p)] * d))

    @property
    def size(self) -> int:
        return len(self.rates)

    @property
    def free_mask(self) -> int:
        return ((1 << self.size) - 1) & ~(self.forced_in | self.forced_out)

    def effective_rates(self) -> np.ndarray:
        p = np.asarray(self.rates, dtype=float).copy()
        for x in iter_bits(self.forced_in):
            p[x] = 1.0
        for x in iter_bits(self.forced_out):
            p[x] = 0.0
        return p

    def restrict(self, forced_in: int, forced_out: int) -> "ProductDistribution":
        return ProductDistribution(self.rates, self.forced_in | forced_in, self.forced_out | forced_out)

    def describe(self) -> str:
        return f"product(rates={sorted(set(self.rates))})"

    def sample_masks(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if self.size > MAX_SAMPLING_DIMENSION:
            raise CapacityError(f"El muestreo vectorizado admite hasta {MAX_SAMPLING_DIMENSION} elementos")
        libres = list(iter_bits(self.free_mask))
        base = np.full(m, self.forced_in, dtype=np.int64)
        if not libres:
            return base
        p = np.asarray(self.rates, dtype=float)[libres]
        bits = rng.random((m, len(libres))) < p
        pesos = np.array([1 << x for x in libres], dtype=np.int64)
        return base | (bits.astype(np.int64) @ pesos)

    def census_weights(self, masks: np.ndarray) -> np.ndarray:
        """Probabilidad de cada máscara bajo la distribución (vectorizado)."""
        p = self.effective_rates()
        w = np.ones(masks.shape, dtype=float)
        for x in range(self.size):
            dentro = (masks >> x) & 1 == 1
            w *= np.where(dentro, p[x], 1.0 - p[x])
        return w


def sample_count(accuracy: float, confidence: float) -> int:
    """m = ⌈ln(2/(1−confidence)) / (2·accuracy²)⌉ (Hoeffding para g ∈ [0,1])."""
    validar_positivo("accuracy", accuracy)
    if not 0 < confidence < 1:
        raise ArgumentError(f"confidence debe estar en (0, 1) (recibido: {confidence})")
    return math.ceil(math.log(2 / (1 - confidence)) / (2 * accuracy ** 2) - 1e-9)


def _cell_points(dist: ProductDistribution) -> Tuple[np.ndarray, np.ndarray]:
    """Todas las máscaras de la celda con su probabilidad."""
    libres = list(iter_bits(dist.free_mask))
    idx = np.arange(1 << len(libres), dtype=np.int64)
    masks = np.full(idx.shape, dist.forced_in, dtype=np.int64)
    for j, x in enumerate(libres):
        masks |= ((idx >> j) & 1) << x
    return masks, dist.census_weights(masks)


def estimate_mean(g: ValueOracle, dist: ProductDistribution, accuracy: float, confidence: float,
                  rng: np.random.Generator) -> Tuple[float, int]:
    """
    Estima E_{S∼dist} g(S) con m muestras independientes. Si la celda tiene
    a lo sumo m puntos la esperanza se calcula exacta por enumeración.
    Devuelve (media, puntos usados).
    """
    m = sample_count(accuracy, confidence)
    libres = popcount(dist.free_mask)
    if libres == 0:
        return g.evaluate(dist.forced_in), 1
    if (1 << libres) <= m:
        masks, pesos = _cell_points(dist)
        valores = np.array([g.evaluate(int(s)) for s in masks])
        total = pesos.sum()
        # celda de probabilidad cero bajo dist: promedio uniforme
        media = np.dot(pesos, valores) / total if total > 0 else valores.mean()
        return float(min(1.0, max(0.0, media))), int(masks.size)
    muestras = dist.sample_masks(rng, m)
    unicas, cuentas = np.unique(muestras, return_counts=True)
    valores = np.array([g.evaluate(int(s)) for s in unicas])
    return float(min(1.0, max(0.0, np.dot(cuentas, valores) / m))), m


def gamma_for(alpha: float, beta: float) -> float:
    """γ = α² / (6·ln(2/β))."""
    return alpha ** 2 / (6 * math.log(2 / beta))


def declared_query_bound(d: int, bucket_cap: int, samples: int) -> int:
    """Cota de consultas distintas de un Learn, conocida antes de consultar."""
    return min(1 << d, bucket_cap * (d + 1) + bucket_cap * samples)


def learn_bucket_cap(d: int, alpha: float, beta: float, general: bool = False) -> int:
    cap = bucket_capacity(d, max_depth(gamma_for(alpha, beta), MODE_TOLERANT))
    return cap * cap if general else cap


@dataclass
class ReleaseStructure:
    """La estructura h: medias por bucket más el mapa de ruteo F."""

    means: Dict[BucketKey, float]
    decomposition: AnyDecomposition
    params: ReleaseParams
    family: str = "generic"
    answer_transform: str = "identity"
    budget: Optional[BudgetReport] = None
    samples: Dict[BucketKey, int] = field(default_factory=dict)

    def evaluate(self, S: MaskLike) -> float:
        bits = as_bits(S, self.decomposition.universe)
        mu = self.means[self.decomposition.route_bits(bits)]
        return 1.0 - mu if self.answer_transform == "complement" else mu

    def to_document(self) -> ReleaseDocument:
        medias = []
        for key, mu in self.means.items():
            B, C = key if isinstance(key, tuple) else (key, None)
            medias.append(BucketMean(
                B=mask_to_hex(B), C=None if C is None else mask_to_hex(C),
                mean=mu, samples=self.samples.get(key, 0),
            ))
        return ReleaseDocument(
            version=config.FORMAT_VERSION,
            family=self.family,
            answer_transform=self.answer_transform,
            params=self.params,
            means=medias,
            decomposition=self.decomposition.to_document(),
            budget=self.budget,
        )

    @classmethod
    def from_document(cls, doc: ReleaseDocument) -> "ReleaseStructure":
        if doc.decomposition.kind == "general":
            dec = DoubleDecomposition.from_document(doc.decomposition)
        else:
            dec = MonotoneDecomposition.from_document(doc.decomposition)
        medias, muestras = {}, {}
        for bm in doc.means:
            key = hex_to_mask(bm.B) if bm.C is None else (hex_to_mask(bm.B), hex_to_mask(bm.C))
            medias[key] = bm.mean
            muestras[key] = bm.samples
        return cls(medias, dec, doc.params, doc.family, doc.answer_transform, doc.budget, muestras)


def evaluate(h: ReleaseStructure, S: MaskLike) -> float:
    """μ_{F(S)}: sin consultas al oráculo."""
    return h.evaluate(S)


def _estimar_buckets(oracle: ValueOracle, dec: AnyDecomposition, dist: ProductDistribution,
                     accuracy: float, confidence: float, seed: int,
                     workers: int) -> Tuple[Dict[BucketKey, float], Dict[BucketKey, int]]:
    keys = dec.route_targets()

    def estimar(key):
        dentro, fuera = dec.cell(key)
        # par sin celda: se liberan los elementos forzados a la vez dentro y fuera
        choque = dentro & fuera
        if choque:
            log("DEBUG", f"Par {key} sin celda: se estima sobre la caja relajada "
                         f"({popcount(choque)} elementos en conflicto)")
            dentro, fuera = dentro & ~choque, fuera & ~choque
        claves = key if isinstance(key, tuple) else (key,)
        rng = derivar_rng(seed, *claves)
        return estimate_mean(oracle, dist.restrict(dentro, fuera), accuracy, confidence, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            resultados = list(pool.map(estimar, keys))
    else:
        resultados = [estimar(k) for k in keys]
    medias = {k: r[0] for k, r in zip(keys, resultados)}
    muestras = {k: r[1] for k, r in zip(keys, resultados)}
    return medias, muestras


def _learn(oracle: ValueOracle, alpha: float, beta: float, dist: ProductDistribution, seed: int,
           general: bool, failure_probability: Optional[float], workers: Optional[int],
           max_nodes: Optional[int], family: str, width: Optional[int]) -> ReleaseStructure:
    validar_intervalo_unitario("alpha", alpha)
    validar_intervalo_unitario("beta", beta)
    if dist.size != oracle.universe.size:
        raise ArgumentError("La distribución y el oráculo tienen dimensiones distintas")
    beta_falla = failure_probability if failure_probability is not None else config.DEFAULT_FAILURE_PROBABILITY
    validar_intervalo_unitario("failure_probability", beta_falla)
    gamma = gamma_for(alpha, beta)
    if oracle.tolerance > gamma / 12 + 1e-15:
        raise ArgumentError(
            f"La tolerancia del oráculo ({oracle.tolerance:.3g}) supera α²/(72·ln(2/β)) = {gamma / 12:.3g}"
        )

    consultas_antes = oracle.query_count
    dec = decompose_general(oracle, gamma, max_nodes) if general else decompose_tolerant(oracle, gamma, max_nodes)
    n_buckets = len(dec.route_targets())
    precision = alpha / 6
    confianza = 1 - beta_falla / n_buckets
    medias, muestras = _estimar_buckets(
        oracle, dec, dist, precision, confianza, seed, workers or config.DEFAULT_WORKERS
    )
    params = ReleaseParams(
        alpha=alpha, beta=beta, gamma=gamma, accuracy=precision, confidence=confianza,
        samples_per_bucket=sample_count(precision, confianza), seed=seed,
        rates=list(dist.rates), width=width,
    )
    log("INFO", f"Learn{' general' if general else ''}: γ={gamma:.4g}, {n_buckets} buckets, "
                f"{oracle.query_count - consultas_antes} consultas al oráculo")
    return ReleaseStructure(medias, dec, params, family, samples=muestras)


def learn(oracle: ValueOracle, alpha: float, beta: float, dist: ProductDistribution, seed: int,
          failure_probability: Optional[float] = None, workers: Optional[int] = None,
          max_nodes: Optional[int] = None, family: str = "generic",
          width: Optional[int] = None) -> ReleaseStructure:
    """(α,β)-aproxima f bajo `dist` usando la decomposición tolerante (f monótona)."""
    return _learn(oracle, alpha, beta, dist, seed, False, failure_probability, workers,
                  max_nodes, family, width)


def learn_general(oracle: ValueOracle, alpha: float, beta: float, dist: ProductDistribution,
                  seed: int, failure_probability: Optional[float] = None,
                  workers: Optional[int] = None, max_nodes: Optional[int] = None,
                  family: str = "generic", width: Optional[int] = None) -> ReleaseStructure:
    """Como `learn`, sobre la decomposición doble (f no necesariamente monótona)."""
    return _learn(oracle, alpha, beta, dist, seed, True, failure_probability, workers,
                  max_nodes, family, width)


# ============================================
# CENSO DE ERRORES Y CONCENTRACIÓN
# ============================================

def _reporte_censo(errores: np.ndarray, pesos: np.ndarray, alpha: float, beta: float, modo: str,
                   distribucion: str, muestras: Optional[int]) -> CensusReport:
    bordes = np.linspace(0.0, 1.0, config.CENSUS_BINS + 1)
    hist, _ = np.histogram(np.clip(errores, 0.0, 1.0), bins=bordes, weights=pesos)
    soporte = pesos > 0
    sobre = float(pesos[errores > alpha].sum())
    return CensusReport(
        mode=modo,
        distribution=distribucion,
        samples=muestras,
        alpha=alpha,
        beta=beta,
        bin_edges=[float(b) for b in bordes],
        histogram=[float(h) for h in hist],
        mass_total=float(pesos.sum()),
        prob_error_above_alpha=sobre,
        max_error=float(errores[soporte].max()) if soporte.any() else 0.0,
        mean_error=float(np.dot(pesos, errores)),
        passes=sobre <= beta + config.FLOAT_TOLERANCE,
    )


def error_census(h: ReleaseStructure, oracle: ValueOracle, dist, mode: str = "exhaustive",
                 samples: Optional[int] = None, seed: Optional[int] = None,
                 alpha: Optional[float] = None, beta: Optional[float] = None) -> CensusReport:
    """
    Distribución empírica de |f(S) − h(S)| bajo `dist` (producto o ancho w).
    `exhaustive` pondera las 2^d máscaras; `sampled` usa N muestras.
    La verdad se toma de `oracle.true_value`, sin consumir presupuesto.
    """
    alpha = h.params.alpha if alpha is None else alpha
    beta = h.params.beta if beta is None else beta
    if mode == "exhaustive":
        tabla = tabulate(oracle, exact=True)
        masks = tabla.masks
        verdad = tabla.values
        pesos = dist.census_weights(masks)
        muestras = None
    elif mode == "sampled":
        if not samples or samples < 1:
            raise ArgumentError("El censo muestreado requiere samples >= 1")
        masks = dist.sample_masks(derivar_rng(seed), samples)
        verdad = np.array([oracle.true_value(int(s)) for s in masks])
        pesos = np.full(samples, 1.0 / samples)
        muestras = samples
    else:
        raise ArgumentError(f"Modo de censo desconocido: {mode}")
    respuestas = np.array([h.evaluate(int(s)) for s in masks])
    errores = np.abs(verdad - respuestas)
    reporte = _reporte_censo(errores, pesos, alpha, beta, mode, dist.describe(), muestras)
    log("OK" if reporte.passes else "WARNING",
        f"Censo {mode}: Pr[err > {alpha:g}] = {reporte.prob_error_above_alpha:.4f} (β = {beta:g})")
    return reporte


def concentration_bound(gamma: float, t: float) -> float:
    """2·exp(−t² / (2(1/γ + 5t/6))): cola de |g − E g| >= γt para g γ-Lipschitz."""
    return min(1.0, 2 * math.exp(-t ** 2 / (2 * (1 / gamma + 5 * t / 6))))


def concentration_check(oracle: ValueOracle, dec: AnyDecomposition, dist: ProductDistribution,
                        t_values: Sequence[float] = (2, 4, 6), samples: int = 100_000,
                        seed: int = 0) -> List[ConcentrationRow]:
    """Colas empíricas por bucket contra la cota de concentración, con holgura de 3σ binomial."""
    filas = []
    gamma = dec.gamma
    for key in dec.keys():
        dentro, fuera = dec.cell(key)
        celda = dist.restrict(dentro, fuera)
        claves = key if isinstance(key, tuple) else (key,)
        masks = celda.sample_masks(derivar_rng(seed, *claves), samples)
        unicas, inversa = np.unique(masks, return_inverse=True)
        valores = np.array([oracle.true_value(int(s)) for s in unicas])[inversa]
        mu = float(valores.mean())
        etiqueta = ":".join(mask_to_hex(k) for k in claves)
        for t in t_values:
            cota = concentration_bound(gamma, t)
            empirica = float(np.mean(np.abs(valores - mu) >= gamma * t))
            holgura = 3 * math.sqrt(cota * (1 - cota) / samples) + 1 / samples
            filas.append(ConcentrationRow(
                bucket=etiqueta, t=float(t), empirical=empirica, bound=cota,
                slack=holgura, passes=empirica <= cota + holgura,
            ))
    return filas
