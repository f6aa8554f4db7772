"""
Familias de consultas: disyunciones monótonas, conjunciones por negación,
distribución de ancho w y la función de corte de un grafo
"""
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

import config
from core.approximator import (
    ProductDistribution, ReleaseStructure, declared_query_bound, gamma_for, learn,
    learn_bucket_cap, learn_general, sample_count,
)
from core.submodular import (
    MaskLike, SubsetMask, Universe, ValueOracle, as_bits, check_monotone, check_submodular,
    popcount,
)
from core.privacy import PrivacyBudget, check_database_size, private_sq_oracle
from dependencies import exigir_modo_prueba, validar_intervalo_unitario, validar_positivo
from errors import ArgumentError, CapacityError, DataFormatError
from utils.archivos import leer_bytes, sha256_bytes
from utils.registro import log


# ============================================
# DATASETS DE BITS
# ============================================

@dataclass(frozen=True)
class BitDataset:
    """n registros × d atributos binarios, con procedencia."""

    rows: np.ndarray = field(repr=False)
    source: Optional[str] = None
    sha256: str = ""

    def __post_init__(self):
        filas = np.asarray(self.rows, dtype=np.uint8)
        if filas.ndim != 2 or filas.shape[0] < 1 or filas.shape[1] < 1:
            raise DataFormatError("El dataset necesita al menos un registro y un atributo")
        if np.any(filas > 1):
            raise DataFormatError("El dataset solo admite valores 0/1")
        filas.setflags(write=False)
        object.__setattr__(self, "rows", filas)
        if not self.sha256:
            object.__setattr__(self, "sha256", sha256_bytes(filas.tobytes()))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], source: Optional[str] = None) -> "BitDataset":
        return cls(np.array(rows, dtype=np.uint8), source)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @property
    def universe(self) -> Universe:
        return Universe(self.d)

    def record_masks(self) -> np.ndarray:
        """Cada registro como máscara de sus atributos en 1."""
        pesos = np.array([1 << j for j in range(self.d)], dtype=np.int64)
        return self.rows.astype(np.int64) @ pesos


def load_dataset(path: str) -> BitDataset:
    """
    CSV sin encabezado de caracteres 0/1, un registro por línea. Las comas
    son opcionales; las líneas vacías se ignoran.
    """
    data = leer_bytes(path)
    filas = []
    for num, linea in enumerate(data.decode("utf-8").splitlines(), start=1):
        texto = linea.replace(",", "").replace(" ", "").strip()
        if not texto:
            continue
        if set(texto) - {"0", "1"}:
            raise DataFormatError(f"{path}:{num}: solo se admiten 0 y 1")
        if filas and len(texto) != len(filas[0]):
            raise DataFormatError(f"{path}:{num}: se esperaban {len(filas[0])} atributos, hay {len(texto)}")
        filas.append([int(c) for c in texto])
    if not filas:
        raise DataFormatError(f"{path}: dataset vacío")
    dataset = BitDataset(np.array(filas, dtype=np.uint8), path, sha256_bytes(data))
    log("INFO", f"Dataset {path}: n={dataset.n}, d={dataset.d}")
    return dataset


def negate(D: BitDataset) -> BitDataset:
    """x ↦ x̄ para cada registro."""
    return BitDataset(1 - D.rows, D.source, sha256_bytes(b"negated:" + D.sha256.encode()))


def _columnas(D: BitDataset, S: MaskLike) -> List[int]:
    if isinstance(S, SubsetMask) and S.universe.size != D.d:
        raise ArgumentError(f"La máscara es de dimensión {S.universe.size}, el dataset de {D.d}")
    return D.universe.elements(as_bits(S, D.universe))


def disjunction_value(D: BitDataset, S: MaskLike) -> float:
    """d_S(D): fracción de registros con algún atributo de S en 1. d_∅ = 0."""
    cols = _columnas(D, S)
    if not cols:
        return 0.0
    return float(D.rows[:, cols].any(axis=1).mean())


def conjunction_value(D: BitDataset, S: MaskLike) -> float:
    """c_S(D) = 1 − d_S(negate(D)). c_∅ = 1."""
    return 1.0 - disjunction_value(negate(D), S)


def disjunction_function(D: BitDataset) -> Callable[[int], float]:
    if D.d > 62:
        return lambda bits: disjunction_value(D, bits)
    registros = D.record_masks()
    n = D.n
    return lambda bits: np.count_nonzero(registros & bits) / n


def fdisj_oracle(D: BitDataset) -> ValueOracle:
    """F_Disj(S) = d_S(D) como oráculo exacto."""
    return ValueOracle.exact(disjunction_function(D), D.universe, name="F_disj")


def conjunction_oracle(D: BitDataset) -> ValueOracle:
    """S ↦ c_S(D), verdad de referencia para censar releases de conjunciones."""
    disyuncion = disjunction_function(negate(D))
    return ValueOracle.exact(lambda bits: 1.0 - disyuncion(bits), D.universe, name="conj")


def verify_fdisj_submodular(D: BitDataset,
                            evaluator: Optional[Callable[[BitDataset, int], float]] = None) -> bool:
    """Chequeo exhaustivo de que F_Disj es monótona y submodular."""
    if evaluator is None:
        oraculo = fdisj_oracle(D)
    else:
        oraculo = ValueOracle.exact(lambda bits: evaluator(D, bits), D.universe, name="F_eval")
    return check_monotone(oraculo) and check_submodular(oraculo)


# ============================================
# DISTRIBUCIÓN DE ANCHO W
# ============================================

@dataclass(frozen=True)
class WidthSampler:
    """Uniforme sobre las máscaras de peso exactamente w."""

    width: int
    d: int

    def __post_init__(self):
        if not 1 <= self.width <= self.d:
            raise ArgumentError(f"El ancho debe estar en 1..{self.d} (recibido: {self.width})")

    @property
    def universe(self) -> Universe:
        return Universe(self.d)

    def product_distribution(self) -> ProductDistribution:
        """Distribución de aprendizaje asociada: producto con tasa w/d."""
        return ProductDistribution.uniform(self.d, self.width / self.d)

    def describe(self) -> str:
        return f"width(w={self.width})"

    def sample(self, rng: np.random.Generator) -> SubsetMask:
        elegidos = rng.choice(self.d, size=self.width, replace=False)
        return SubsetMask.from_indices(self.universe, (int(x) for x in elegidos))

    def sample_masks(self, rng: np.random.Generator, m: int) -> np.ndarray:
        orden = np.argsort(rng.random((m, self.d)), axis=1)[:, : self.width]
        return np.bitwise_or.reduce(np.left_shift(np.int64(1), orden.astype(np.int64)), axis=1)

    def census_weights(self, masks: np.ndarray) -> np.ndarray:
        pesos = np.array([popcount(int(s)) == self.width for s in masks], dtype=float)
        return pesos / math.comb(self.d, self.width)


def width_sample(ws: WidthSampler, rng: np.random.Generator) -> SubsetMask:
    return ws.sample(rng)


# ============================================
# RELEASES PRIVADOS
# ============================================

def _oraculo_release(fn: Callable[[int], float], universe: Universe, n: int, k: int, tau: float,
                     epsilon: Optional[float], seed: int, noise_off: bool, exact_oracle: bool,
                     nombre: str) -> Tuple[ValueOracle, Optional[PrivacyBudget]]:
    if exact_oracle:
        exigir_modo_prueba("--exact-oracle")
        return ValueOracle.exact(fn, universe, name=nombre), None
    if noise_off:
        budget = PrivacyBudget.noiseless(k, n)
        return private_sq_oracle(fn, universe, budget, seed, 0.0, nombre), budget
    validar_positivo("epsilon", epsilon)
    check_database_size(n, k, tau, config.DEFAULT_FAILURE_PROBABILITY, epsilon)
    budget = PrivacyBudget(epsilon, k, n)
    return private_sq_oracle(fn, universe, budget, seed, tau, nombre), budget


def declared_release_queries(d: int, alpha: float, beta: float, general: bool,
                          failure_probability: Optional[float]) -> int:
    cap = learn_bucket_cap(d, alpha, beta, general)
    beta_falla = failure_probability or config.DEFAULT_FAILURE_PROBABILITY
    m = sample_count(alpha / 6, 1 - beta_falla / cap)
    return declared_query_bound(d, cap, m)


def release_disjunctions(D: BitDataset, alpha: float, beta: float, epsilon: Optional[float],
                         distribution: Optional[ProductDistribution], seed: int,
                         noise_off: bool = False, exact_oracle: bool = False,
                         failure_probability: Optional[float] = None,
                         workers: Optional[int] = None, width: Optional[int] = None) -> ReleaseStructure:
    """
    Release ε-DP de todas las disyunciones monótonas: Learn sobre F_Disj
    simulando cada consulta con d_S(D) + Lap(k/(nε)).
    """
    validar_intervalo_unitario("alpha", alpha)
    validar_intervalo_unitario("beta", beta)
    dist = distribution or ProductDistribution.uniform(D.d, config.DEFAULT_INCLUSION_RATE)
    gamma = gamma_for(alpha, beta)
    k = declared_release_queries(D.d, alpha, beta, False, failure_probability)
    oraculo, budget = _oraculo_release(
        disjunction_function(D), D.universe, D.n, k, gamma / 12, epsilon, seed,
        noise_off, exact_oracle, "F_disj",
    )
    h = learn(oraculo, alpha, beta, dist, seed, failure_probability, workers,
              family="disjunctions", width=width)
    if budget is not None:
        h.budget = budget.report()
        log("INFO", f"Presupuesto: {budget.used}/{budget.k} consultas, escala {budget.scale:.4g}")
    return h


def release_conjunctions(D: BitDataset, alpha: float, beta: float, epsilon: Optional[float],
                         distribution: Optional[ProductDistribution], seed: int,
                         noise_off: bool = False, exact_oracle: bool = False,
                         failure_probability: Optional[float] = None,
                         workers: Optional[int] = None, width: Optional[int] = None) -> ReleaseStructure:
    """Disyunciones sobre negate(D); las respuestas se devuelven como 1 − μ."""
    h = release_disjunctions(negate(D), alpha, beta, epsilon, distribution, seed, noise_off,
                             exact_oracle, failure_probability, workers, width)
    h.family = "conjunctions"
    h.answer_transform = "complement"
    return h


def release_widths(D: BitDataset, widths: Sequence[int], alpha: float, beta: float,
                   epsilon: Optional[float], seed: int, conjunctions: bool = True,
                   noise_off: bool = False, exact_oracle: bool = False,
                   failure_probability: Optional[float] = None,
                   workers: Optional[int] = None) -> List[ReleaseStructure]:
    """
    Una estructura por ancho w, aprendida con tasa w/d. El ε total se reparte
    en partes iguales entre los anchos.
    """
    if not widths:
        raise ArgumentError("Se requiere al menos un ancho")
    eps_w = None if epsilon is None else epsilon / len(widths)
    liberar = release_conjunctions if conjunctions else release_disjunctions
    estructuras = []
    for w in widths:
        ws = WidthSampler(w, D.d)
        estructuras.append(liberar(D, alpha, beta, eps_w, ws.product_distribution(), seed,
                                   noise_off, exact_oracle, failure_probability, workers, width=w))
    return estructuras


# ============================================
# GRAFOS Y CORTES
# ============================================

@dataclass(frozen=True)
class Graph:
    """Grafo no dirigido sin lazos ni aristas repetidas."""

    vertex_count: int
    edges: Tuple[Tuple[int, int], ...]
    source: Optional[str] = None
    sha256: str = ""

    def __post_init__(self):
        if self.vertex_count < 1:
            raise DataFormatError("El grafo necesita al menos un vértice")
        vistas = set()
        for u, v in self.edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise DataFormatError(f"Arista ({u}, {v}) fuera de rango para |V|={self.vertex_count}")
            if u == v:
                raise DataFormatError(f"Lazo en el vértice {u}")
            clave = (min(u, v), max(u, v))
            if clave in vistas:
                raise DataFormatError(f"Arista repetida ({u}, {v})")
            vistas.add(clave)
        if not self.sha256:
            texto = f"{self.vertex_count}:" + ";".join(f"{u},{v}" for u, v in self.edges)
            object.__setattr__(self, "sha256", sha256_bytes(texto.encode()))

    @property
    def universe(self) -> Universe:
        return Universe(self.vertex_count)

    def degrees(self) -> np.ndarray:
        grados = np.zeros(self.vertex_count, dtype=np.int64)
        for u, v in self.edges:
            grados[u] += 1
            grados[v] += 1
        return grados


def load_graph(path: str) -> Graph:
    """Primera línea: cantidad de vértices; luego una arista `u v` por línea."""
    data = leer_bytes(path)
    lineas = [(i, l.split()) for i, l in enumerate(data.decode("utf-8").splitlines(), start=1) if l.strip()]
    if not lineas:
        raise DataFormatError(f"{path}: archivo vacío")
    try:
        num, campos = lineas[0]
        if len(campos) != 1:
            raise ValueError
        n = int(campos[0])
        aristas = []
        for num, campos in lineas[1:]:
            if len(campos) != 2:
                raise ValueError
            aristas.append((int(campos[0]), int(campos[1])))
    except ValueError:
        raise DataFormatError(f"{path}:{num}: línea mal formada") from None
    grafo = Graph(n, tuple(aristas), path, sha256_bytes(data))
    log("INFO", f"Grafo {path}: |V|={grafo.vertex_count}, |E|={len(grafo.edges)}")
    return grafo


def cut_function(G: Graph) -> Callable[[int], float]:
    if not G.edges:
        return lambda bits: 0.0
    us = np.array([u for u, _ in G.edges], dtype=np.int64)
    vs = np.array([v for _, v in G.edges], dtype=np.int64)
    norma = G.vertex_count ** 2

    def corte(bits: int) -> float:
        s = np.int64(bits)
        return np.count_nonzero(((s >> us) & 1) != ((s >> vs) & 1)) / norma

    return corte


def cut_value(G: Graph, S: MaskLike) -> float:
    """f_G(S) = |{aristas con un extremo en S}| / |V|²."""
    if isinstance(S, SubsetMask) and S.universe.size != G.vertex_count:
        raise ArgumentError(f"La máscara es de dimensión {S.universe.size}, el grafo tiene {G.vertex_count} vértices")
    bits = as_bits(S, G.universe)
    cruzan = sum(1 for u, v in G.edges if ((bits >> u) & 1) != ((bits >> v) & 1))
    return cruzan / G.vertex_count ** 2


def cut_oracle(G: Graph) -> ValueOracle:
    return ValueOracle.exact(cut_function(G), G.universe, name="cut")


def high_influence_vertices(G: Graph, threshold: float) -> List[int]:
    """Vértices con grado/|V|² > threshold: los únicos que pueden entrar a un bucket."""
    grados = G.degrees() / G.vertex_count ** 2
    return [int(v) for v in np.flatnonzero(grados > threshold)]


def cut_bucket_bound(G: Graph, gamma: float, tau: float) -> int:
    """
    Cota 4^{|H|} para los pares (B, C) de la decomposición doble, con H los
    vértices de influencia > γ/3 − 2τ (umbral de expansión menos el error).
    """
    umbral = gamma / 3 - 2 * tau
    return 4 ** len(high_influence_vertices(G, umbral))


def release_cuts(G: Graph, alpha: float, beta: float, epsilon: Optional[float],
                 distribution: Optional[ProductDistribution], seed: int,
                 noise_off: bool = False, exact_oracle: bool = False,
                 failure_probability: Optional[float] = None,
                 workers: Optional[int] = None) -> ReleaseStructure:
    """
    Release ε-DP de la función de corte (sensibilidad 1/|V|² por arista) con
    la decomposición doble.
    """
    validar_intervalo_unitario("alpha", alpha)
    validar_intervalo_unitario("beta", beta)
    d = G.vertex_count
    dist = distribution or ProductDistribution.uniform(d, config.DEFAULT_INCLUSION_RATE)
    gamma = gamma_for(alpha, beta)
    tau = gamma / 12
    k = declared_release_queries(d, alpha, beta, True, failure_probability)
    oraculo, budget = _oraculo_release(
        cut_function(G), G.universe, d * d, k, tau, epsilon, seed,
        noise_off, exact_oracle, "cut",
    )
    h = learn_general(oraculo, alpha, beta, dist, seed, failure_probability, workers, family="cuts")
    cota = cut_bucket_bound(G, gamma, oraculo.tolerance)
    if len(h.decomposition) > cota:
        mensaje = f"La decomposición tiene {len(h.decomposition)} pares, más que la cota {cota}"
        if budget is None or budget.noise_off:
            raise CapacityError(mensaje)
        # con Laplace, posible si alguna respuesta se alejó más de τ
        log("WARNING", mensaje)
    if budget is not None:
        h.budget = budget.report()
    return h
