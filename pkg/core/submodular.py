"""
Núcleo submodular - Universo, máscaras, oráculos de valor y chequeos exhaustivos
"""
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

import config
from dependencies import derivar_rng, validar_positivo
from errors import ArgumentError, CapacityError, DomainError


def iter_bits(bits: int) -> Iterator[int]:
    """Índices de los bits encendidos, en orden ascendente."""
    while bits:
        bajo = bits & -bits
        yield bajo.bit_length() - 1
        bits ^= bajo


def popcount(bits: int) -> int:
    return bin(bits).count("1")


@dataclass(frozen=True)
class Universe:
    """Conjunto base U = {0..d-1} con un orden total fijo (ascendente por defecto)."""

    size: int
    ordering: Tuple[int, ...] = ()

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 1:
            raise ArgumentError(f"El universo necesita al menos un elemento (recibido: {self.size})")
        orden = tuple(self.ordering) if self.ordering else tuple(range(self.size))
        if sorted(orden) != list(range(self.size)):
            raise ArgumentError("El orden debe ser una permutación de 0..d-1")
        object.__setattr__(self, "ordering", orden)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def elements(self, bits: Optional[int] = None) -> list:
        """Elementos de `bits` (o de todo U) recorridos en el orden del universo."""
        if bits is None:
            return list(self.ordering)
        return [x for x in self.ordering if (bits >> x) & 1]

    def check_mask(self, bits: int) -> int:
        if bits < 0 or bits > self.full_mask:
            raise ArgumentError(f"Máscara {bits:#x} fuera de un universo de tamaño {self.size}")
        return bits

    def check_element(self, x: int) -> int:
        if not 0 <= x < self.size:
            raise ArgumentError(f"Elemento {x} fuera de un universo de tamaño {self.size}")
        return x


@dataclass(frozen=True)
class SubsetMask:
    """Subconjunto S ⊆ U como vector de bits."""

    bits: int
    universe: Universe

    def __post_init__(self):
        self.universe.check_mask(self.bits)

    @classmethod
    def from_indices(cls, universe: Universe, indices: Iterable[int]) -> "SubsetMask":
        bits = 0
        for x in indices:
            bits |= 1 << universe.check_element(x)
        return cls(bits, universe)

    @classmethod
    def empty(cls, universe: Universe) -> "SubsetMask":
        return cls(0, universe)

    @classmethod
    def full(cls, universe: Universe) -> "SubsetMask":
        return cls(universe.full_mask, universe)

    def _otro(self, other: "SubsetMask") -> int:
        if other.universe.size != self.universe.size:
            raise ArgumentError("Las máscaras pertenecen a universos distintos")
        return other.bits

    def union(self, other: "SubsetMask") -> "SubsetMask":
        return SubsetMask(self.bits | self._otro(other), self.universe)

    def intersection(self, other: "SubsetMask") -> "SubsetMask":
        return SubsetMask(self.bits & self._otro(other), self.universe)

    def difference(self, other: "SubsetMask") -> "SubsetMask":
        return SubsetMask(self.bits & ~self._otro(other), self.universe)

    def complement(self) -> "SubsetMask":
        return SubsetMask(self.universe.full_mask & ~self.bits, self.universe)

    def issubset(self, other: "SubsetMask") -> bool:
        return self.bits & ~self._otro(other) == 0

    def __contains__(self, x: int) -> bool:
        return bool((self.bits >> x) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.universe.elements(self.bits))

    def __len__(self) -> int:
        return popcount(self.bits)

    @property
    def hex(self) -> str:
        return format(self.bits, "x")


MaskLike = Union[SubsetMask, int]


def as_bits(S: MaskLike, universe: Universe) -> int:
    """Normaliza una máscara (SubsetMask o int) a int, validando el universo."""
    if isinstance(S, SubsetMask):
        if S.universe.size != universe.size:
            raise ArgumentError("La máscara pertenece a otro universo")
        return S.bits
    return universe.check_mask(int(S))


def uniform_noise(tolerance: float, seed: int) -> Callable[[int], float]:
    """Ruido uniforme en [-τ, τ] derivado de (seed, máscara): una sola muestra por máscara."""

    def ruido(bits: int) -> float:
        return float(derivar_rng(seed, bits).uniform(-tolerance, tolerance))

    return ruido


class ValueOracle:
    """
    Oráculo de valor f: 2^U → [0,1], exacto (τ = 0) o tolerante.

    Las respuestas se memorizan por máscara: una consulta repetida devuelve
    exactamente el mismo valor y no cuenta como consulta nueva. El caché y
    los contadores están protegidos por un lock.
    """

    def __init__(
        self,
        fn: Callable[[int], float],
        universe: Universe,
        tolerance: float = 0.0,
        noise: Optional[Callable[[int], float]] = None,
        truth: Optional[Callable[[int], float]] = None,
        name: str = "f",
    ):
        if tolerance < 0:
            raise ArgumentError(f"La tolerancia no puede ser negativa (recibido: {tolerance})")
        self.fn = fn
        self.universe = universe
        self.tolerance = float(tolerance)
        self.noise = noise
        self.name = name
        self._truth = truth
        self._memo = {}
        self._lock = threading.RLock()
        self._queries = 0
        self._calls = 0

    @classmethod
    def exact(cls, fn: Callable[[int], float], universe: Universe, name: str = "f") -> "ValueOracle":
        return cls(fn, universe, tolerance=0.0, name=name)

    @classmethod
    def tolerant(cls, fn: Callable[[int], float], universe: Universe, tolerance: float,
                 seed: int, name: str = "f") -> "ValueOracle":
        """Oráculo de prueba: agrega ruido uniforme truncado en [-τ, τ]."""
        validar_positivo("tolerance", tolerance)
        return cls(fn, universe, tolerance=tolerance, noise=uniform_noise(tolerance, seed), name=name)

    @property
    def query_count(self) -> int:
        """Consultas distintas hechas a la función subyacente."""
        return self._queries

    @property
    def call_count(self) -> int:
        return self._calls

    def _verdad(self, bits: int) -> float:
        valor = float(self.fn(bits))
        if not -config.FLOAT_TOLERANCE <= valor <= 1 + config.FLOAT_TOLERANCE:
            raise DomainError(f"{self.name}({bits:#x}) = {valor} está fuera de [0,1]")
        return min(1.0, max(0.0, valor))

    def evaluate(self, S: MaskLike) -> float:
        bits = as_bits(S, self.universe)
        with self._lock:
            self._calls += 1
            if bits in self._memo:
                return self._memo[bits]
            valor = self._verdad(bits)
            if self.noise is not None:
                valor = min(1.0, max(0.0, valor + self.noise(bits)))
            self._memo[bits] = valor
            self._queries += 1
            return valor

    __call__ = evaluate

    def true_value(self, S: MaskLike) -> float:
        """Valor verdadero sin ruido ni memoria (solo para el arnés de pruebas y censos)."""
        bits = as_bits(S, self.universe)
        if self._truth is not None:
            return float(self._truth(bits))
        return self._verdad(bits)


def marginal(oracle: ValueOracle, S: MaskLike, x: int) -> float:
    """∂_x f(S) = f(S ∪ {x}) − f(S), con dos consultas al oráculo."""
    bits = as_bits(S, oracle.universe)
    oracle.universe.check_element(x)
    if (bits >> x) & 1:
        return 0.0
    return oracle.evaluate(bits | (1 << x)) - oracle.evaluate(bits)


def restrict_function(oracle: ValueOracle, B: MaskLike) -> ValueOracle:
    """g^B(S) = f(S ∪ B)."""
    base = as_bits(B, oracle.universe)
    return ValueOracle(
        lambda bits: oracle.evaluate(bits | base),
        oracle.universe,
        tolerance=oracle.tolerance,
        truth=lambda bits: oracle.true_value(bits | base),
        name=f"{oracle.name}|{base:x}",
    )


def complement_function(oracle: ValueOracle, V: MaskLike) -> ValueOracle:
    """f̄(S) = f(V \\ S) sobre 2^V. Es submodular si f lo es."""
    dominio = as_bits(V, oracle.universe)
    return ValueOracle(
        lambda bits: oracle.evaluate(dominio & ~bits),
        oracle.universe,
        tolerance=oracle.tolerance,
        truth=lambda bits: oracle.true_value(dominio & ~bits),
        name=f"~{oracle.name}",
    )


def coverage_function(set_system: Sequence[Iterable[int]], ground_size: int,
                      universe: Optional[Universe] = None) -> ValueOracle:
    """Cobertura normalizada |∪_{i∈S} X_i| / ground_size (monótona y submodular)."""
    validar_positivo("ground_size", ground_size)
    conjuntos = []
    for X in set_system:
        m = 0
        for a in X:
            if not 0 <= a < ground_size:
                raise ArgumentError(f"Elemento {a} fuera del conjunto base de tamaño {ground_size}")
            m |= 1 << a
        conjuntos.append(m)
    universo = universe or Universe(len(conjuntos))

    def cobertura(bits: int) -> float:
        cubierto = 0
        for i in iter_bits(bits):
            cubierto |= conjuntos[i]
        return popcount(cubierto) / ground_size

    return ValueOracle.exact(cobertura, universo, name="coverage")


# ============================================
# CHEQUEOS EXHAUSTIVOS (ORÁCULOS DE PRUEBA)
# ============================================

@dataclass
class ValueTable:
    """Valores de un oráculo sobre todos los subconjuntos de `domain`."""

    elements: list
    masks: np.ndarray
    values: np.ndarray = field(repr=False)

    def marginals(self, j: int) -> np.ndarray:
        """∂ del j-ésimo elemento del dominio, en los índices que no lo contienen."""
        idx = np.arange(self.values.size)
        sin = idx[(idx >> j) & 1 == 0]
        return self.values[sin | (1 << j)] - self.values[sin]


def _exigir_exhaustivo(k: int) -> None:
    if k > config.MAX_EXHAUSTIVE_DIMENSION:
        raise CapacityError(
            f"Chequeo exhaustivo sobre {k} elementos supera el límite de "
            f"{config.MAX_EXHAUSTIVE_DIMENSION}"
        )


def tabulate(oracle: ValueOracle, domain: Optional[MaskLike] = None, exact: bool = False) -> ValueTable:
    """
    Evalúa el oráculo en los 2^k subconjuntos del dominio. El índice i de la
    tabla codifica el subconjunto con el bit j ↔ j-ésimo elemento del dominio.
    """
    dom = oracle.universe.full_mask if domain is None else as_bits(domain, oracle.universe)
    elementos = oracle.universe.elements(dom)
    _exigir_exhaustivo(len(elementos))
    idx = np.arange(1 << len(elementos), dtype=np.int64)
    mascaras = np.zeros_like(idx)
    for j, x in enumerate(elementos):
        mascaras |= ((idx >> j) & 1) << x
    evaluar = oracle.true_value if exact else oracle.evaluate
    valores = np.fromiter((evaluar(int(m)) for m in mascaras), dtype=float, count=idx.size)
    return ValueTable(elementos, mascaras, valores)


def check_submodular(oracle: ValueOracle, universe: Optional[Universe] = None) -> bool:
    """
    ∂_x f(S) ≥ ∂_x f(T) para S ⊆ T, x ∉ T. Se verifica la forma local
    equivalente ∂_x f(S) ≥ ∂_x f(S ∪ {y}).
    """
    if universe is not None and universe.size != oracle.universe.size:
        raise ArgumentError("El universo no coincide con el del oráculo")
    tabla = tabulate(oracle)
    k = len(tabla.elements)
    idx = np.arange(tabla.values.size)
    for j in range(k):
        bj = 1 << j
        marg = np.zeros(tabla.values.size)
        sin_j = (idx & bj) == 0
        marg[sin_j] = tabla.values[idx[sin_j] | bj] - tabla.values[idx[sin_j]]
        for i in range(k):
            if i == j:
                continue
            bi = 1 << i
            base = idx[sin_j & ((idx & bi) == 0)]
            if np.any(marg[base] < marg[base | bi] - config.FLOAT_TOLERANCE):
                return False
    return True


def check_monotone(oracle: ValueOracle) -> bool:
    tabla = tabulate(oracle)
    return all(
        np.all(tabla.marginals(j) >= -config.FLOAT_TOLERANCE)
        for j in range(len(tabla.elements))
    )


def max_marginal(oracle: ValueOracle, domain: Optional[MaskLike] = None, signed: bool = False) -> float:
    """sup ∂_x f(S) (o sup |∂_x f(S)|) sobre S ⊆ domain, x ∈ domain."""
    tabla = tabulate(oracle, domain)
    mejor = 0.0
    for j in range(len(tabla.elements)):
        m = tabla.marginals(j)
        mejor = max(mejor, float(np.max(np.abs(m) if signed else m)))
    return mejor


def min_marginal(oracle: ValueOracle, domain: Optional[MaskLike] = None) -> float:
    tabla = tabulate(oracle, domain)
    peor = 0.0
    for j in range(len(tabla.elements)):
        peor = min(peor, float(np.min(tabla.marginals(j))))
    return peor


def check_lipschitz(oracle: ValueOracle, gamma: float, signed: bool = True,
                    domain: Optional[MaskLike] = None) -> bool:
    """
    signed: sup |∂_x f(S)| ≤ γ. Si no, la condición unilateral sup ∂_x f(S) ≤ γ.
    """
    validar_positivo("gamma", gamma)
    return max_marginal(oracle, domain, signed=signed) <= gamma + config.FLOAT_TOLERANCE
