"""
Decomposición de funciones submodulares en piezas Lipschitz.

Tres variantes: monótona con consultas exactas, monótona con consultas
tolerantes y la doble decomposición (f y luego el complemento de cada
restricción) que da piezas Lipschitz en valor absoluto para f no monótonas.
"""
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple, Union

import config
from core.submodular import (
    MaskLike, SubsetMask, Universe, ValueOracle, as_bits, complement_function,
    marginal, popcount, restrict_function,
)
from dependencies import validar_positivo
from errors import ArgumentError, BucketLookupError, CapacityError
from models.schemas import (
    BuildStats, DecompositionDocument, GeneralDecompositionDocument,
    InnerDecompositionDocument, NodeDocument,
)
from utils.archivos import hex_to_mask, mask_to_hex
from utils.registro import log

MODE_EXACT = "exact"
MODE_TOLERANT = "tolerant"

PairKey = Tuple[int, int]
BucketKey = Union[int, PairKey]


@dataclass(frozen=True)
class DecompositionNode:
    """
    Un bucket B con su conjunto admisible V(B), el conjunto rechazado T(B)
    y el conjunto de expansión H(B) (elementos con marginal alta en B).
    """

    B: int
    V_of_B: int
    T_of_B: int
    expand: int

    @property
    def depth(self) -> int:
        return popcount(self.B)


def max_depth(gamma: float, mode: str) -> int:
    return math.ceil((1 if mode == MODE_EXACT else 6) / gamma)


def bucket_capacity(n_elements: int, depth: int) -> int:
    """Cantidad de subconjuntos de tamaño <= depth (cota de |I|)."""
    if depth >= n_elements:
        return 1 << n_elements
    return sum(math.comb(n_elements, k) for k in range(depth + 1))


class MonotoneDecomposition:
    """Familia de buckets I con sus mapas F (route), V y T."""

    def __init__(self, universe: Universe, gamma: float, mode: str, domain: int,
                 nodes: Dict[int, DecompositionNode], stats: BuildStats,
                 oracle: Optional[ValueOracle] = None):
        self.universe = universe
        self.gamma = gamma
        self.mode = mode
        self.domain = domain
        self.nodes = nodes
        self.stats = stats
        self.oracle = oracle
        self._orden = universe.elements(domain)

    @property
    def expand_threshold(self) -> float:
        return self.gamma if self.mode == MODE_EXACT else self.gamma / 3

    @property
    def admissible_threshold(self) -> float:
        return self.gamma if self.mode == MODE_EXACT else 2 * self.gamma / 3

    def __len__(self) -> int:
        return len(self.nodes)

    def keys(self) -> List[int]:
        return list(self.nodes)

    def route_targets(self) -> List[int]:
        return self.keys()

    def node(self, B: int) -> DecompositionNode:
        try:
            return self.nodes[B]
        except KeyError:
            raise BucketLookupError(f"El bucket {B:#x} no pertenece a la decomposición") from None

    def route_bits(self, bits: int) -> int:
        """F(S): camino raíz-hoja, agregando el menor x ∈ S con marginal alta."""
        actual = 0
        expand = self.nodes[0].expand
        for x in self._orden:
            if (bits >> x) & 1 and (expand >> x) & 1:
                actual |= 1 << x
                expand = self.nodes[actual].expand
        return actual

    def cell(self, B: int) -> Tuple[int, int]:
        """Celda de ruteo de B como (forzados dentro, forzados fuera) dentro del dominio."""
        n = self.node(B)
        return n.B, n.T_of_B | (self.domain & ~n.V_of_B)

    def to_document(self) -> DecompositionDocument:
        return DecompositionDocument(
            version=config.FORMAT_VERSION,
            mode=self.mode,
            gamma=self.gamma,
            universe_size=self.universe.size,
            ordering=list(self.universe.ordering),
            domain=mask_to_hex(self.domain),
            expand_threshold=self.expand_threshold,
            admissible_threshold=self.admissible_threshold,
            nodes=[
                NodeDocument(
                    B=mask_to_hex(n.B), V=mask_to_hex(n.V_of_B),
                    T=mask_to_hex(n.T_of_B), H=mask_to_hex(n.expand), depth=n.depth,
                )
                for n in self.nodes.values()
            ],
            stats=self.stats,
        )

    @classmethod
    def from_document(cls, doc: DecompositionDocument) -> "MonotoneDecomposition":
        universo = Universe(doc.universe_size, tuple(doc.ordering))
        nodos = {}
        for nd in doc.nodes:
            B = hex_to_mask(nd.B)
            nodos[B] = DecompositionNode(B, hex_to_mask(nd.V), hex_to_mask(nd.T), hex_to_mask(nd.H))
        return cls(universo, doc.gamma, doc.mode, hex_to_mask(doc.domain), nodos, doc.stats)


def _construir(oracle: ValueOracle, gamma: float, mode: str, domain: int,
               max_nodes: Optional[int]) -> MonotoneDecomposition:
    universo = oracle.universe
    elementos = universo.elements(domain)
    profundidad = max_depth(gamma, mode)
    tope = max_nodes if max_nodes is not None else bucket_capacity(len(elementos), profundidad)
    umbral_exp = gamma if mode == MODE_EXACT else gamma / 3
    umbral_adm = gamma if mode == MODE_EXACT else 2 * gamma / 3
    consultas_antes = oracle.query_count

    familia = [0]
    for x in elementos:
        nuevos = [B | (1 << x) for B in familia if marginal(oracle, B, x) > umbral_exp]
        familia.extend(nuevos)
        if len(familia) > tope:
            raise CapacityError(
                f"La decomposición superó el tope de {tope} buckets; "
                f"el oráculo probablemente no es submodular"
            )

    altas, admisibles = {}, {}
    for B in familia:
        if popcount(B) > profundidad:
            raise CapacityError(f"Bucket {B:#x} de profundidad {popcount(B)} > {profundidad}")
        H = V = 0
        for x in elementos:
            m = marginal(oracle, B, x)
            if m > umbral_exp:
                H |= 1 << x
            if m <= umbral_adm:
                V |= 1 << x
        altas[B], admisibles[B] = H, V

    nodos = {}
    for B in familia:
        camino, rechazados = 0, 0
        for x in elementos:
            if (altas[camino] >> x) & 1:
                if (B >> x) & 1:
                    camino |= 1 << x
                else:
                    rechazados |= 1 << x
        nodos[B] = DecompositionNode(B, admisibles[B], rechazados, altas[B])

    stats = BuildStats(query_count=oracle.query_count - consultas_antes, node_count=len(nodos))
    log("DEBUG", f"Decomposición {mode} (γ={gamma:.6g}): {stats.node_count} buckets, "
                 f"{stats.query_count} consultas")
    return MonotoneDecomposition(universo, gamma, mode, domain, nodos, stats, oracle)


def decompose_monotone(oracle: ValueOracle, gamma: float,
                       max_nodes: Optional[int] = None) -> MonotoneDecomposition:
    """Decomposición con consultas exactas: expande cuando ∂_x f(B) > γ."""
    validar_positivo("gamma", gamma)
    if oracle.tolerance > 0:
        raise ArgumentError("decompose_monotone requiere un oráculo exacto; use decompose_tolerant")
    return _construir(oracle, gamma, MODE_EXACT, oracle.universe.full_mask, max_nodes)


def _exigir_tolerancia(oracle: ValueOracle, gamma: float) -> None:
    if oracle.tolerance > gamma / 12 + 1e-15:
        raise ArgumentError(
            f"La tolerancia del oráculo ({oracle.tolerance:.3g}) supera γ/12 = {gamma / 12:.3g}"
        )


def decompose_tolerant(oracle: ValueOracle, gamma: float, max_nodes: Optional[int] = None,
                       domain: Optional[MaskLike] = None) -> MonotoneDecomposition:
    """
    Decomposición con consultas de tolerancia <= γ/12: expande cuando
    ∂_x f̃(B) > γ/3 y admite en V(B) los x con ∂_x f̃(B) <= 2γ/3.
    """
    validar_positivo("gamma", gamma)
    _exigir_tolerancia(oracle, gamma)
    dominio = oracle.universe.full_mask if domain is None else as_bits(domain, oracle.universe)
    return _construir(oracle, gamma, MODE_TOLERANT, dominio, max_nodes)


class DoubleDecomposition:
    """
    Decomposición de f seguida, para cada bucket B, de la decomposición de
    h_B(R) = f(B ∪ (V_f(B) \\ R)) sobre V_f(B). La segunda etapa rutea el
    argumento complementado R = V_f(B) \\ S.
    """

    def __init__(self, outer: MonotoneDecomposition, inner: Dict[int, MonotoneDecomposition],
                 gamma: float):
        self.outer = outer
        self.inner = inner
        self.gamma = gamma
        self.universe = outer.universe

    def _inner(self, B: int) -> MonotoneDecomposition:
        try:
            return self.inner[B]
        except KeyError:
            raise BucketLookupError(f"El bucket externo {B:#x} no existe") from None

    def route_bits(self, bits: int) -> PairKey:
        B = self.outer.route_bits(bits)
        W = self.outer.nodes[B].V_of_B
        return B, self.inner[B].route_bits(W & ~bits)

    def cell(self, key: PairKey) -> Tuple[int, int]:
        """Celda del par (B, C) en coordenadas de S (forzados dentro, forzados fuera)."""
        B, C = key
        nB = self.outer.node(B)
        nC = self._inner(B).node(C)
        W = nB.V_of_B
        dentro = B | nC.T_of_B | (W & ~nC.V_of_B)
        fuera = nB.T_of_B | (self.universe.full_mask & ~W) | C
        return dentro, fuera

    def admissible_set(self, key: PairKey) -> int:
        B, C = key
        return self.outer.node(B).V_of_B & self._inner(B).node(C).V_of_B

    def reachable(self, key: PairKey) -> bool:
        dentro, fuera = self.cell(key)
        return dentro & fuera == 0

    def pairs(self) -> Iterator[PairKey]:
        """Pares (B, C) con celda no vacía (con oráculo exacto, los únicos destinos de route)."""
        for B, interna in self.inner.items():
            for C in interna.nodes:
                if self.reachable((B, C)):
                    yield B, C

    def keys(self) -> List[PairKey]:
        return list(self.pairs())

    def route_targets(self) -> List[PairKey]:
        """Todos los pares que `route_bits` puede devolver, incluso con celda vacía."""
        return [(B, C) for B, interna in self.inner.items() for C in interna.nodes]

    def __len__(self) -> int:
        return sum(1 for _ in self.pairs())

    @property
    def stats(self) -> BuildStats:
        return BuildStats(
            query_count=self.outer.stats.query_count
            + sum(d.stats.query_count for d in self.inner.values()),
            node_count=len(self),
        )

    def to_document(self) -> GeneralDecompositionDocument:
        return GeneralDecompositionDocument(
            version=config.FORMAT_VERSION,
            gamma=self.gamma,
            outer=self.outer.to_document(),
            inner=[
                InnerDecompositionDocument(B=mask_to_hex(B), decomposition=d.to_document())
                for B, d in self.inner.items()
            ],
            stats=self.stats,
        )

    @classmethod
    def from_document(cls, doc: GeneralDecompositionDocument) -> "DoubleDecomposition":
        externa = MonotoneDecomposition.from_document(doc.outer)
        internas = {
            hex_to_mask(d.B): MonotoneDecomposition.from_document(d.decomposition) for d in doc.inner
        }
        return cls(externa, internas, doc.gamma)


def decompose_general(oracle: ValueOracle, gamma: float,
                      max_nodes: Optional[int] = None) -> DoubleDecomposition:
    """Piezas con |∂_x g^{B,C}(S)| <= γ para cualquier f submodular en [0,1]."""
    validar_positivo("gamma", gamma)
    _exigir_tolerancia(oracle, gamma)
    externa = decompose_tolerant(oracle, gamma, max_nodes)
    internas = {}
    for B, nodo in externa.nodes.items():
        h = complement_function(restrict_function(oracle, B), nodo.V_of_B)
        internas[B] = decompose_tolerant(h, gamma, max_nodes, domain=nodo.V_of_B)
    doble = DoubleDecomposition(externa, internas, gamma)
    log("DEBUG", f"Decomposición doble (γ={gamma:.6g}): {len(externa)} buckets externos, "
                 f"{len(doble)} pares")
    return doble


AnyDecomposition = Union[MonotoneDecomposition, DoubleDecomposition]


def route(dec: AnyDecomposition, S: MaskLike) -> BucketKey:
    """F(S): el bucket (o par) cuya celda contiene a S. No consulta el oráculo."""
    return dec.route_bits(as_bits(S, dec.universe))


def rejected_set(dec: AnyDecomposition, key: BucketKey) -> SubsetMask:
    """T(B), o T(B,C) = T_f(B) ∪ T_B(C) para la decomposición doble."""
    if isinstance(dec, DoubleDecomposition):
        if not isinstance(key, tuple):
            raise BucketLookupError("La decomposición doble se indexa por pares (B, C)")
        B, C = key
        bits = dec.outer.node(B).T_of_B | dec._inner(B).node(C).T_of_B
    else:
        if isinstance(key, tuple):
            raise BucketLookupError("La decomposición monótona se indexa por un bucket B")
        bits = dec.node(key).T_of_B
    return SubsetMask(bits, dec.universe)


def cell(dec: AnyDecomposition, key: BucketKey) -> Tuple[int, int]:
    return dec.cell(key)
