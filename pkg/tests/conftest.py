"""
Fixtures compartidas: modo de prueba, generadores de funciones y datasets
"""
import numpy as np
import pytest

import config
from core.queries import BitDataset, Graph
from core.submodular import Universe, ValueOracle, coverage_function, popcount


@pytest.fixture
def modo_prueba(monkeypatch):
    """Activa el arnés de pruebas (oráculos exactos y escala de ruido 0)."""
    monkeypatch.setattr(config, "TEST_MODE", True)


@pytest.fixture
def fuera_de_prueba(monkeypatch):
    monkeypatch.setattr(config, "TEST_MODE", False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cobertura_aleatoria():
    """Fábrica de funciones de cobertura con d conjuntos sobre un conjunto base de m elementos."""

    def crear(seed: int, d: int, ground: int = 16, max_size: int = 5) -> ValueOracle:
        gen = np.random.default_rng(seed)
        sistema = [
            set(gen.choice(ground, size=int(gen.integers(1, max_size + 1)), replace=False).tolist())
            for _ in range(d)
        ]
        return coverage_function(sistema, ground)

    return crear


@pytest.fixture
def modular():
    """f(S) = |S| / d."""

    def crear(d: int) -> ValueOracle:
        return ValueOracle.exact(lambda bits: popcount(bits) / d, Universe(d), name="modular")

    return crear


@pytest.fixture
def dataset_aleatorio():
    def crear(seed: int, n: int, d: int, p: float = 0.5) -> BitDataset:
        gen = np.random.default_rng(seed)
        return BitDataset((gen.random((n, d)) < p).astype(np.uint8))

    return crear


@pytest.fixture
def grafo_aleatorio():
    """G(n, p) de Erdős–Rényi."""

    def crear(seed: int, n: int, p: float) -> Graph:
        gen = np.random.default_rng(seed)
        aristas = tuple((u, v) for u in range(n) for v in range(u + 1, n) if gen.random() < p)
        return Graph(n, aristas)

    return crear


@pytest.fixture
def escribir_csv(tmp_path):
    """Escribe un dataset 0/1 como CSV y devuelve el path."""

    def escribir(nombre: str, filas) -> str:
        ruta = tmp_path / nombre
        ruta.write_text("\n".join(",".join(str(int(b)) for b in fila) for fila in filas) + "\n")
        return str(ruta)

    return escribir
