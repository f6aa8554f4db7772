"""
Dependencias compartidas - Validación de parámetros, modo de prueba y RNG
"""
import math
from typing import Optional

import numpy as np

import config
from errors import ArgumentError, PreconditionError


def validar_positivo(nombre: str, valor: float) -> float:
    """Verifica que el parámetro sea un real finito > 0."""
    if valor is None or not math.isfinite(valor) or valor <= 0:
        raise ArgumentError(f"{nombre} debe ser positivo (recibido: {valor})")
    return float(valor)


def validar_intervalo_unitario(nombre: str, valor: float) -> float:
    """Verifica 0 < valor <= 1 (α, β de un release)."""
    if valor is None or not math.isfinite(valor) or not 0 < valor <= 1:
        raise ArgumentError(f"{nombre} debe estar en (0, 1] (recibido: {valor})")
    return float(valor)


def validar_probabilidad(nombre: str, valor: float) -> float:
    """Verifica 0 <= valor <= 1."""
    if valor is None or not math.isfinite(valor) or not 0 <= valor <= 1:
        raise ArgumentError(f"{nombre} debe estar en [0, 1] (recibido: {valor})")
    return float(valor)


def exigir_modo_prueba(motivo: str) -> None:
    """
    Los oráculos sin ruido solo existen dentro del arnés de pruebas.
    Fuera de SUBMOD_TEST_MODE=1 es una precondición fallida.
    """
    if not config.TEST_MODE:
        raise PreconditionError(
            f"{motivo} solo está permitido con SUBMOD_TEST_MODE=1 (arnés de pruebas)"
        )


def derivar_rng(seed: Optional[int], *claves: int) -> np.random.Generator:
    """
    Stream de números aleatorios derivado de (seed, claves...).
    Las claves (p. ej. la máscara de un bucket) hacen que el resultado no
    dependa del orden en que se procesan los buckets.
    """
    if seed is None:
        raise ArgumentError("Se requiere una semilla para toda ejecución aleatoria")
    entropia = [int(seed)] + [int(c) for c in claves]
    if any(e < 0 for e in entropia):
        raise ArgumentError("La semilla y las claves deben ser no negativas")
    return np.random.default_rng(np.random.SeedSequence(entropia))
