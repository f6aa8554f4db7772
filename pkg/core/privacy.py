"""
Mecanismo de Laplace, oráculo SQ privado y contabilidad de presupuesto
"""
import math
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from core.submodular import MaskLike, Universe, ValueOracle
from dependencies import derivar_rng, exigir_modo_prueba, validar_positivo
from errors import ArgumentError, BudgetError, PreconditionError
from models.schemas import BudgetReport
from utils.registro import log

# |u| < 1/2 estricto para que ln(1 − 2|u|) sea finito
_U_MAX = 0.5 - 2.0 ** -54


# ============================================
# MECANISMO DE LAPLACE
# ============================================

def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    """Lap(b) por CDF inversa: u ∈ (−½, ½), x = −b·sign(u)·ln(1 − 2|u|)."""
    validar_positivo("scale", scale)
    u = rng.random() - 0.5
    a = min(abs(u), _U_MAX)
    return float(-scale * math.copysign(1.0, u) * math.log1p(-2 * a))


def laplace_samples(scale: float, rng: np.random.Generator, size: int) -> np.ndarray:
    validar_positivo("scale", scale)
    u = rng.random(size) - 0.5
    a = np.minimum(np.abs(u), _U_MAX)
    return -scale * np.sign(u) * np.log1p(-2 * a)


def laplace_cdf(x, scale: float):
    """CDF exacta de Lap(b)."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(x / scale), 1 - 0.5 * np.exp(-x / scale))


# ============================================
# PRESUPUESTO
# ============================================

@dataclass(frozen=True)
class NoisyAnswer:
    value: float
    scale: float


class PrivacyBudget:
    """
    Presupuesto ε para k consultas de conteo sobre n registros: cada consulta
    distinta recibe ruido Lap(k/(nε)). Pasar de k consultas es un error.
    """

    def __init__(self, epsilon: Optional[float], k: int, n: int, noise_off: bool = False):
        if noise_off:
            exigir_modo_prueba("Un oráculo sin ruido (escala 0)")
        else:
            validar_positivo("epsilon", epsilon)
        if k < 1 or n < 1:
            raise ArgumentError(f"k y n deben ser >= 1 (recibido: k={k}, n={n})")
        self.epsilon = None if epsilon is None else float(epsilon)
        self.k = int(k)
        self.n = int(n)
        self.noise_off = noise_off
        self._used = 0
        self._lock = threading.Lock()

    @classmethod
    def noiseless(cls, k: int, n: int) -> "PrivacyBudget":
        return cls(None, k, n, noise_off=True)

    @property
    def scale(self) -> float:
        if self.noise_off:
            return 0.0
        return self.k / (self.n * self.epsilon)

    @property
    def used(self) -> int:
        return self._used

    @property
    def remaining(self) -> int:
        return self.k - self._used

    def consume(self) -> None:
        with self._lock:
            if self._used >= self.k:
                raise BudgetError(f"Presupuesto agotado: ya se respondieron las {self.k} consultas declaradas")
            self._used += 1

    def report(self) -> BudgetReport:
        return BudgetReport(
            epsilon=self.epsilon, k=self.k, used=self._used, n=self.n,
            scale=self.scale, noise_off=self.noise_off,
        )


def min_database_size(k: int, tau: float, beta: float, epsilon: float) -> int:
    """n >= k(ln k + ln(1/β)) / (ετ): con ese n las k respuestas quedan a τ con prob. 1 − β."""
    if k < 1:
        raise ArgumentError(f"k debe ser >= 1 (recibido: {k})")
    validar_positivo("tau", tau)
    validar_positivo("epsilon", epsilon)
    if not 0 < beta < 1:
        raise ArgumentError(f"beta debe estar en (0, 1) (recibido: {beta})")
    cota = k * (math.log(k) + math.log(1 / beta)) / (epsilon * tau)
    return max(1, math.ceil(cota - 1e-9))


def tail_check(budget: PrivacyBudget, tau: float, beta: float) -> bool:
    """k·exp(−τ·nε/k) <= β (cota de unión sobre las k colas de Laplace)."""
    if budget.noise_off:
        return True
    return budget.k * math.exp(-tau / budget.scale) <= beta * (1 + 1e-12)


def check_database_size(n: int, k: int, tau: float, beta: float, epsilon: float) -> None:
    requerido = min_database_size(k, tau, beta, epsilon)
    if n < requerido:
        raise PreconditionError(
            f"Base de datos demasiado chica: n={n}, se requieren n >= {requerido} "
            f"para k={k} consultas con tolerancia {tau:.3g} (ε={epsilon:g}, β={beta:g})"
        )


# ============================================
# ORÁCULO SQ PRIVADO
# ============================================

class PrivateCountingOracle(ValueOracle):
    """
    Responde consultas de conteo (1/n)Σ q(x) + Lap(k/(nε)). El ruido se
    sortea una sola vez por consulta distinta, después de descontar el
    presupuesto, y se deriva de (seed, máscara).
    """

    def __init__(self, fn: Callable[[int], float], universe: Universe, budget: PrivacyBudget,
                 seed: int, tolerance: float = 0.0, name: str = "private"):
        self.budget = budget
        self.seed = seed
        super().__init__(fn, universe, tolerance=tolerance, noise=self._ruido, name=name)

    def _ruido(self, bits: int) -> float:
        self.budget.consume()
        if self.budget.noise_off:
            return 0.0
        return laplace_sample(self.budget.scale, derivar_rng(self.seed, bits))

    @property
    def noise_draws(self) -> int:
        return self.budget.used

    def noisy_answer(self, S: MaskLike) -> NoisyAnswer:
        return NoisyAnswer(self.evaluate(S), self.budget.scale)


def private_sq_oracle(fn: Callable[[int], float], universe: Universe, budget: PrivacyBudget,
                      seed: int, tolerance: float = 0.0, name: str = "private") -> PrivateCountingOracle:
    """Envuelve una consulta de conteo de sensibilidad 1/n con el mecanismo de Laplace."""
    oraculo = PrivateCountingOracle(fn, universe, budget, seed, tolerance, name)
    log("DEBUG", f"Oráculo privado {name}: k={budget.k}, n={budget.n}, escala={budget.scale:.4g}")
    return oraculo
