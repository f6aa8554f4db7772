"""
Excepciones de la librería.

Cada error lleva un `detail` legible y el código de salida que usa la CLI,
igual que un HTTPException lleva su status_code.
"""


class ReleaseError(Exception):
    """Error base. `exit_code` 1 = error interno, 2 = uso/precondición."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ArgumentError(ReleaseError):
    """Parámetro fuera de rango o inconsistente."""

    exit_code = 2


class PreconditionError(ReleaseError):
    """No se cumple una precondición (p. ej. base de datos demasiado chica)."""

    exit_code = 2


class DataFormatError(ReleaseError):
    """Archivo de entrada ilegible o mal formado."""

    exit_code = 2


class CapacityError(ReleaseError):
    """Se superó un límite de tamaño (universo o cantidad de buckets)."""


class BucketLookupError(ReleaseError):
    """El bucket pedido no existe en la decomposición."""


class BudgetError(ReleaseError):
    """Presupuesto de privacidad agotado."""


class ContractError(ReleaseError):
    """Un componente enchufable violó su contrato (p. ej. el weak learner)."""

    def __init__(self, detail: str, trace=None):
        super().__init__(detail)
        self.trace = trace


class DomainError(ReleaseError):
    """Argumento fuera del dominio matemático de la operación."""
