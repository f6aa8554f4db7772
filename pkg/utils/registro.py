"""
Logging a stderr con etiquetas [INFO], [OK], [WARNING], [ERROR]
"""
import sys

import config

_NIVELES = {"DEBUG": 10, "INFO": 20, "OK": 20, "WARNING": 30, "ERROR": 40}


def log(nivel: str, mensaje: str) -> None:
    """Imprime `[NIVEL] mensaje` en stderr si supera el umbral configurado."""
    umbral = _NIVELES.get(config.LOG_LEVEL, 20)
    if _NIVELES.get(nivel, 20) < umbral:
        return
    print(f"[{nivel}] {mensaje}", file=sys.stderr)
