"""
Main entry point para la CLI de releases privados de consultas submodulares
"""
import argparse
import sys
import traceback
from typing import List, Optional

from config import VERSION
from errors import ReleaseError
from utils.registro import log

# Importar comandos
from commands import census, decompose, mw, release

# ============================================
# INICIALIZACIÓN
# ============================================


def construir_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="submod-release",
        description="Release privado de disyunciones, conjunciones y cortes vía decomposición submodular",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)

    # ============================================
    # REGISTRAR COMANDOS
    # ============================================

    # Releases privados
    release.registrar(subparsers)

    # Decomposición
    decompose.registrar(subparsers)

    # Multiplicative weights
    mw.registrar(subparsers)

    # Censo de errores
    census.registrar(subparsers)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = construir_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse sale con 2 ante flags inválidas y con 0 en --help
        return int(e.code) if isinstance(e.code, int) else 2

    try:
        return args.handler(args)
    except ReleaseError as e:
        log("ERROR", e.detail)
        return e.exit_code
    except Exception as e:
        log("ERROR", f"Error inesperado: {e}")
        log("ERROR", f"Traceback: {traceback.format_exc()}")
        return 1


# ============================================
# MAIN
# ============================================

if __name__ == "__main__":
    sys.exit(main())
