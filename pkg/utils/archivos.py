"""
Utilidades de archivos: hash de procedencia, escritura JSON y máscaras en hex
"""
import hashlib
from pathlib import Path

from pydantic import BaseModel

from errors import DataFormatError


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def leer_bytes(path: str) -> bytes:
    """Lee un archivo de entrada; un path inexistente es error de uso."""
    ruta = Path(path)
    if not ruta.is_file():
        raise DataFormatError(f"No existe el archivo de entrada: {path}")
    return ruta.read_bytes()


def mask_to_hex(bits: int) -> str:
    return format(bits, "x")


def hex_to_mask(texto: str) -> int:
    try:
        return int(texto, 16)
    except ValueError as e:
        raise DataFormatError(f"Máscara hex inválida: {texto!r}") from e


def escribir_json(documento: BaseModel, path: str) -> None:
    """Escribe el documento con orden de campos fijo (salida byte-idéntica)."""
    Path(path).write_text(documento.model_dump_json(indent=2) + "\n", encoding="utf-8")
