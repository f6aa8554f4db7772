"""
Comando census - Distribución de errores de un release guardado
"""
import argparse

from pydantic import ValidationError

from commands.comun import censo, escribir_reporte, reporte_base, run_config
from core.approximator import ReleaseStructure
from core.queries import conjunction_oracle, cut_oracle, fdisj_oracle, load_dataset, load_graph
from errors import ArgumentError, DataFormatError
from models.schemas import RunReport
from utils.archivos import leer_bytes
from utils.registro import log


def registrar(subparsers) -> None:
    parser = subparsers.add_parser("census", help="Censo de errores de un release contra la verdad")
    parser.add_argument("--release", required=True, help="Reporte JSON de un comando release-*")
    parser.add_argument("--input", required=True, help="Datos de referencia (los mismos del release)")
    parser.add_argument("--output")
    parser.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    parser.add_argument("--samples", type=int)
    parser.add_argument("--width", type=int, help="Evaluar bajo el ancho w (umbral 2β)")
    parser.add_argument("--seed", type=int)
    parser.set_defaults(handler=ejecutar)


def cargar_release(path: str) -> RunReport:
    try:
        reporte = RunReport.model_validate_json(leer_bytes(path))
    except ValidationError as e:
        raise DataFormatError(f"{path}: no es un reporte de release válido ({e.error_count()} errores)") from None
    if reporte.release is None:
        raise DataFormatError(f"{path}: el reporte no contiene un release")
    return reporte


def ejecutar(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    previo = cargar_release(cfg.release)
    h = ReleaseStructure.from_document(previo.release)

    if h.family == "cuts":
        G = load_graph(cfg.input)
        verdad, d, huella = cut_oracle(G), G.vertex_count, G.sha256
    else:
        D = load_dataset(cfg.input)
        verdad = conjunction_oracle(D) if h.family == "conjunctions" else fdisj_oracle(D)
        d, huella = D.d, D.sha256
    if d != h.decomposition.universe.size:
        raise ArgumentError(f"Los datos tienen dimensión {d} y el release {h.decomposition.universe.size}")
    if previo.dataset_hash and previo.dataset_hash != huella:
        log("WARNING", "El hash de los datos no coincide con el del release")

    reporte = reporte_base(cfg, huella)
    reporte.census = censo(h, verdad, cfg, d)
    escribir_reporte(reporte, cfg.output)
    return 0
