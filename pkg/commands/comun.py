"""
Helpers compartidos por los comandos: flags comunes, RunConfig y reportes
"""
import argparse
import sys
from typing import Optional

from pydantic import ValidationError

import config
from core.approximator import ProductDistribution, error_census
from core.queries import WidthSampler
from dependencies import exigir_modo_prueba
from errors import ArgumentError
from models.schemas import HarnessModeBlock, RunConfig, RunReport
from utils.archivos import escribir_json


def flags_release(parser: argparse.ArgumentParser) -> None:
    """Flags de todo comando que aprende un release."""
    parser.add_argument("--input", required=True, help="Archivo de datos (CSV 0/1 o lista de aristas)")
    parser.add_argument("--output", help="Reporte JSON (por defecto stdout)")
    parser.add_argument("--alpha", type=float, required=True, help="Error objetivo α")
    parser.add_argument("--beta", type=float, required=True, help="Masa de consultas fuera de α")
    parser.add_argument("--epsilon", type=float, help="Privacidad ε")
    parser.add_argument("--seed", type=int, help="Semilla (obligatoria)")
    parser.add_argument("--rate", type=float, help="Tasa de inclusión de la distribución producto")
    parser.add_argument("--workers", type=int, default=config.DEFAULT_WORKERS)
    parser.add_argument("--census", action="store_true", help="Agregar un censo de errores al reporte")
    flags_prueba(parser)


def flags_prueba(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--exact-oracle", action="store_true",
                        help="Oráculo exacto sin privacidad (solo SUBMOD_TEST_MODE=1)")
    parser.add_argument("--noise-off", action="store_true",
                        help="Presupuesto con escala 0 (solo SUBMOD_TEST_MODE=1)")


def run_config(args: argparse.Namespace) -> RunConfig:
    """Valida los flags antes de tocar cualquier dato."""
    valores = {k: v for k, v in vars(args).items() if k in RunConfig.model_fields and v is not None}
    try:
        cfg = RunConfig(**valores)
    except ValidationError as e:
        primero = e.errors()[0]
        campo = ".".join(str(p) for p in primero["loc"])
        raise ArgumentError(f"--{campo.replace('_', '-')}: {primero['msg']}") from None
    if cfg.exact_oracle:
        exigir_modo_prueba("--exact-oracle")
    if cfg.noise_off:
        exigir_modo_prueba("--noise-off")
    return cfg


def exigir_semilla(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ArgumentError("--seed es obligatoria en toda ejecución aleatoria")
    return cfg.seed


def exigir_privacidad(cfg: RunConfig) -> None:
    if cfg.epsilon is None and not (cfg.exact_oracle or cfg.noise_off):
        raise ArgumentError("Se requiere --epsilon (o --exact-oracle / --noise-off en modo de prueba)")


def distribucion(cfg: RunConfig, d: int) -> ProductDistribution:
    """Distribución de aprendizaje: tasa w/d si hay --width, si no --rate."""
    if cfg.width is not None:
        return WidthSampler(cfg.width, d).product_distribution()
    return ProductDistribution.uniform(d, cfg.rate if cfg.rate is not None else config.DEFAULT_INCLUSION_RATE)


def reporte_base(cfg: RunConfig, dataset_hash: Optional[str]) -> RunReport:
    return RunReport(
        version=config.VERSION,
        format_version=config.FORMAT_VERSION,
        config=cfg.model_copy(update={"output": None}),
        seed=cfg.seed,
        dataset_hash=dataset_hash,
        test_mode=HarnessModeBlock(
            enabled=config.TEST_MODE, exact_oracle=cfg.exact_oracle, noise_off=cfg.noise_off,
        ),
    )


def escribir_reporte(reporte: RunReport, output: Optional[str]) -> None:
    if output:
        escribir_json(reporte, output)
    else:
        sys.stdout.write(reporte.model_dump_json(indent=2) + "\n")


def censo(h, verdad, cfg: RunConfig, d: int):
    """
    Censo del release contra la verdad: exhaustivo si d lo permite, si no
    muestreado. Con --width se evalúa bajo el ancho w con umbral 2β.
    """
    if cfg.width is not None:
        dist = WidthSampler(cfg.width, d)
        beta = 2 * h.params.beta
    else:
        dist = ProductDistribution(tuple(h.params.rates))
        beta = h.params.beta
    if d <= config.MAX_EXHAUSTIVE_DIMENSION and cfg.mode != "sampled":
        return error_census(h, verdad, dist, "exhaustive", beta=beta)
    return error_census(h, verdad, dist, "sampled", samples=cfg.samples or 10_000,
                        seed=exigir_semilla(cfg), beta=beta)
