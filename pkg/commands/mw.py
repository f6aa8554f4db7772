"""
Comando mw-release - Multiplicative weights con el weak learner exhaustivo
"""
import argparse

from pydantic import ValidationError

from commands.comun import escribir_reporte, reporte_base, run_config
from core.mw_release import (
    StatisticalQueryOracle, dataset_distribution, exhaustive_weak_learner, monotone_conjunctions,
    monotone_disjunctions, mw_release,
)
from core.queries import load_dataset
from errors import ArgumentError
from models.schemas import MWConfig


def registrar(subparsers) -> None:
    parser = subparsers.add_parser("mw-release", help="Release de conjunciones por multiplicative weights")
    parser.add_argument("--input", required=True, help="CSV 0/1 con d <= 22")
    parser.add_argument("--output")
    parser.add_argument("--alpha", type=float, required=True, help="Error sup objetivo")
    parser.add_argument("--beta", type=float, help="Ventaja del learner (por defecto 0.4·α)")
    parser.add_argument("--tolerance", type=float, help="Tolerancia SQ τ (por defecto β/8)")
    parser.add_argument("--family", choices=("conjunctions", "disjunctions"), default="conjunctions")
    parser.add_argument("--seed", type=int)
    parser.set_defaults(handler=ejecutar)


def ejecutar(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    # el learner exhaustivo cumple el contrato con β = α/2 − 2τ y τ = β/8
    beta = cfg.beta if cfg.beta is not None else 0.4 * cfg.alpha
    D = load_dataset(cfg.input)
    datos = dataset_distribution(D)
    try:
        mw_cfg = MWConfig(beta=beta, universe_size=datos.size, tau=cfg.tolerance)
    except ValidationError as e:
        raise ArgumentError(f"Parámetros de multiplicative weights inválidos: {e.errors()[0]['msg']}") from None
    if mw_cfg.tau > 0 and cfg.seed is None:
        raise ArgumentError("--seed es obligatoria cuando la tolerancia SQ es positiva")

    familia = monotone_conjunctions(D.d) if cfg.family != "disjunctions" else monotone_disjunctions(D.d)
    sq = StatisticalQueryOracle(datos, mw_cfg.tau, cfg.seed)
    resultado = mw_release(datos, familia, exhaustive_weak_learner(familia, mw_cfg.tau), mw_cfg, sq)

    reporte = reporte_base(cfg, D.sha256)
    reporte.mw = resultado.report
    escribir_reporte(reporte, cfg.output)
    return 0
