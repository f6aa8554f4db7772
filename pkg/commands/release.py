"""
Comandos de release privado - Disyunciones, conjunciones y cortes
"""
import argparse

from commands.comun import (
    censo, distribucion, escribir_reporte, exigir_privacidad, exigir_semilla, flags_release,
    reporte_base, run_config,
)
from core.queries import (
    conjunction_oracle, cut_oracle, fdisj_oracle, load_dataset, load_graph,
    release_conjunctions, release_cuts, release_disjunctions,
)
from errors import ArgumentError
from utils.registro import log


def registrar(subparsers) -> None:
    for nombre, ayuda, handler in (
        ("release-disjunctions", "Release ε-DP de disyunciones monótonas", ejecutar_disyunciones),
        ("release-conjunctions", "Release ε-DP de conjunciones monótonas", ejecutar_conjunciones),
    ):
        parser = subparsers.add_parser(nombre, help=ayuda)
        flags_release(parser)
        parser.add_argument("--width", type=int, help="Aprender con tasa w/d y censar bajo ancho w")
        parser.set_defaults(handler=handler)

    parser = subparsers.add_parser("release-cuts", help="Release ε-DP de la función de corte")
    flags_release(parser)
    parser.set_defaults(handler=ejecutar_cortes)


def _release_dataset(args: argparse.Namespace, conjunciones: bool) -> int:
    cfg = run_config(args)
    seed = exigir_semilla(cfg)
    exigir_privacidad(cfg)
    D = load_dataset(cfg.input)
    if cfg.width is not None and cfg.width > D.d:
        raise ArgumentError(f"--width {cfg.width} supera la dimensión d={D.d}")

    liberar = release_conjunctions if conjunciones else release_disjunctions
    h = liberar(D, cfg.alpha, cfg.beta, cfg.epsilon, distribucion(cfg, D.d), seed,
                noise_off=cfg.noise_off, exact_oracle=cfg.exact_oracle,
                workers=cfg.workers, width=cfg.width)

    reporte = reporte_base(cfg, D.sha256)
    reporte.release = h.to_document()
    if cfg.census:
        verdad = conjunction_oracle(D) if conjunciones else fdisj_oracle(D)
        reporte.census = censo(h, verdad, cfg, D.d)
    escribir_reporte(reporte, cfg.output)
    log("OK", f"Release de {h.family}: {len(h.means)} buckets (n={D.n}, d={D.d})")
    return 0


def ejecutar_disyunciones(args: argparse.Namespace) -> int:
    return _release_dataset(args, conjunciones=False)


def ejecutar_conjunciones(args: argparse.Namespace) -> int:
    return _release_dataset(args, conjunciones=True)


def ejecutar_cortes(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    seed = exigir_semilla(cfg)
    exigir_privacidad(cfg)
    G = load_graph(cfg.input)
    h = release_cuts(G, cfg.alpha, cfg.beta, cfg.epsilon, distribucion(cfg, G.vertex_count), seed,
                     noise_off=cfg.noise_off, exact_oracle=cfg.exact_oracle, workers=cfg.workers)

    reporte = reporte_base(cfg, G.sha256)
    reporte.release = h.to_document()
    if cfg.census:
        reporte.census = censo(h, cut_oracle(G), cfg, G.vertex_count)
    escribir_reporte(reporte, cfg.output)
    log("OK", f"Release de cortes: {len(h.means)} pares (|V|={G.vertex_count}, |E|={len(G.edges)})")
    return 0
