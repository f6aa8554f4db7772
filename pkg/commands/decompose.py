"""
Comando decompose - Decomposición de F_Disj o de la función de corte
"""
import argparse

import config
from commands.comun import (
    escribir_reporte, exigir_privacidad, exigir_semilla, flags_prueba, reporte_base, run_config,
)
from core.decomposition import (
    MODE_TOLERANT, bucket_capacity, decompose_general, decompose_monotone,
    decompose_tolerant, max_depth,
)
from core.privacy import PrivacyBudget, check_database_size, private_sq_oracle
from core.queries import cut_function, disjunction_function, load_dataset, load_graph
from core.submodular import ValueOracle
from errors import ArgumentError
from utils.registro import log

MODOS = ("exact", "tolerant", "general")


def registrar(subparsers) -> None:
    parser = subparsers.add_parser("decompose", help="Decomposición en piezas Lipschitz")
    parser.add_argument("--input", required=True)
    parser.add_argument("--output")
    parser.add_argument("--family", choices=("disjunctions", "cuts"), default="disjunctions")
    parser.add_argument("--gamma", type=float, required=True)
    parser.add_argument("--mode", choices=MODOS, default="exact")
    parser.add_argument("--epsilon", type=float, help="Consultas privadas con tolerancia γ/12")
    parser.add_argument("--seed", type=int)
    flags_prueba(parser)
    parser.set_defaults(handler=ejecutar)


def ejecutar(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    if cfg.mode == "exact" and not cfg.exact_oracle:
        raise ArgumentError("--mode exact requiere --exact-oracle (modo de prueba)")
    exigir_privacidad(cfg)

    if cfg.family == "cuts":
        G = load_graph(cfg.input)
        fn, universo, n, huella = cut_function(G), G.universe, G.vertex_count ** 2, G.sha256
    else:
        D = load_dataset(cfg.input)
        fn, universo, n, huella = disjunction_function(D), D.universe, D.n, D.sha256

    d = universo.size
    if cfg.exact_oracle:
        oraculo = ValueOracle.exact(fn, universo, name=cfg.family)
    else:
        tau = 0.0 if cfg.noise_off else cfg.gamma / 12
        cap = bucket_capacity(d, max_depth(cfg.gamma, MODE_TOLERANT))
        if cfg.mode == "general":
            cap = cap * cap
        k = min(1 << d, cap * (d + 1))
        if cfg.noise_off:
            budget = PrivacyBudget.noiseless(k, n)
        else:
            check_database_size(n, k, tau, config.DEFAULT_FAILURE_PROBABILITY, cfg.epsilon)
            budget = PrivacyBudget(cfg.epsilon, k, n)
        oraculo = private_sq_oracle(fn, universo, budget, exigir_semilla(cfg), tau, cfg.family)

    if cfg.mode == "exact":
        dec = decompose_monotone(oraculo, cfg.gamma)
    elif cfg.mode == "tolerant":
        dec = decompose_tolerant(oraculo, cfg.gamma)
    else:
        dec = decompose_general(oraculo, cfg.gamma)

    reporte = reporte_base(cfg, huella)
    reporte.decomposition = dec.to_document()
    escribir_reporte(reporte, cfg.output)
    log("OK", f"Decomposición {cfg.mode}: {len(dec)} buckets, {dec.stats.query_count} consultas")
    return 0
