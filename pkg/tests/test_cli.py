import json

import numpy as np
import pytest

import config
from main import main


@pytest.fixture
def datos_12(escribir_csv):
    gen = np.random.default_rng(5)
    return escribir_csv("d12.csv", (gen.random((200, 12)) < 0.5).astype(int))


@pytest.fixture
def datos_8(escribir_csv):
    gen = np.random.default_rng(8)
    return escribir_csv("d8.csv", (gen.random((40, 8)) < 0.5).astype(int))


@pytest.fixture
def identidad(escribir_csv):
    return escribir_csv("identidad.csv", np.eye(4, dtype=int))


@pytest.fixture
def grafo(tmp_path):
    ruta = tmp_path / "grafo.txt"
    ruta.write_text("6\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n0 3\n")
    return str(ruta)


def _leer(ruta) -> dict:
    with open(ruta, encoding="utf-8") as f:
        return json.load(f)


def _release(entrada, salida, *extra):
    return main([
        "release-conjunctions", "--input", entrada, "--output", str(salida),
        "--alpha", "0.25", "--beta", "0.1", "--seed", "1", *extra,
    ])


def test_version(capsys):
    assert main(["--version"]) == 0
    assert config.VERSION in capsys.readouterr().out


def test_unknown_command_is_usage_error():
    assert main(["no-existe"]) == 2


def test_missing_input_file(modo_prueba, tmp_path, capsys):
    faltante = str(tmp_path / "faltante.csv")
    assert _release(faltante, tmp_path / "r.json", "--exact-oracle") == 2
    assert faltante in capsys.readouterr().err


def test_exact_oracle_outside_test_mode(fuera_de_prueba, datos_8, tmp_path, capsys):
    assert _release(datos_8, tmp_path / "r.json", "--exact-oracle") == 2
    assert "SUBMOD_TEST_MODE" in capsys.readouterr().err


def test_noise_off_outside_test_mode(fuera_de_prueba, datos_8, tmp_path):
    assert _release(datos_8, tmp_path / "r.json", "--noise-off") == 2


def test_invalid_alpha(datos_8, tmp_path, capsys):
    codigo = main(["release-disjunctions", "--input", datos_8, "--alpha", "1.5", "--beta", "0.1",
                   "--epsilon", "1", "--seed", "1"])
    assert codigo == 2
    assert "--alpha" in capsys.readouterr().err


def test_missing_seed(modo_prueba, datos_8):
    assert main(["release-disjunctions", "--input", datos_8, "--alpha", "0.5", "--beta", "0.5",
                 "--exact-oracle"]) == 2


def test_missing_privacy_parameter(datos_8):
    assert main(["release-disjunctions", "--input", datos_8, "--alpha", "0.5", "--beta", "0.5",
                 "--seed", "1"]) == 2


def test_small_database_precondition(datos_8, tmp_path, capsys):
    codigo = main(["release-disjunctions", "--input", datos_8, "--output", str(tmp_path / "r.json"),
                   "--alpha", "0.5", "--beta", "0.5", "--epsilon", "1", "--seed", "1"])
    assert codigo == 2
    assert "n >=" in capsys.readouterr().err


def test_conjunction_release_with_census(modo_prueba, datos_12, tmp_path):
    salida = tmp_path / "r.json"
    assert _release(datos_12, salida, "--exact-oracle", "--census") == 0
    reporte = _leer(salida)
    assert reporte["release"]["family"] == "conjunctions"
    assert reporte["release"]["answer_transform"] == "complement"
    assert reporte["test_mode"] == {"enabled": True, "exact_oracle": True, "noise_off": False}
    assert reporte["census"]["prob_error_above_alpha"] <= 0.1
    assert reporte["census"]["passes"]


def test_release_is_reproducible(modo_prueba, datos_8, tmp_path):
    uno, dos = tmp_path / "uno.json", tmp_path / "dos.json"
    assert _release(datos_8, uno, "--noise-off") == 0
    assert _release(datos_8, dos, "--noise-off", "--workers", "3") == 0
    primero, segundo = _leer(uno), _leer(dos)
    assert primero["release"] == segundo["release"]

    tres = tmp_path / "tres.json"
    assert _release(datos_8, tres, "--noise-off") == 0
    assert uno.read_bytes() == tres.read_bytes()


def test_width_release(modo_prueba, datos_8, tmp_path):
    salida = tmp_path / "w.json"
    assert _release(datos_8, salida, "--exact-oracle", "--width", "3", "--census") == 0
    reporte = _leer(salida)
    assert reporte["release"]["params"]["width"] == 3
    assert reporte["census"]["distribution"] == "width(w=3)"
    assert reporte["census"]["beta"] == pytest.approx(0.2)
    assert reporte["census"]["passes"]


def test_width_larger_than_dimension(modo_prueba, datos_8, tmp_path):
    assert _release(datos_8, tmp_path / "w.json", "--exact-oracle", "--width", "9") == 2


def test_census_command(modo_prueba, datos_8, tmp_path):
    release = tmp_path / "r.json"
    assert _release(datos_8, release, "--exact-oracle") == 0
    salida = tmp_path / "c.json"
    assert main(["census", "--release", str(release), "--input", datos_8, "--output", str(salida)]) == 0
    censo = _leer(salida)["census"]
    assert censo["mass_total"] == pytest.approx(1.0)
    assert censo["mode"] == "exhaustive"
    assert sum(censo["histogram"]) == pytest.approx(1.0)


def test_census_rejects_non_release(tmp_path, datos_8):
    basura = tmp_path / "basura.json"
    basura.write_text("{}")
    assert main(["census", "--release", str(basura), "--input", datos_8]) == 2


def test_decompose_modular_single_bucket(modo_prueba, identidad, tmp_path):
    salida = tmp_path / "dec.json"
    assert main(["decompose", "--input", identidad, "--output", str(salida), "--gamma", "0.5",
                 "--mode", "exact", "--exact-oracle"]) == 0
    dec = _leer(salida)["decomposition"]
    assert dec["kind"] == "monotone"
    assert len(dec["nodes"]) == 1
    assert dec["nodes"][0]["B"] == "0"


def test_decompose_exact_mode_needs_exact_oracle(modo_prueba, identidad):
    assert main(["decompose", "--input", identidad, "--gamma", "0.5", "--mode", "exact",
                 "--noise-off", "--seed", "1"]) == 2


def test_decompose_tolerant_noise_off(modo_prueba, datos_8, tmp_path):
    salida = tmp_path / "dec.json"
    assert main(["decompose", "--input", datos_8, "--output", str(salida), "--gamma", "0.3",
                 "--mode", "tolerant", "--noise-off", "--seed", "2"]) == 0
    dec = _leer(salida)["decomposition"]
    assert dec["mode"] == "tolerant"
    assert dec["expand_threshold"] == pytest.approx(0.1)


def test_decompose_general_cuts(modo_prueba, grafo, tmp_path):
    salida = tmp_path / "dec.json"
    assert main(["decompose", "--input", grafo, "--output", str(salida), "--family", "cuts",
                 "--gamma", "0.2", "--mode", "general", "--exact-oracle"]) == 0
    dec = _leer(salida)["decomposition"]
    assert dec["kind"] == "general"
    assert dec["stats"]["node_count"] >= 1


def test_cut_release(modo_prueba, grafo, tmp_path):
    salida = tmp_path / "cortes.json"
    assert main(["release-cuts", "--input", grafo, "--output", str(salida), "--alpha", "0.3",
                 "--beta", "0.2", "--seed", "4", "--noise-off", "--census"]) == 0
    reporte = _leer(salida)
    assert reporte["release"]["family"] == "cuts"
    assert reporte["release"]["budget"]["used"] <= reporte["release"]["budget"]["k"]
    assert reporte["census"]["passes"]


def test_mw_release_command(datos_8, tmp_path):
    salida = tmp_path / "mw.json"
    assert main(["mw-release", "--input", datos_8, "--output", str(salida), "--alpha", "0.2",
                 "--seed", "3"]) == 0
    mw = _leer(salida)["mw"]
    assert mw["terminated"]
    assert mw["rounds"] <= mw["round_cap"]
    assert mw["sup_error"] <= 0.2
    assert mw["tau"] == pytest.approx(0.01)
    cuarto = (2 * mw["eta"]) ** 2 / 4
    assert mw["rounds_below_quarter_beta_sq"] == sum(
        1 for r in mw["trace"] if r["updated"] and r["drop"] < cuarto
    )


def test_mw_release_rejects_large_tolerance(datos_8):
    assert main(["mw-release", "--input", datos_8, "--alpha", "0.2", "--tolerance", "0.5",
                 "--seed", "3"]) == 2


def test_report_to_stdout(modo_prueba, identidad, capsys):
    assert main(["decompose", "--input", identidad, "--gamma", "0.5", "--exact-oracle"]) == 0
    reporte = json.loads(capsys.readouterr().out)
    assert reporte["config"]["command"] == "decompose"
    assert reporte["config"]["output"] is None
