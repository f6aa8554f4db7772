import math

import numpy as np
import pytest

from core.approximator import (
    ProductDistribution, ReleaseStructure, concentration_bound, concentration_check,
    declared_query_bound, error_census, estimate_mean, evaluate, gamma_for, learn, learn_general,
    sample_count,
)
from core.decomposition import decompose_tolerant, route
from core.privacy import PrivacyBudget, private_sq_oracle
from core.queries import Graph, cut_function, cut_oracle
from core.submodular import Universe, ValueOracle, popcount
from errors import ArgumentError
from models.schemas import ReleaseDocument


def test_sample_count_example():
    assert sample_count(0.05, 0.99) == 1060


def test_gamma_for():
    assert gamma_for(0.5, 0.5) == pytest.approx(0.25 / (6 * math.log(4)))


def test_declared_query_bound_caps_at_cube():
    assert declared_query_bound(4, 1000, 1000) == 16
    assert declared_query_bound(20, 3, 10) == 3 * 21 + 30


def test_product_distribution_restrict():
    dist = ProductDistribution.uniform(4, 0.3).restrict(0b0001, 0b0100)
    assert dist.free_mask == 0b1010
    assert list(dist.effective_rates()) == [1.0, 0.3, 0.0, 0.3]
    with pytest.raises(ArgumentError):
        dist.restrict(0b0100, 0)


def test_sample_masks_respect_cell(rng):
    dist = ProductDistribution.uniform(6, 0.5).restrict(0b000011, 0b110000)
    masks = dist.sample_masks(rng, 500)
    assert np.all(masks & 0b11 == 0b11)
    assert np.all(masks & 0b110000 == 0)


def test_census_weights_sum_to_one():
    dist = ProductDistribution((0.1, 0.5, 0.9))
    pesos = dist.census_weights(np.arange(8))
    assert pesos.sum() == pytest.approx(1.0)
    assert pesos[0b101] == pytest.approx(0.1 * 0.5 * 0.9)


def test_estimate_mean_constant(rng):
    g = ValueOracle.exact(lambda bits: 0.5, Universe(20))
    media, _ = estimate_mean(g, ProductDistribution.uniform(20), 0.05, 0.99, rng)
    assert media == pytest.approx(0.5)


def test_estimate_mean_enumerates_small_cells(modular):
    media, puntos = estimate_mean(modular(4), ProductDistribution.uniform(4), 0.05, 0.99,
                                  np.random.default_rng(0))
    assert puntos == 16
    assert media == pytest.approx(0.5, abs=1e-12)


def test_estimate_mean_sampled_within_accuracy(modular):
    media, puntos = estimate_mean(modular(12), ProductDistribution.uniform(12), 0.05, 0.99,
                                  np.random.default_rng(3))
    assert puntos == 1060
    assert abs(media - 0.5) <= 0.05


def test_learn_modular_is_exact(modular):
    d = 8
    f = modular(d)
    h = learn(f, 0.5, 0.5, ProductDistribution.uniform(d), seed=1)
    assert len(h.means) == 1 << d
    for S in range(1 << d):
        assert evaluate(h, S) == pytest.approx(popcount(S) / d, abs=1e-12)


def test_learn_constant_function():
    f = ValueOracle.exact(lambda bits: 0.3, Universe(10))
    h = learn(f, 0.5, 0.5, ProductDistribution.uniform(10), seed=2)
    assert list(h.means) == [0]
    assert h.evaluate(0b1010101010) == pytest.approx(0.3)


def test_learn_answer_is_bucket_mean(cobertura_aleatoria):
    d = 10
    h = learn(cobertura_aleatoria(6, d, ground=40, max_size=3), 0.5, 0.5,
              ProductDistribution.uniform(d), seed=4)
    for S in range(1 << d):
        assert h.evaluate(S) == h.means[route(h.decomposition, S)]


def test_learn_query_budget(cobertura_aleatoria):
    d = 10
    f = cobertura_aleatoria(8, d, ground=40, max_size=3)
    h = learn(f, 0.5, 0.5, ProductDistribution.uniform(d), seed=4)
    assert f.query_count <= h.decomposition.stats.query_count + len(h.means) * h.params.samples_per_bucket


def test_learn_is_reproducible_and_schedule_independent(cobertura_aleatoria):
    d = 10
    dist = ProductDistribution.uniform(d)
    uno = learn(cobertura_aleatoria(9, d, ground=40, max_size=3), 0.5, 0.5, dist, seed=7)
    dos = learn(cobertura_aleatoria(9, d, ground=40, max_size=3), 0.5, 0.5, dist, seed=7, workers=4)
    assert uno.to_document().model_dump_json() == dos.to_document().model_dump_json()


def test_learn_rejects_noisy_oracle(cobertura_aleatoria):
    base = cobertura_aleatoria(0, 6)
    ruidoso = ValueOracle.tolerant(base.fn, base.universe, 0.01, seed=0)
    with pytest.raises(ArgumentError):
        learn(ruidoso, 0.5, 0.5, ProductDistribution.uniform(6), seed=0)


def test_learn_rejects_dimension_mismatch(modular):
    with pytest.raises(ArgumentError):
        learn(modular(4), 0.5, 0.5, ProductDistribution.uniform(5), seed=0)


def test_release_document_preserves_answers(cobertura_aleatoria):
    d = 8
    h = learn(cobertura_aleatoria(12, d), 0.5, 0.5, ProductDistribution.uniform(d), seed=3)
    copia = ReleaseStructure.from_document(
        ReleaseDocument.model_validate_json(h.to_document().model_dump_json())
    )
    assert all(copia.evaluate(S) == h.evaluate(S) for S in range(1 << d))


def test_learn_general_four_cycle_census():
    ciclo = Graph(4, ((0, 1), (1, 2), (2, 3), (3, 0)))
    f = cut_oracle(ciclo)
    dist = ProductDistribution.uniform(4)
    h = learn_general(f, 0.3, 0.2, dist, seed=5)
    reporte = error_census(h, f, dist)
    assert reporte.passes
    assert reporte.mass_total == pytest.approx(1.0)


def test_learn_general_zero_function():
    f = ValueOracle.exact(lambda bits: 0.0, Universe(6))
    h = learn_general(f, 0.5, 0.5, ProductDistribution.uniform(6), seed=0)
    assert set(h.means.values()) == {0.0}


def test_learn_and_learn_general_agree_on_modular(modular):
    d = 6
    f = modular(d)
    dist = ProductDistribution.uniform(d)
    h = learn(f, 0.5, 0.5, dist, seed=1)
    g = learn_general(f, 0.5, 0.5, dist, seed=1)
    for S in range(1 << d):
        assert h.evaluate(S) == pytest.approx(g.evaluate(S), abs=1e-12)


def test_learn_general_on_random_cut(grafo_aleatorio):
    G = grafo_aleatorio(3, 6, 0.5)
    f = cut_oracle(G)
    dist = ProductDistribution.uniform(6)
    h = learn_general(f, 0.3, 0.2, dist, seed=5)
    reporte = error_census(h, f, dist)
    assert reporte.passes
    assert reporte.prob_error_above_alpha <= 0.2


@pytest.mark.parametrize("seed", range(30))
def test_learn_general_noisy_oracle_answers_every_mask(grafo_aleatorio, seed):
    G = grafo_aleatorio(seed, 6, 0.5)
    alpha, beta = 0.3, 0.2
    budget = PrivacyBudget(1.0, 64, 2000)
    f = private_sq_oracle(cut_function(G), G.universe, budget, seed=seed,
                          tolerance=gamma_for(alpha, beta) / 12)
    h = learn_general(f, alpha, beta, ProductDistribution.uniform(6), seed=seed)
    assert set(h.means) == set(h.decomposition.route_targets())
    for S in range(1 << 6):
        assert 0.0 <= h.evaluate(S) <= 1.0


def test_census_of_exact_release_has_no_error():
    f = ValueOracle.exact(lambda bits: 0.7, Universe(5))
    dist = ProductDistribution.uniform(5)
    h = learn(f, 0.5, 0.5, dist, seed=0)
    reporte = error_census(h, f, dist)
    assert reporte.max_error == pytest.approx(0.0, abs=1e-12)
    assert reporte.prob_error_above_alpha == 0.0
    assert sum(reporte.histogram) == pytest.approx(1.0)
    assert len(reporte.bin_edges) == len(reporte.histogram) + 1


def test_sampled_census(modular):
    d = 8
    f = modular(d)
    dist = ProductDistribution.uniform(d)
    h = learn(f, 0.5, 0.5, dist, seed=0)
    reporte = error_census(h, f, dist, mode="sampled", samples=2000, seed=3)
    assert reporte.samples == 2000
    assert reporte.mass_total == pytest.approx(1.0)
    assert reporte.passes
    with pytest.raises(ArgumentError):
        error_census(h, f, dist, mode="sampled", seed=3)
    with pytest.raises(ArgumentError):
        error_census(h, f, dist, mode="otro")


def test_concentration_bound_is_probability():
    assert concentration_bound(0.5, 0.0) == 1.0
    assert 0 < concentration_bound(0.1, 6) < 1
    assert concentration_bound(0.1, 6) < concentration_bound(0.1, 4)


def test_concentration_check_passes(cobertura_aleatoria):
    d = 10
    f = cobertura_aleatoria(2, d)
    dec = decompose_tolerant(f, 0.1)
    filas = concentration_check(f, dec, ProductDistribution.uniform(d), samples=20_000, seed=1)
    assert len(filas) == 3 * len(dec)
    assert all(fila.passes for fila in filas)
