from concurrent.futures import ThreadPoolExecutor

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import config
from core.queries import Graph, cut_oracle
from core.submodular import (
    SubsetMask, Universe, ValueOracle, as_bits, check_lipschitz, check_monotone,
    check_submodular, complement_function, coverage_function, marginal, max_marginal,
    min_marginal, popcount, restrict_function, tabulate,
)
from errors import ArgumentError, CapacityError, DomainError


def test_marginal_coverage():
    # X_0 = {a}, X_1 = {a, b}
    f = coverage_function([{0}, {0, 1}], 2)
    assert marginal(f, 0, 1) == pytest.approx(1.0)
    assert marginal(f, 0b01, 1) == pytest.approx(0.5)


def test_marginal_of_member_is_zero(modular):
    f = modular(4)
    assert marginal(f, 0b0101, 2) == 0.0
    assert marginal(f, 0b0101, 1) == pytest.approx(0.25)


def test_subset_mask_operations():
    U = Universe(5)
    A = SubsetMask.from_indices(U, [0, 2])
    B = SubsetMask.from_indices(U, [2, 3])
    assert A.union(B).bits == 0b1101
    assert A.intersection(B).bits == 0b0100
    assert A.difference(B).bits == 0b0001
    assert len(A.complement()) == 3
    assert list(A) == [0, 2]
    assert 2 in A and 1 not in A
    assert A.intersection(B).issubset(A)
    assert as_bits(A, U) == 0b101


def test_universe_rejects_bad_ordering():
    with pytest.raises(ArgumentError):
        Universe(3, (0, 1, 1))
    with pytest.raises(ArgumentError):
        Universe(0)


def test_mask_outside_universe():
    U = Universe(3)
    with pytest.raises(ArgumentError):
        as_bits(0b1000, U)
    with pytest.raises(ArgumentError):
        as_bits(SubsetMask(0, Universe(4)), U)


def test_check_submodular_detects_supermodular():
    d = 4
    cuadrado = ValueOracle.exact(lambda bits: (popcount(bits) / d) ** 2, Universe(d))
    assert not check_submodular(cuadrado)
    assert check_monotone(cuadrado)


def test_modular_is_submodular_and_lipschitz(modular):
    f = modular(5)
    assert check_submodular(f)
    assert check_lipschitz(f, 1 / 5)
    assert not check_lipschitz(f, 1 / 10)


def test_star_cut_is_lipschitz():
    estrella = Graph(4, ((0, 1), (0, 2), (0, 3)))
    f = cut_oracle(estrella)
    assert check_submodular(f)
    assert not check_monotone(f)
    assert check_lipschitz(f, 0.2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sets(st.integers(0, 7), max_size=5), min_size=1, max_size=8))
def test_coverage_is_monotone_submodular(sistema):
    f = coverage_function(sistema, 8)
    assert check_monotone(f)
    assert check_submodular(f)


def test_complement_involution_and_marginals(cobertura_aleatoria):
    f = cobertura_aleatoria(3, 6)
    V = f.universe.full_mask
    g = complement_function(f, V)
    assert g.evaluate(0) == f.evaluate(V)
    doble = complement_function(g, V)
    for S in range(1 << 6):
        assert doble.evaluate(S) == f.evaluate(S)
    assert check_submodular(g)
    assert min_marginal(g) == pytest.approx(-max_marginal(f))


def test_restrict_function_adds_base(cobertura_aleatoria):
    f = cobertura_aleatoria(5, 6)
    g = restrict_function(f, 0b11)
    for S in range(1 << 6):
        assert g.evaluate(S) == f.evaluate(S | 0b11)
    assert check_submodular(g)


def test_oracle_memoises_and_counts(cobertura_aleatoria):
    f = cobertura_aleatoria(0, 5)
    primero = f.evaluate(0b101)
    assert f.evaluate(0b101) == primero
    assert f.query_count == 1
    assert f.call_count == 2


def test_tolerant_oracle_within_tolerance(cobertura_aleatoria):
    base = cobertura_aleatoria(1, 6)
    tau = 0.05
    f = ValueOracle.tolerant(base.fn, base.universe, tau, seed=9)
    for S in range(1 << 6):
        assert abs(f.evaluate(S) - base.evaluate(S)) <= tau + 1e-12
        assert f.true_value(S) == base.evaluate(S)
    otro = ValueOracle.tolerant(base.fn, base.universe, tau, seed=9)
    assert [otro.evaluate(S) for S in range(64)] == [f.evaluate(S) for S in range(64)]


def test_out_of_range_value_is_domain_error():
    f = ValueOracle.exact(lambda bits: 1.5, Universe(2))
    with pytest.raises(DomainError):
        f.evaluate(0)


def test_negative_tolerance_rejected():
    with pytest.raises(ArgumentError):
        ValueOracle(lambda bits: 0.0, Universe(2), tolerance=-0.1)


def test_concurrent_evaluation_counts_each_mask_once(cobertura_aleatoria):
    f = cobertura_aleatoria(2, 10)
    masks = list(range(1 << 10)) * 3
    with ThreadPoolExecutor(max_workers=8) as pool:
        valores = list(pool.map(f.evaluate, masks))
    assert f.query_count == 1 << 10
    assert f.call_count == len(masks)
    assert valores[:1024] == valores[1024:2048]


def test_tabulate_respects_domain(modular):
    f = modular(6)
    tabla = tabulate(f, domain=0b100101)
    assert tabla.elements == [0, 2, 5]
    assert tabla.values.size == 8
    assert tabla.values[-1] == pytest.approx(0.5)


def test_exhaustive_limit(monkeypatch, modular):
    monkeypatch.setattr(config, "MAX_EXHAUSTIVE_DIMENSION", 4)
    with pytest.raises(CapacityError):
        check_submodular(modular(5))
