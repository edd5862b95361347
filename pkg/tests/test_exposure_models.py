import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interference_lab.designs import all_interventions
from interference_lab.errors import DataError, UsageError
from interference_lab.exposure import (
    ArbitraryNeighborhood,
    NoEffect,
    OwnTreatment,
    Stratified,
    Tabulated,
    make_spec,
    spec_from_json,
)
from interference_lab.models import (
    ExposureOutcomeModel,
    LimModel,
    dump_model,
    fraction_treated,
    load_model,
    sutva_lim,
)
from interference_lab.network import Network, cycle, gen_k_regular, path


def test_exposure_sizes(path5):
    deg = path5.degrees
    assert NoEffect(5).sizes().tolist() == [1] * 5
    assert OwnTreatment(5).sizes().tolist() == [2] * 5
    assert Stratified(path5).sizes().tolist() == (2 * (deg + 1)).tolist()
    assert ArbitraryNeighborhood(path5).sizes().tolist() == (2 ** (deg + 1)).tolist()


def test_simple_exposure_values():
    z = np.array([[1, 0, 1]])
    assert NoEffect(3).exposures(z)[0].tolist() == [0, 0, 0]
    assert OwnTreatment(3).exposures(z)[0].tolist() == [1, 0, 1]


def test_stratified_ignores_neighbor_identity():
    net = path(3)  # unit 1 has neighbors {0, 2}
    s = Stratified(net)
    assert s.exposure_of(1, [1, 1, 0]) == s.exposure_of(1, [0, 1, 1])
    assert s.exposure_of(1, [1, 1, 0]) != s.exposure_of(1, [1, 0, 0])


def test_arbitrary_separates_neighbor_identity():
    a = ArbitraryNeighborhood(path(3))
    assert a.exposure_of(1, [1, 1, 0]) != a.exposure_of(1, [0, 1, 1])


@pytest.mark.parametrize("cls", [Stratified, ArbitraryNeighborhood])
def test_ids_cover_range(cls, graph10):
    spec = cls(graph10)
    E = spec.exposures(all_interventions(10))
    for i in range(10):
        assert np.array_equal(np.unique(E[:, i]), np.arange(spec.size(i)))


def test_local_exposures_match_global(graph10):
    Z = all_interventions(10)
    for spec in (OwnTreatment(10), Stratified(graph10), ArbitraryNeighborhood(graph10)):
        E = spec.exposures(Z)
        for i in range(10):
            cols = spec.support(i)
            assert np.array_equal(spec.local_exposures(i, cols, Z[:, cols]), E[:, i])


def test_tabulated_roundtrip(path5):
    spec = Stratified(path5)
    tab = Tabulated.from_spec(spec)
    Z = all_interventions(5)
    assert np.array_equal(tab.exposures(Z), spec.exposures(Z))
    assert spec_from_json(json.loads(json.dumps(tab.to_json()))) == tab


def test_tabulated_needs_dense_ids():
    with pytest.raises(DataError):
        Tabulated(np.array([[0, 2]]))
    with pytest.raises(DataError):
        Tabulated(np.zeros((2, 3), dtype=int))


def test_make_spec_names(path5):
    assert make_spec("sutva", n=5) == OwnTreatment(5)
    assert make_spec("no-effect", network=path5) == NoEffect(5)
    assert make_spec("arbitrary", network=path5) == ArbitraryNeighborhood(path5)
    with pytest.raises(UsageError):
        make_spec("stratified", n=5)
    with pytest.raises(UsageError):
        make_spec("bogus", n=5)


def test_fraction_treated(cycle6):
    z = np.array([1, 0, 0, 0, 0, 0])
    assert fraction_treated(cycle6, z).tolist() == [0, 0.5, 0, 0, 0, 0.5]
    with pytest.raises(UsageError):
        fraction_treated(Network.from_edges(3, [(0, 1)]), np.zeros(3))


def test_lim_corner_cases(cycle6):
    m = LimModel(cycle6, (0, 0, 1))
    assert np.all(m.evaluate(np.ones(6)) == 1)
    assert np.all(m.evaluate(np.zeros(6)) == 0)


def test_sutva_table_model():
    m = ExposureOutcomeModel(OwnTreatment(4), [[-1, 1]] * 4)
    Z = all_interventions(4)
    assert np.array_equal(m.evaluate(Z), 2.0 * Z - 1)


def test_lim_bound_check(cycle6):
    LimModel(cycle6, (-1, 0, 2))
    with pytest.raises(DataError):
        LimModel(cycle6, (0, 0, 2))
    with pytest.raises(DataError):
        LimModel(cycle6, (0.5, 0.6, 0))
    with pytest.raises(DataError):
        LimModel(Network.from_edges(3, [(0, 1)]), (0, 0, 0))


def test_exposure_model_bound(path5):
    with pytest.raises(DataError):
        ExposureOutcomeModel(OwnTreatment(2), [[0, 1.5], [0, 0]])
    with pytest.raises(DataError):
        ExposureOutcomeModel(OwnTreatment(2), [[0, 1]])


def test_model_json_roundtrip(graph10):
    rng = np.random.default_rng(0)
    spec = Stratified(graph10)
    m = ExposureOutcomeModel(spec, [rng.uniform(-1, 1, s) for s in spec.sizes()])
    back = load_model(dump_model(m), network=graph10)
    Z = all_interventions(10)[::17]
    assert np.array_equal(back.evaluate(Z), m.evaluate(Z))
    lim = LimModel(graph10, (0.1, -0.2, 0.5))
    assert np.array_equal(load_model(dump_model(lim), network=graph10).beta, lim.beta)
    with pytest.raises(DataError):
        load_model("{oops", network=graph10)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(-1, 1), st.floats(-1, 1), st.integers(0, 2**20)
)
def test_sutva_lim_is_bounded_and_has_no_spillover(a0, a1, seed):
    net = gen_k_regular(8, 3, seed=seed % 97)
    m = sutva_lim(net, a0, a1)
    Z = all_interventions(8)
    Y = m.evaluate(Z)
    assert np.all(np.abs(Y) <= 1 + 1e-12)
    assert np.allclose(Y, np.where(Z == 1, a1, a0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_lim_bounded_models_respect_outcome_bound(beta):
    net = cycle(5)
    try:
        m = LimModel(net, beta)
    except DataError:
        return
    Y = m.evaluate(all_interventions(5))
    assert np.abs(Y).max() <= 1 + 1e-12
    assert abs(m.beta[0, 2]) <= 2 + 1e-12
