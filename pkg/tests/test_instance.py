"""Instance validation, serialization, generators, and graph bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingbp import (
    ClassicalGraph,
    InstanceError,
    QuantumInstance,
    generate_chain,
    generate_rrg,
    load_instance,
    save_instance,
)


def test_minimal_instance():
    inst = QuantumInstance(n=2, edge_index=[[0, 1]], couplings=[1.5],
                           fields=[0.0, 0.3])
    assert inst.m == 1
    assert inst.edge_list() == [(0, 1, 1.5)]


def test_single_spin_no_edges():
    inst = QuantumInstance(n=1, edge_index=np.zeros((0, 2)), couplings=[],
                           fields=[0.7])
    assert inst.m == 0


@pytest.mark.parametrize("kwargs", [
    dict(n=0, edge_index=np.zeros((0, 2)), couplings=[], fields=[]),
    dict(n=2, edge_index=[[0, 1]], couplings=[1.0], fields=[0.0]),
    dict(n=2, edge_index=[[0, 1]], couplings=[1.0], fields=[-0.1, 0.0]),
    dict(n=2, edge_index=[[0, 0]], couplings=[1.0], fields=[0.0, 0.0]),
    dict(n=2, edge_index=[[0, 2]], couplings=[1.0], fields=[0.0, 0.0]),
    dict(n=2, edge_index=[[1, 0]], couplings=[1.0], fields=[0.0, 0.0]),
    dict(n=3, edge_index=[[0, 1], [0, 1]], couplings=[1.0, 2.0],
         fields=[0.0] * 3),
    dict(n=2, edge_index=[[0, 1]], couplings=[np.inf], fields=[0.0, 0.0]),
    dict(n=2, edge_index=[[0, 1]], couplings=[1.0, 2.0], fields=[0.0, 0.0]),
])
def test_invalid_instances(kwargs):
    with pytest.raises(InstanceError):
        QuantumInstance(**kwargs)


def test_with_uniform_field():
    inst = generate_chain(4, law="gaussian", h=0.5, seed=1)
    out = inst.with_uniform_field(2.0)
    assert np.all(out.fields == 2.0)
    assert np.array_equal(out.edge_index, inst.edge_index)
    with pytest.raises(InstanceError):
        inst.with_uniform_field(-1.0)


def test_save_load_round_trip():
    inst = generate_chain(6, law="gaussian", h=0.8, seed=3)
    back = load_instance(save_instance(inst))
    assert back == inst
    assert back.flipped_sites == ()


def test_load_normalizes_negative_fields():
    doc = '{"n": 3, "edges": [[0, 1, 1.0], [1, 2, -2.0]], "h": [-1.0, 0.5, -0.25]}'
    inst = load_instance(doc)
    assert np.allclose(inst.fields, [1.0, 0.5, 0.25])
    assert inst.flipped_sites == (0, 2)
    assert inst.seed == 0


def test_load_canonicalizes_edges():
    doc = '{"n": 3, "edges": [[2, 0, 1.0], [1, 0, 2.0]], "h": [0, 0, 0]}'
    inst = load_instance(doc)
    assert np.array_equal(inst.edge_index, [[0, 1], [0, 2]])
    assert np.allclose(inst.couplings, [2.0, 1.0])


@pytest.mark.parametrize("text", [
    "not json",
    "[1, 2]",
    '{"n": 3, "edges": []}',
    '{"n": 3.0, "edges": [], "h": [0, 0, 0]}',
    '{"n": 2, "edges": [[0, 1]], "h": [0, 0]}',
])
def test_load_rejects_bad_documents(text):
    with pytest.raises(InstanceError):
        load_instance(text)


def test_chain_generation():
    inst = generate_chain(5, law="ferro", h=0.3, seed=0)
    assert inst.m == 4
    assert np.array_equal(inst.edge_index,
                          np.column_stack([np.arange(4), np.arange(1, 5)]))
    assert np.all(inst.couplings == 1.0)
    assert np.all(inst.fields == 0.3)

    pm = generate_chain(20, law="pm_one", h=0.0, seed=2)
    assert set(np.unique(pm.couplings)) <= {-1.0, 1.0}

    g1 = generate_chain(10, law="gaussian", h=1.0, seed=7)
    g2 = generate_chain(10, law="gaussian", h=1.0, seed=7)
    assert g1 == g2
    assert g1 != generate_chain(10, law="gaussian", h=1.0, seed=8)


@pytest.mark.parametrize("call", [
    lambda: generate_chain(1, law="ferro", h=0.0, seed=0),
    lambda: generate_chain(4, law="ferro", h=-1.0, seed=0),
    lambda: generate_chain(4, law="bogus", h=0.0, seed=0),
    lambda: generate_rrg(5, 3, law="ferro", h=0.0, seed=0),
    lambda: generate_rrg(4, 4, law="ferro", h=0.0, seed=0),
])
def test_generator_input_errors(call):
    with pytest.raises(InstanceError):
        call()


def test_rrg_generation():
    inst = generate_rrg(12, 3, law="pm_one", h=0.5, seed=4)
    degrees = np.bincount(inst.edge_index.ravel(), minlength=12)
    assert np.all(degrees == 3)
    assert np.all(inst.edge_index[:, 0] < inst.edge_index[:, 1])
    assert generate_rrg(12, 3, law="pm_one", h=0.5, seed=4) == inst

    # the only simple 3-regular graph on 4 vertices is the complete one
    k4 = generate_rrg(4, 3, law="ferro", h=0.0, seed=0)
    assert sorted(map(tuple, k4.edge_index.tolist())) == [
        (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_directed_edge_convention():
    inst = generate_chain(4, law="ferro", h=0.0, seed=0)
    g = ClassicalGraph.from_instance(inst)
    for e in range(g.m):
        lo, hi = g.edge_index[e]
        assert g.src[2 * e] == lo and g.dst[2 * e] == hi
        assert g.src[2 * e + 1] == hi and g.dst[2 * e + 1] == lo
        assert g.reverse(2 * e) == 2 * e + 1
    assert np.array_equal(g.degrees, [1, 2, 2, 1])
    assert g.edge_of_dir[5] == 2


def test_forest_detection():
    chain = ClassicalGraph(4, [[0, 1], [1, 2], [2, 3]])
    assert chain.is_forest
    triangle = ClassicalGraph(3, [[0, 1], [0, 2], [1, 2]])
    assert not triangle.is_forest


def test_bfs_order_covers_components():
    g = ClassicalGraph(5, [[0, 1], [3, 4]])
    order = g.bfs_order()
    assert sorted(order.tolist()) == [0, 1, 2, 3, 4]
    assert order[0] == 0 and order[1] == 1


@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_round_trip_random_instances(data):
    n = data.draw(st.integers(1, 7))
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = data.draw(st.sets(st.sampled_from(range(len(all_pairs))))
                       if all_pairs else st.just(set()))
    edges = np.array(sorted(all_pairs[i] for i in chosen),
                     dtype=np.int64).reshape(-1, 2)
    couplings = data.draw(st.lists(
        st.floats(-3, 3, allow_nan=False), min_size=len(chosen),
        max_size=len(chosen)))
    fields = data.draw(st.lists(
        st.floats(0, 4, allow_nan=False), min_size=n, max_size=n))
    inst = QuantumInstance(n=n, edge_index=edges, couplings=couplings,
                           fields=fields, seed=data.draw(st.integers(0, 99)))
    assert load_instance(save_instance(inst)) == inst
