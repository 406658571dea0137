from random import Random

import pytest

from rcpsp_bench.dag import (
    CapacityError,
    LayeredDag,
    LayerOrderError,
    add_edge_nonredundant,
    default_layer_sizes,
    edge_is_redundant,
    generate_layered_dag,
    transitive_closure_reference,
)


def test_add_edge_basic():
    dag = LayeredDag.empty([1, 1, 1])
    assert add_edge_nonredundant(dag, 0, 1)
    assert dag.closure()[0][1]
    assert add_edge_nonredundant(dag, 1, 2)
    # transitivity: 0 -> 2 already implied
    assert not add_edge_nonredundant(dag, 0, 2)
    assert dag.edges == [(0, 1), (1, 2)]


def test_add_edge_rejects_bypass_of_existing_edge():
    # a->c first; then a->b; accepting b->c would turn a->c into a shortcut
    dag = LayeredDag.empty([1, 1, 1])
    a, b, c = 0, 1, 2
    assert add_edge_nonredundant(dag, a, c)
    assert add_edge_nonredundant(dag, a, b)
    assert not add_edge_nonredundant(dag, b, c)
    for e in dag.edges:
        assert not edge_is_redundant(dag.edges, e)


def test_add_edge_layer_order_error():
    dag = LayeredDag.empty([2, 2])
    with pytest.raises(LayerOrderError):
        add_edge_nonredundant(dag, 2, 0)
    with pytest.raises(LayerOrderError):
        add_edge_nonredundant(dag, 0, 1)  # same layer


def test_disjoint_components_closure_update():
    # a->b, c->d, then b->c links everything: closure must show a->d
    dag = LayeredDag.empty([1, 1, 1, 1])
    a, b, c, d = 0, 1, 2, 3
    assert add_edge_nonredundant(dag, a, b)
    assert add_edge_nonredundant(dag, c, d)
    assert add_edge_nonredundant(dag, b, c)
    assert dag.closure() == transitive_closure_reference(dag.edges, 4)
    assert dag.closure()[a][d]


def test_closure_reference_simple():
    closure = transitive_closure_reference([(0, 1), (1, 2)], 3)
    expected = {(0, 1), (1, 2), (0, 2)}
    got = {(i, j) for i in range(3) for j in range(3) if closure[i][j]}
    assert got == expected
    assert transitive_closure_reference([], 2) == [[False, False], [False, False]]


def test_generate_bipartite_exact_k():
    dag = generate_layered_dag(2, 4, [3, 3], Random(1))
    assert len(dag.edges) == 4
    assert len(set(dag.edges)) == 4
    for i, j in dag.edges:
        assert dag.layer_of[i] == 0 and dag.layer_of[j] == 1


def test_generate_capacity_error():
    with pytest.raises(CapacityError):
        generate_layered_dag(2, 2, [1, 1], Random(0))


def test_generate_deterministic():
    a = generate_layered_dag(4, 25, [4, 4, 4, 4], Random(99))
    b = generate_layered_dag(4, 25, [4, 4, 4, 4], Random(99))
    assert a.edges == b.edges
    assert a.layers == b.layers


def test_generated_dags_match_reference_closure_and_are_irreducible():
    rng = Random(2024)
    for trial in range(1000):
        m = rng.randint(2, 4)
        k = rng.randint(1, 12)
        sizes = [rng.randint(2, 4) for _ in range(m)]
        try:
            dag = generate_layered_dag(m, k, sizes, Random(trial))
        except CapacityError:
            continue
        assert len(dag.edges) == k
        assert dag.closure() == transitive_closure_reference(dag.edges, dag.num_nodes)
        for e in dag.edges:
            assert not edge_is_redundant(dag.edges, e)
        for i, j in dag.edges:
            assert dag.layer_of[i] < dag.layer_of[j]


def test_pre_edges_seed_closure():
    # chains 0->2->4 and 1->3->5 (three layers of two)
    chains = [(0, 2), (2, 4), (1, 3), (3, 5)]
    dag = generate_layered_dag(3, 2, [2, 2, 2], Random(5), pre_edges=chains)
    assert len(dag.edges) == len(chains) + 2
    sampled = dag.edges[len(chains):]
    for e in sampled:
        assert e not in chains
    for e in dag.edges:
        assert not edge_is_redundant(dag.edges, e)


@pytest.mark.parametrize(
    "m,k,expected",
    [(2, 1, [2, 2]), (5, 200, [10] * 5), (3, 8, [3, 3, 3])],
)
def test_default_layer_sizes(m, k, expected):
    sizes = default_layer_sizes(m, k)
    assert sizes == expected
    # consecutive-pair capacity has at least 2x slack
    capacity = sum(sizes[i] * sizes[i + 1] for i in range(m - 1))
    assert capacity >= 2 * k
