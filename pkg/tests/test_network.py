import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bullwhip.network import (
    NetworkError,
    StructureKind,
    StructureSpec,
    assign_layers,
    custom_network,
    generate_structure,
    layered_network,
    load_network,
    markov_partition,
    network_from_dict,
    network_to_dict,
    save_network,
    serial_network,
)


def test_paral_without_extra_links_has_one_link_per_node():
    net = generate_structure(StructureSpec("Paral", (2, 2), rho=0.0, seed=3), 4, 2)
    assert len(net.links) == 2
    assert net.market_nodes == ("n1_0", "n1_1")
    assert set(net.source_nodes) == {"n2_0", "n2_1"}


def test_equal_split_weights_sum_to_one():
    net = generate_structure(StructureSpec("Div2Conv", (1, 3, 5, 3, 1), rho=0.6, seed=1), 4, 19)
    rows = net.weights.sum(axis=1)
    has_out = net.adjacency.any(axis=1)
    np.testing.assert_allclose(rows[has_out], 1.0)
    assert np.all(rows[~has_out] == 0)


@pytest.mark.parametrize("kind,widths", [
    ("Div", (1, 2, 3)),
    ("Conv", (3, 2, 1)),
    ("Paral", (2, 3)),
    ("Div2Conv", (1, 2, 3)),
    ("Serial", (1, 2)),
    ("Custom", (1, 1)),
])
def test_structure_kind_mismatch_rejected(kind, widths):
    with pytest.raises(NetworkError):
        StructureSpec(kind, widths)


def test_rho_out_of_range():
    with pytest.raises(NetworkError):
        StructureSpec("Paral", (2, 2), rho=1.5)


@settings(max_examples=40, deadline=None)
@given(
    widths=st.lists(st.integers(1, 4), min_size=2, max_size=5),
    rho=st.floats(0, 1),
    seed=st.integers(0, 2**31),
)
def test_layered_networks_are_unique_layer_and_valid(widths, rho, seed):
    net = layered_network(widths, rho, seed, 2, 3)
    asg = assign_layers(net)
    assert asg.unique
    assert [len(asg.layers[l]) for l in sorted(asg.layers)] == widths
    # every non-market node is supplied by someone downstream, every non-source orders upstream
    A = net.adjacency
    for k, v in enumerate(net.nodes):
        if v not in net.market_nodes:
            assert A[:, k].any()
        if k < len(net) - widths[-1]:
            assert A[k].any()


def test_generation_is_seed_deterministic():
    spec = StructureSpec("Paral", (3, 3, 3), rho=0.4, seed=9)
    a, b = generate_structure(spec, 4, 19), generate_structure(spec, 4, 19)
    assert np.array_equal(a.adjacency, b.adjacency)


def test_custom_network_validation():
    with pytest.raises(NetworkError, match="self-link"):
        custom_network(["a", "b"], [("a", "a"), ("a", "b")], ["a"])
    with pytest.raises(NetworkError):
        custom_network(["a", "b"], [("a", "b", 0.5)], ["a"])  # weights do not sum to 1
    with pytest.raises(NetworkError):
        custom_network(["a", "b"], [("a", "c")], ["a"])


def test_intra_layer_link_is_not_unique():
    net = custom_network(["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "c")], ["a", "b"])
    assert not assign_layers(net).unique


def test_markov_partition_serial():
    part = markov_partition(serial_network(3))
    assert part.transient == ("n1_0", "n2_0")
    assert part.absorbing == ("n3_0",)
    np.testing.assert_array_equal(part.W, [[0, 1], [0, 0]])
    np.testing.assert_array_equal(part.R, [[0], [1]])


def test_markov_partition_orders_downstream_first():
    net = custom_network(["s", "b", "a"], [("a", "b"), ("b", "s")], ["a"])
    assert markov_partition(net).transient == ("a", "b")


def test_json_round_trip(tmp_path):
    net = generate_structure(StructureSpec("Conv", (1, 2, 3), rho=0.5, seed=2), 3, 5)
    net = net.with_policy(np.arange(len(net)) + 1, 5)
    again = network_from_dict(network_to_dict(net))
    assert again.nodes == net.nodes
    assert np.array_equal(again.adjacency, net.adjacency)
    np.testing.assert_allclose(again.weights, net.weights)
    assert np.array_equal(again.lead_time, net.lead_time)
    path = tmp_path / "net.json"
    save_network(net, path)
    assert np.array_equal(load_network(path).window, net.window)


def test_arrays_are_read_only():
    net = serial_network(2)
    with pytest.raises(ValueError):
        net.adjacency[0, 1] = False


def test_node_without_orders_rejected():
    with pytest.raises(NetworkError, match="receives no orders"):
        custom_network(["a", "b", "c"], [("a", "b")], ["a"])


def test_unreachable_cycle():
    net = custom_network(["a", "b", "c", "d"], [("a", "b"), ("c", "d"), ("d", "c")], ["a"])
    with pytest.raises(NetworkError, match="not reachable"):
        assign_layers(net)
