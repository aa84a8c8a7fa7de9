import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bullwhip.demand import DemandModel, generate
from bullwhip.dynamics import simulate
from bullwhip.metrics import (
    BweReport,
    MetricError,
    layer_bwe_curve_empirical,
    layer_bwe_empirical,
    node_bwe_empirical,
    rmse,
    transient_layers,
)
from bullwhip.network import StructureSpec, assign_layers, custom_network, generate_structure, serial_network
from bullwhip.spectral import PolicyParams, amplification_rate

FIG2 = ((1.0, 0.15), (1.0, 0.25), (1.0, 0.40))


def test_rmse_examples():
    assert rmse([1, 2], [1, 2]) == 0
    assert rmse([1, 2], [1, 4]) == pytest.approx(math.sqrt(2))
    with pytest.raises(MetricError):
        rmse([1], [1, 2])
    with pytest.raises(MetricError):
        rmse([], [])


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20))
def test_rmse_nonnegative_and_zero_on_self(xs):
    assert rmse(xs, xs) == 0
    assert rmse(xs, [x + 1 for x in xs]) == pytest.approx(1.0)


def test_constant_demand_is_undefined():
    net = serial_network(2, 4, 2)
    tr = simulate(net, {"n1_0": np.full(100, 5.0)}, warmup=20)
    with pytest.raises(MetricError, match="zero variance"):
        node_bwe_empirical(tr, "n1_0")


def test_serial_sinusoid_matches_rate():
    T, warm = 1000, 400
    d = generate(DemandModel(seasonal=((1.0, 0.15),), horizon=T))
    tr = simulate(serial_network(3, 4, 2), {"n1_0": d}, T, warm)
    phi = amplification_rate(PolicyParams(4, 2), 2 * np.pi * 0.15)
    assert node_bwe_empirical(tr, "n1_0") == pytest.approx(phi, abs=1e-3)
    assert node_bwe_empirical(tr, "n2_0") == pytest.approx(phi, abs=1e-3)
    asg = assign_layers(tr.net)
    assert layer_bwe_empirical(tr, asg, 1) == node_bwe_empirical(tr, "n1_0")
    with pytest.raises(MetricError):
        node_bwe_empirical(tr, "n3_0")
    with pytest.raises(MetricError):
        layer_bwe_empirical(tr, asg, 3)


def test_paral_identical_demand_equals_serial():
    T, warm = 1000, 400
    d = generate(DemandModel(seasonal=FIG2, horizon=T))
    par = generate_structure(StructureSpec("Paral", (3, 3, 3), rho=0.5, seed=1), 4, 2)
    tp = simulate(par, {m: d for m in par.market_nodes}, T, warm)
    ts = simulate(serial_network(3, 4, 2), {"n1_0": d}, T, warm)
    np.testing.assert_allclose(layer_bwe_curve_empirical(tp, assign_layers(par)),
                               layer_bwe_curve_empirical(ts, assign_layers(ts.net)), rtol=1e-10)


def test_non_unique_layers_rejected():
    net = custom_network(["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "c")], ["a", "b"])
    tr = simulate(net, {"a": np.arange(50.0), "b": np.arange(50.0) ** 2})
    with pytest.raises(MetricError, match="node-to-node"):
        layer_bwe_empirical(tr, assign_layers(net), 1)


def test_transient_layers():
    net = generate_structure(StructureSpec("Conv", (1, 2, 3, 4), rho=0.2), 1, 1)
    assert transient_layers(net, assign_layers(net)) == [1, 2, 3]


def test_report_round_trip(tmp_path):
    emp = np.array([[1.0, 2.0], [1.2, 2.2]])
    rep = BweReport.from_replications([1, 2], [1.1, 2.1], emp, node_bwe={"a": 1.5},
                                      node_to_node=[{"source": "a", "sink": "s", "Phi": 3.0}],
                                      metadata={"structure": "Paral", "seed": 3})
    assert rep.replications == 2
    assert rep.rmse == pytest.approx(0.0, abs=1e-15)
    assert BweReport.from_json(rep.to_json()) == rep
    rep.save(tmp_path / "r.json")
    assert BweReport.from_json((tmp_path / "r.json").read_text()) == rep
    assert rep.layer_rows()[1]["empirical_mean"] == pytest.approx(2.1)


def test_report_invariants():
    with pytest.raises(MetricError):
        BweReport([1], [1.0], [1.0], [0.0], 0, 0.0)
    with pytest.raises(MetricError):
        BweReport([1], [1.0], [1.0], [0.0], 1, -1.0)
