import json

import numpy as np
import pytest

from bullwhip.demand import DemandModel, HyperPrior
from bullwhip.experiments import (
    ConfigError,
    ExperimentConfig,
    ValidationReport,
    deterministic_variant,
    eta_monte_carlo,
    find_witnesses,
    layered_report,
    preset,
    reproduce_fig2,
    reproduce_fig4,
    reproduce_fig5,
    run_layered,
    simulate_first_layer,
    validate_prop1,
    validate_prop2,
    validate_prop3,
)
from bullwhip.dynamics import simulate_many
from bullwhip.network import StructureSpec, assign_layers, generate_structure
from bullwhip.spectral import PolicyParams, eta_first_layer


def test_config_defaults_and_validation():
    cfg = ExperimentConfig()
    assert (cfg.horizon, cfg.warmup, cfg.replications) == (1000, 400, 50)
    with pytest.raises(ConfigError):
        ExperimentConfig(replications=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(warmup=1000)
    with pytest.raises(ConfigError):
        ExperimentConfig(tolerances={"nope": 1})


def test_config_round_trip(tmp_path):
    cfg = preset("prop5").with_overrides(seed=9, tolerances={"min_z": 3.0})
    cfg.save(tmp_path / "c.json")
    back = ExperimentConfig.load(tmp_path / "c.json")
    assert back.to_dict() == cfg.to_dict()
    assert back.tol("min_z") == 3.0
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"structure": {"kind": "Paral"}})


def test_validators_are_deterministic():
    a, b = validate_prop1(), validate_prop1()
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert a.passed


def test_report_round_trip():
    rep = validate_prop2()
    back = ValidationReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert back.to_dict() == rep.to_dict()


def test_prop1_boundary_cases_pass():
    rep = validate_prop1()
    names = {c.name: c.passed for c in rep.checks}
    assert names["single frequency gives constant Phi_l = phi"]
    assert names["equal-rate pair gives constant Phi_l"]


def test_prop2_homogeneous_has_no_layer1_witness():
    rep = validate_prop2()
    assert rep.passed
    assert rep.data["witnesses"]


def test_find_witnesses():
    s = np.array([[1.0, 2.0], [1.5, 1.8]])
    assert find_witnesses(s, [1, 2], [1, 2]) == [(2, 1, 2, 2.0, 1.8)]


def test_noise_free_layers_match_analysis():
    spec = StructureSpec("Div", (5, 4, 3, 2, 1), rho=0.25)
    model = DemandModel(base=100, seasonal=((10.0, 0.1), (30.0, 0.05)))
    run = run_layered(spec, model, PolicyParams(4, 19), 1000, 400, 1, 0)
    assert np.max(np.abs(run["empirical"] - run["analytical"])) <= 1e-6


def test_pure_trend_passes_unamplified():
    spec = StructureSpec("Conv", (1, 2, 3, 4, 5), rho=0.25)
    run = run_layered(spec, DemandModel(base=100, trend=0.4), PolicyParams(4, 19), 1000, 400, 1, 0)
    np.testing.assert_allclose(run["empirical"], 1.0, rtol=1e-9)
    np.testing.assert_allclose(run["analytical"], 1.0, rtol=1e-12)


def test_deterministic_variant():
    assert deterministic_variant(DemandModel(base=100, noise_sd=20)) is None
    det = deterministic_variant(DemandModel(base=100, trend=0.2, noise_sd=20))
    assert det.noise_sd == 0 and det.trend == 0.2


def test_layered_report_metadata():
    rep = layered_report(StructureSpec("Paral", (2, 2, 2), rho=0.0), DemandModel(base=10, noise_sd=1.0),
                         PolicyParams(2, 3), 200, 50, 3, 1)
    assert rep.replications == 3
    assert rep.metadata["structure"] == "Paral"
    assert rep.layers == [1, 2]


def test_eta_mc_m1_matches_closed_form():
    p = PolicyParams(4, 4)
    mc = eta_monte_carlo(HyperPrior.uniform(-1, 1), p, [1, 2], 200_000, 1)
    # E[phi^4] = 1/5 under U(-1, 1)
    assert mc["mean"][0] == pytest.approx(5 - 4 * 0.2, abs=0.01)
    assert mc["step_z"][0] < 0


def test_first_layer_shortcut_equals_network_simulation():
    # the spot-check filters each node separately; the network simulator agrees
    prior = HyperPrior.uniform(-0.9, 0.9)
    p = PolicyParams(4, 4)
    fast = simulate_first_layer(prior, p, [2], reps=3, T=300, warmup=100, seed=5, chunk=3)

    from bullwhip.demand import ar1_paths, derive_seed
    from bullwhip.metrics import layer_bwe_empirical

    rng = np.random.default_rng(derive_seed(5, 5, 0))
    phi = prior.draw(rng, (3, 2))
    x = ar1_paths(phi, 300, rng)
    net = generate_structure(StructureSpec("Paral", (2, 2), rho=0.25), p.L, p.P)
    traces = simulate_many(net, [{m: x[r, k] for k, m in enumerate(net.market_nodes)} for r in range(3)], 300, 100)
    asg = assign_layers(net)
    slow = np.mean([layer_bwe_empirical(tr, asg, 1) ** 2 for tr in traces])
    assert fast["mean"][0] == pytest.approx(slow, rel=1e-10)


def test_prop3_small():
    cfg = preset("prop3").with_overrides(replications=20)
    rep = validate_prop3(cfg)
    assert {c.name for c in rep.checks} >= {"structures agree", "identical deterministic demand gives identical curves"}
    assert rep.checks[-1].passed


def test_fig2_data():
    rep = reproduce_fig2()
    assert rep.passed
    assert rep.data["phi"][0] == pytest.approx(1.0)
    assert rep.data["component_amplitudes"][1] == pytest.approx([4.0875669942521276, 5.0, 3.048244751902418])


def test_fig4_and_fig5_small():
    cfg = preset("fig4").with_overrides(mc_draws=20_000)
    rep4 = reproduce_fig4(cfg)
    assert set(rep4.data) == {"A", "B", "C", "D"}
    assert rep4.passed
    rep5 = reproduce_fig5(preset("fig5").with_overrides(mc_draws=50_000))
    assert rep5.passed
