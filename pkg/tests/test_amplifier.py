import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psilab import amplifier, bohr
from psilab.amplifier import ConcentrationInstance, PipelineConfig

from conftest import arc_distance, clustered_instance, cosine_instance, holder_oracle, synthetic_fixture


def brute_count(inst: ConcentrationInstance, beta: float) -> int:
    return sum(arc_distance(inst.freq * x + beta) <= inst.eps for x in inst.points.tolist())


def test_all_equal_points():
    inst = ConcentrationInstance(np.full(50, 3.3), 100.0, 1.0, 0.5, 0.004)
    res = amplifier.concentrate(inst)
    assert res.achieved == 50 and res.met
    assert arc_distance(3.3 + res.beta_star) <= 0.004


def test_clustered_instance_meets_threshold():
    inst = clustered_instance(0)
    assert all(inst.flags().values())
    res = amplifier.concentrate(inst)
    assert res.achieved >= 600 >= res.threshold
    assert res.achieved == brute_count(inst, res.beta_star)
    assert res.to_dict()["mode"] == "guaranteed"


def test_violated_hypothesis_is_report_only():
    rng = np.random.default_rng(1)
    inst = ConcentrationInstance(rng.uniform(0, 1000, 1000), 1000.0, 1.0, 0.5, 0.004)
    res = amplifier.concentrate(inst)
    assert res.flags["large_sum"] is False
    assert not res.hypotheses_met and res.to_dict()["mode"] == "report_only"


@pytest.mark.parametrize("seed", range(5))
def test_cosine_family(seed):
    inst = cosine_instance(seed)
    assert all(inst.flags().values())
    res = amplifier.concentrate(inst)
    assert res.met
    spec = bohr.BohrSpec([inst.freq], [res.beta_star], inst.eps)
    assert bohr.count_members(spec, inst.points) == res.achieved


def test_concentrate_finds_true_maximum():
    rng = np.random.default_rng(3)
    inst = ConcentrationInstance(rng.uniform(0, 50, 60), 50.0, 1.37, 0.5, 0.03)
    res = amplifier.concentrate(inst)
    # the count only changes where some x_j enters or leaves the arc; probe just inside each end
    proj = inst.freq * inst.points
    r = inst.eps * (1 - 1e-9)
    ends = np.concatenate([-proj - r, -proj + r])
    cand = np.mod(ends, 1.0)
    best = max(brute_count(inst, float(b)) for b in cand)
    assert res.achieved == best


@pytest.mark.parametrize("k", [1, 2, 3])
def test_holder_exhaustive_matches_oracle(k):
    xs, betas, g = synthetic_fixture()
    res = amplifier.holder_amplify(xs, betas, g, 0.1, k, 1e-3, keep_tuples=True)
    assert res.exhaustive and res.tuples_evaluated == 5**k
    assert res.rhs == holder_oracle(xs, betas, g, 0.1, k)
    assert res.rhs == res.power_sum
    if k == 1:
        assert res.rhs == sum(res.per_x_counts)
        for x, b, c in zip(xs, betas, res.per_x_counts):
            assert c == bohr.count_members(bohr.BohrSpec([math.log(x) / (2 * math.pi)], [b], 0.1), g)
    expected_lhs = (0.2 * 1.001 * 5) ** k * g.size
    assert res.lhs == pytest.approx(expected_lhs, rel=1e-12)


def test_holder_degenerate_equal_witnesses():
    g = np.sort(np.random.default_rng(6).uniform(14, 300, 200))
    res = amplifier.holder_amplify([1500.5] * 3, [0.2] * 3, g, 0.1, 2, 0.0, keep_tuples=True)
    single = amplifier.holder_amplify([1500.5], [0.2], g, 0.1, 1, 0.0)
    assert set(res.tuple_counts) == {single.rhs}


def test_holder_sampled_mode_and_log_space():
    xs, betas, g = synthetic_fixture()
    res = amplifier.holder_amplify(xs * 4, betas * 4, g, 0.01, 6, 1e-3, samples=4000, seed=1)
    assert not res.exhaustive and res.rhs_stderr >= 0
    huge = amplifier.holder_amplify(xs, betas, g, 1e-6, 400, 0.0, samples=10)
    assert huge.lhs == 0.0 or huge.lhs < 1e-300
    assert math.isfinite(huge.log_lhs)


def test_derived_parameters():
    d = amplifier.derived_parameters(PipelineConfig())
    assert d["alpha"] == pytest.approx(0.9) and d["beta"] == 0.1
    assert d["rho"] == pytest.approx(0.05 / 100)
    assert d["eta"] == pytest.approx(0.005 / 10_000)
    assert d["k_uncapped"] == math.ceil(math.log(200) * 200)
    assert d["k"] == 8 and d["partition_K"] == 200
    with pytest.raises(ValueError):
        PipelineConfig(eps=0.0).validate()


def test_mini_pipeline(synthetic_table):
    cfg = PipelineConfig(big_x=1e3, k_max=2, witness_limit=4, average_trials=2)
    fabricated = [1010.5, 1300.5, 1600.5, 1900.5]
    rep = amplifier.run_pipeline(cfg, table=synthetic_table, witnesses=fabricated)
    stages = rep["stages"]
    assert list(stages) == ["large_values", "pigeonhole", "partition", "concentration", "holder", "bohr", "final_inequality"]
    assert all(s["status"] == "ok" for s in stages.values())
    assert stages["holder"]["exhaustive"] and stages["holder"]["k"] == 2
    again = amplifier.run_pipeline(cfg, table=synthetic_table, witnesses=fabricated)
    assert amplifier.report_json(rep) == amplifier.report_json(again)


def test_pipeline_truncates_with_marker(synthetic_table):
    cfg = PipelineConfig(big_x=1e3, k_max=2, surrogate_witnesses=False)
    rep = amplifier.run_pipeline(cfg, table=synthetic_table)
    stages = rep["stages"]
    assert stages["large_values"]["status"] == "ok"
    assert stages["pigeonhole"] == {"status": "not_reached", "reason": "no witnesses from the large-value scan"}
    assert stages["final_inequality"]["status"] == "not_reached"


def test_report_json_is_strict():
    text = amplifier.report_json({"a": math.inf, "b": np.float64(1.5), "c": np.arange(2)})
    assert json.loads(text) == {"a": None, "b": 1.5, "c": [0, 1]}


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=40), st.floats(0.1, 3.0), st.floats(0.01, 0.2))
def test_concentrate_count_is_exact(points, freq, eps):
    inst = ConcentrationInstance(np.array(points), 100.0, freq, 0.5, eps)
    res = amplifier.concentrate(inst)
    assert res.achieved == bohr.count_members(bohr.BohrSpec([freq], [res.beta_star], eps), inst.points)
    assert 0 <= res.beta_star < 1
