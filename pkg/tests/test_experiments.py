import json

import pytest

from hcburger.errors import InsufficientHits, OutOfRange
from hcburger.experiments import (DEFAULTS, EXPERIMENT_IDS, ExperimentReport, make_spec,
                                  run_experiment, verdict)

# small configurations that exercise every code path in a few seconds
SMALL = {
    "E1": dict(n_grid=[4, 8, 16, 32, 64], replicas=20000),
    "E2": dict(n_grid=[2, 3, 4], min_hits=50, start_trials=2000, exact_n=2, exact_trials=20000),
    "E3": dict(n_grid=[16, 32, 64], replicas=500),
    "E4": dict(m=10, eps_grid=[0.4, 0.2, 0.1], replicas=300, symmetry_replicas=200, cap=10**5),
    "E5": dict(zeta_grid=[0.4, 0.2, 0.1], replicas=2000, dt=1e-2, t_max=100.0),
    "E6": dict(dt=1e-2, control_dt=5e-3, samples=2000, control_samples=2000, bins=4),
    "E7": dict(dt=1e-2, meanders=3000, excursions=1000, survival_paths=200,
               survival_spacing=0.25, min_ess=500, max_D=0.2),
    "E8": dict(n=6, words=100, extra_n=[4, 8], excursions=500, dt=1e-2, max_D=0.5),
    "E9": dict(closed_words=30, closed_n=6, iid_words=30, iid_length=100),
}


def small(key, seed=0, threads=1, **extra):
    return make_spec(key, seed, threads, **{**SMALL[key], **extra})


class TestSpec:
    def test_ids(self):
        assert make_spec("E3").id == "E3_flex_count"
        assert make_spec("E3_flex_count").key == "E3"
        with pytest.raises(ValueError):
            make_spec("E0")

    def test_unknown_parameter(self):
        with pytest.raises(ValueError):
            make_spec("E1", dt=0.1)

    def test_resolved_defaults(self):
        spec = make_spec("E6", samples=10)
        pr = spec.resolved()
        assert pr["samples"] == 10 and pr["bins"] == DEFAULTS["E6"]["bins"]

    def test_none_values_dropped(self):
        assert make_spec("E1", replicas=None).params == {}


class TestVerdict:
    def test_relations(self):
        est = {"a": {"value": 1.0}, "b": {"value": 0.5}, "c": {"value": 3}}
        assert verdict(est, {"a": {"value": 1.05, "relation": "abs", "tolerance": 0.1}})
        assert not verdict(est, {"a": {"value": 1.2, "relation": "abs", "tolerance": 0.1}})
        assert verdict(est, {"b": {"value": [0.45, 0.55], "relation": "in"}})
        assert verdict(est, {"b": {"value": 0.6, "relation": "lt"}})
        assert not verdict(est, {"b": {"value": 0.5, "relation": "lt"}})
        assert verdict(est, {"c": {"value": 3, "relation": "le"}})
        assert verdict(est, {"c": {"value": 3, "relation": "ge"}})
        assert not verdict(est, {"c": {"value": 4, "relation": "ge"}})
        with pytest.raises(ValueError):
            verdict(est, {"c": {"value": 3, "relation": "eq"}})


@pytest.mark.parametrize("key", sorted(EXPERIMENT_IDS))
def test_small_run_schema(key):
    rep = run_experiment(small(key, seed=3))
    d = json.loads(rep.to_json())
    assert set(d) >= {"id", "params", "estimates", "expected", "pass", "runtime_seconds"}
    assert d["id"] == EXPERIMENT_IDS[key]
    assert d["params"]["seed"] == 3
    for name, e in d["estimates"].items():
        assert set(e) == {"value", "stderr"}, name
    for name, e in d["expected"].items():
        assert name in d["estimates"]
        assert isinstance(e["provenance"], str) and e["provenance"]
    assert d["pass"] == rep.passed and d["runtime_seconds"] >= 0
    assert rep.replica_count > 0


@pytest.mark.parametrize("key", ["E1", "E3", "E4", "E6"])
def test_thread_count_does_not_change_estimates(key):
    a = run_experiment(small(key, seed=5, threads=1))
    b = run_experiment(small(key, seed=5, threads=2))
    assert a.estimates == b.estimates


def test_seed_changes_estimates():
    a = run_experiment(small("E1", seed=1))
    b = run_experiment(small("E1", seed=2))
    assert a.estimates != b.estimates


class TestValidation:
    def test_short_grid(self):
        with pytest.raises(InsufficientHits):
            run_experiment(small("E1", n_grid=[4, 8]))

    def test_unsorted_grid(self):
        with pytest.raises(OutOfRange):
            run_experiment(small("E3", n_grid=[64, 32, 16]))

    def test_rejection_limit(self):
        with pytest.raises(OutOfRange):
            run_experiment(small("E2", n_grid=[50, 100, 200]))


def test_report_round_trip():
    rep = ExperimentReport("E9_property_sweep", {"p": 0.3}, {"violations": {"value": 0, "stderr": None}},
                           {"violations": {"value": 0, "relation": "le", "tolerance": None,
                                           "provenance": "x"}}, 1.5, 10, 7)
    d = rep.to_dict()
    assert d["pass"] is True and d["params"] == {"p": 0.3, "seed": 7}
