import json

import pytest

from annealed_posterior import ConfigError, ExperimentSpec, run_experiment
from annealed_posterior.experiments import EXPERIMENTS, experiment_schema, resolve_params

SMALL = {
    "variance-curve": {"n_chains": 400, "h": 1e-3},
    "gaussian-posterior": {"n_chains": 100, "lam": 2.0, "eps": 0.5},
    "rung-stability": {"n_chains": 100, "lam": 2.0, "eps": 0.5},
    "ring": {"n_theta": 1024},
    "ring-posterior": {"n_chains": 60, "n_oracle": 60, "n_permutations": 49},
    "amplification": {"n_draws": 2000, "n_chains": 100, "h": 1e-3},
    "compressed-sensing": {"trials": 4, "posterior_draws": 20, "h": 0.05},
    "schedule-report": {},
}


def test_registry_covers_all_tags():
    expected = {"variance-curve", "gaussian-posterior", "rung-stability", "ring", "amplification",
                "compressed-sensing", "schedule-report"}
    assert expected <= set(EXPERIMENTS)
    assert set(SMALL) == set(EXPERIMENTS)


@pytest.mark.parametrize("name", sorted(SMALL))
def test_rerun_is_byte_identical(name, tmp_path):
    a = run_experiment(ExperimentSpec(name, SMALL[name], 3, tmp_path / "a"))
    b = run_experiment(ExperimentSpec(name, SMALL[name], 3, tmp_path / "b"))
    csv_a = (tmp_path / "a" / f"{name}.csv").read_bytes()
    assert csv_a == (tmp_path / "b" / f"{name}.csv").read_bytes()
    assert csv_a.decode() == a.csv_text() and len(a.rows) > 0
    man = json.loads((tmp_path / "a" / f"{name}.json").read_text())
    assert man["experiment"] == name and man["seed"] == 3
    assert set(man) >= {"parameters", "git_describe", "wall_time_s", "summary", "csv"}
    for key, value in SMALL[name].items():
        assert man["parameters"][key] == value
    timing = {k for k in a.summary if k.endswith("wall_time_s")}
    assert {k: v for k, v in a.summary.items() if k not in timing} == \
        {k: v for k, v in b.summary.items() if k not in timing}


def test_different_seed_changes_random_experiment(tmp_path):
    a = run_experiment(ExperimentSpec("variance-curve", SMALL["variance-curve"], 1))
    b = run_experiment(ExperimentSpec("variance-curve", SMALL["variance-curve"], 2))
    assert a.csv_text() != b.csv_text()


def test_unknown_experiment_and_keys():
    with pytest.raises(ConfigError, match="unknown experiment"):
        ExperimentSpec("nope")
    with pytest.raises(ConfigError, match="unknown key"):
        resolve_params("ring", {"widht": 0.2})
    assert resolve_params("ring", {"width": "0.2"})["width"] == 0.2
    assert experiment_schema("ring")["width"] == 0.1


def test_downstream_errors_carry_context():
    with pytest.raises(ValueError, match="experiment gaussian-posterior \\(seed 5\\)"):
        run_experiment(ExperimentSpec("gaussian-posterior", {"n_chains": 0}, 5))


def test_variance_curve_columns():
    res = run_experiment(ExperimentSpec("variance-curve", SMALL["variance-curve"], 0))
    assert res.columns == ["index", "t", "analytic_var", "empirical_var", "mc_stderr"]
    assert len(res.rows) == 50
    analytic = res.column("analytic_var")
    t = res.column("t")
    assert abs(t[analytic.argmin()] - res.summary["t_star"]) <= t[1] - t[0]
