import json

import pandas as pd
import pytest

import app
from conftest import REFERENCE_SCENARIO, SMALL_SCENARIO


def _error(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def test_solve_writes_report(write_scenario, tmp_path):
    config = write_scenario(SMALL_SCENARIO)
    out = tmp_path / "solve"
    assert app.main(["solve", "--config", config, "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "config.json", "equilibrium.csv", "equilibrium.json", "tenure.csv", "transition.csv",
    ]
    report = json.loads((out / "equilibrium.json").read_text())
    assert report["diagnostics"]["bellman_residual"] < 1e-8
    assert set(report["tenure_pmf"]) == {"STC", "LTC", "INF"}
    echoed = json.loads((out / "config.json").read_text())
    assert echoed["model"]["grid_size"] == 51
    assert echoed["output"]["directory"] == str(out)
    transition = pd.read_csv(out / "transition.csv", index_col=0)
    assert list(transition.index) == ["U", "INF", "STC", "LTC"]
    tenure = pd.read_csv(out / "tenure.csv", index_col=0)
    assert list(tenure.index) == list(range(13))
    assert {"stc_cohort", "stc_renewal", "ltc_cohort", "inf_renewal"} <= set(tenure.columns)


def test_solve_is_deterministic(write_scenario, tmp_path):
    config = write_scenario(SMALL_SCENARIO)
    first, second = tmp_path / "a", tmp_path / "b"
    assert app.main(["solve", "--config", config, "--out", str(first)]) == 0
    assert app.main(["solve", "--config", config, "--out", str(second)]) == 0
    for name in ("equilibrium.csv", "equilibrium.json", "transition.csv", "tenure.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_invalid_parameter_exits_with_validation_code(write_scenario, tmp_path, capsys):
    config = write_scenario("[model]\ninformal_penalty = 1.2\n", name="bad.toml")
    out = tmp_path / "never"
    assert app.main(["solve", "--config", config, "--out", str(out)]) == 2
    error = _error(capsys)
    assert error["error"] == "ParameterError"
    assert error["details"]["field"] == "informal_penalty"
    assert not out.exists()


def test_simulate_requires_a_seed(write_scenario, tmp_path, capsys):
    config = write_scenario(SMALL_SCENARIO)
    assert app.main(["simulate", "--config", config, "--out", str(tmp_path / "sim")]) == 2
    assert "seed" in _error(capsys)["message"]


def test_estimate_without_panel(write_scenario, capsys):
    config = write_scenario(SMALL_SCENARIO)
    assert app.main(["estimate", "--config", config]) == 2
    assert _error(capsys)["error"] == "ConfigError"


def test_missing_panel_file_exits_with_io_code(write_scenario, tmp_path, capsys):
    config = write_scenario(SMALL_SCENARIO)
    missing = tmp_path / "absent.csv"
    assert app.main(["estimate", "--config", config, "--panel", str(missing), "--out", str(tmp_path / "est")]) == 4
    error = _error(capsys)
    assert error["error"] == "OutputError"
    assert error["details"]["path"] == str(missing)


def test_single_point_sweep_is_not_testable(write_scenario, tmp_path):
    config = write_scenario(SMALL_SCENARIO)
    out = tmp_path / "sweep"
    assert app.main(["sweep", "--config", config, "--out", str(out)]) == 0
    predictions = json.loads((out / "predictions.json").read_text())
    assert set(predictions["claims"].values()) == {"not testable"}
    assert predictions["all_hold"] is False


def test_output_failure_exits_with_io_code(write_scenario, tmp_path, capsys):
    config = write_scenario(SMALL_SCENARIO)
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    assert app.main(["solve", "--config", config, "--out", str(blocker / "sub")]) == 4
    assert _error(capsys)["error"] == "OutputError"


def test_bad_thread_count(write_scenario):
    config = write_scenario(SMALL_SCENARIO)
    assert app.main(["solve", "--config", config, "--threads", "0"]) == 2


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = root / "reference.toml"
    config.write_text(REFERENCE_SCENARIO, encoding="utf-8")
    out = root / "sim"
    code = app.main(["simulate", "--config", str(config), "--seed", "9", "--out", str(out), "--threads", "2"])
    return code, config, out, root


def test_simulate_then_estimate(simulated):
    code, config, out, root = simulated
    assert code == 0
    assert {"panel.csv", "panel_meta.json", "panel_summary.csv", "config.json"} <= {p.name for p in out.iterdir()}
    meta = json.loads((out / "panel_meta.json").read_text())
    assert meta["seed"] == 9
    assert meta["post_wave_lag_months"] == 17

    est = root / "est"
    assert app.main(["estimate", "--config", str(config), "--panel", str(out / "panel.csv"), "--out", str(est)]) == 0
    estimates = pd.read_csv(est / "estimates.csv")
    assert "formal" in set(estimates["outcome"])
    paths = pd.read_csv(est / "event_study.csv")
    assert set(paths["outcome"]) == {"formal", "informal", "ltc_conditional", "ltc_unconditional"}
    assert -1 not in set(paths["period"])


def test_simulate_is_reproducible(simulated):
    code, config, out, root = simulated
    again = root / "sim_again"
    assert app.main(["simulate", "--config", str(config), "--seed", "9", "--out", str(again)]) == 0
    assert (out / "panel.csv").read_bytes() == (again / "panel.csv").read_bytes()


def test_estimate_rejects_panel_without_weights(simulated, capsys):
    code, config, out, root = simulated
    panel = pd.read_csv(out / "panel.csv", dtype=str, keep_default_na=False)
    broken = root / "broken.csv"
    panel.drop(columns=["household_weight:float"]).to_csv(broken, index=False)
    assert app.main(["estimate", "--config", str(config), "--panel", str(broken), "--out", str(root / "x")]) == 2
    error = _error(capsys)
    assert error["error"] == "SchemaError"
    assert error["details"]["column"] == "household_weight"


def test_reform_end_to_end(simulated):
    code, config, out, root = simulated
    target = root / "reform"
    assert app.main(["reform", "--config", str(config), "--seed", "9", "--out", str(target)]) == 0
    names = {p.name for p in target.iterdir()}
    assert {"reform_effects.csv", "cap_mechanics.csv", "estimates.csv", "event_study.csv", "signs.csv", "notes.json"} <= names
    caps = pd.read_csv(target / "cap_mechanics.csv")
    assert list(caps["stc_renewal_cap"].astype(str)) == ["1", "6", "12", "48", "unbounded"]
    shares = caps["ltc_conditional"].to_numpy()
    assert all(a >= b - 1e-12 for a, b in zip(shares, shares[1:]))
    assert shares[0] > shares[-1]
    notes = json.loads((target / "notes.json").read_text())
    assert notes["coefficient_difference_test"]["t_formula"] == pytest.approx(-1.5534, abs=1e-3)
    effects = pd.read_csv(target / "reform_effects.csv").set_index("measure")
    assert effects.loc["ltc_conditional", "delta"] > 0
