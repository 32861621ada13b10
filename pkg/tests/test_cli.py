import csv
import json
import math
from pathlib import Path

import pytest

from monochain import build_matrix, stationary
from monochain.cli import main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

HUBBELL = {
    "model": {"model": "polya_downup", "N": 100, "s": 1, "alpha": [180] * 5},
    "start": [0, 10, 0, 10, 80],
    "epsilon": 0.01,
}

DELTA_MORAN = {
    "model": {
        "model": "moran_general",
        "N": 6,
        "mutation_matrix": [
            [0.50, 0.30, 0.20],
            [0.30, 0.55, 0.15],
            [0.05, 0.00, 0.95],
        ],
    },
    "start": [1, 2, 3],
    "epsilon": 0.01,
}


def _write(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_bounds_reproduces_flagship_numbers(tmp_path, capsys):
    cfg = _write(tmp_path, HUBBELL)
    out_path = tmp_path / "report.json"
    assert main(["bounds", "--config", cfg, "--output", str(out_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["lower_coeff"] == 0.375
    assert doc["upper_coeff"] == 100.0
    assert doc["steps_necessary"] == 401
    assert doc["steps_sufficient"] == 1018
    assert doc["steps_crude"] == 5432
    assert doc["lambda"] == pytest.approx(1 - 1 / 111, abs=1e-12)
    assert json.loads(out_path.read_text()) == doc


@pytest.mark.parametrize("name,necessary,sufficient,crude_steps", [
    ("hubbell.json", 401, 1018, 5432),
    ("moran_standard.json", 516, 1312, 5683),
    ("polya_level.json", 178, 518, 2002),
    ("ehrenfest.json", 321, 935, 3897),
])
def test_sample_configs_reproduce_goldens(capsys, name, necessary, sufficient, crude_steps):
    assert main(["bounds", "--config", str(CONFIG_DIR / name)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["steps_necessary"] == necessary
    assert doc["steps_sufficient"] == sufficient
    assert doc["steps_crude"] == crude_steps


def test_bounds_start_override(tmp_path, capsys):
    cfg = _write(tmp_path, HUBBELL)
    assert main(["bounds", "--config", cfg, "--start", "0,0,0,0,100"]) == 0
    doc = json.loads(capsys.readouterr().out)
    # From the minimal state: |f| = N(1 - p_d) = 80.
    assert doc["lower_coeff"] == 0.5
    assert doc["upper_coeff"] == 80.0


def test_bounds_crude_is_null_for_general_moran(tmp_path, capsys):
    cfg = _write(tmp_path, DELTA_MORAN)
    assert main(["bounds", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["crude_coeff"] is None and doc["steps_crude"] is None
    assert doc["steps_necessary"] <= doc["steps_sufficient"]


def test_bounds_epsilon_above_coefficients(tmp_path, capsys):
    cfg = _write(tmp_path, HUBBELL)
    assert main(["bounds", "--config", cfg, "--epsilon", "200"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["steps_necessary"] == 0 and doc["steps_sufficient"] == 0


def test_exact_curve_csv(tmp_path, capsys):
    doc = {
        "model": {"model": "ehrenfest", "N": 8, "s": 1, "p": [1 / 3, 1 / 3, 1 / 3]},
        "start": [0, 2, 6],
        "n_max": 20,
    }
    cfg = _write(tmp_path, doc)
    out = tmp_path / "curve.csv"
    assert main(["exact", "--config", cfg, "--output", str(out)]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["n", "tv_exact", "lower_bound", "upper_bound", "crude_bound"]
    assert len(rows) == 22
    for n, tv, lo, up, crude in rows[1:]:
        assert float(lo) - 1e-11 <= float(tv) <= float(up) + 1e-11
        assert float(tv) <= float(crude) + 1e-11
    # Determinism: a second run writes byte-identical output.
    first = out.read_text()
    assert main(["exact", "--config", cfg, "--output", str(out)]) == 0
    assert out.read_text() == first


def test_exact_single_row_curve(tmp_path, capsys):
    model = {"model": "ehrenfest", "N": 6, "s": 1, "p": [0.3, 0.3, 0.4]}
    cfg = _write(tmp_path, {"model": model, "start": [0, 0, 6], "n_max": 0})
    assert main(["exact", "--config", cfg]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 2
    from monochain import Ehrenfest

    tm = build_matrix(Ehrenfest(6, 1, (0.3, 0.3, 0.4)))
    pi = stationary(tm)
    assert float(rows[1][1]) == pytest.approx(1 - pi[tm.index[(0, 0, 6)]], abs=1e-10)


def test_exact_rejects_oversized_state_space(tmp_path, capsys):
    cfg = _write(tmp_path, HUBBELL)
    assert main(["exact", "--config", cfg]) == 3
    err = capsys.readouterr().err
    assert "state space too large" in err and "reduce N" in err


def test_couple_summary_and_trajectories(tmp_path, capsys):
    doc = {
        "model": {"model": "polya_level", "N": 6, "s": 2, "alpha": [1.0, 2.0, 1.5]},
        "start": [0, 0, 6],
        "start_upper": [2, 2, 2],
        "seed": 5,
        "replicates": 50,
        "max_steps": 400,
    }
    cfg = _write(tmp_path, doc)
    traj_path = tmp_path / "traj.csv"
    assert main(["couple", "--config", cfg, "--trajectories", str(traj_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["order_violations"] == 0
    assert summary["replicates"] == 50
    assert 0 <= summary["marginal_tv_x"] <= 1
    assert summary["coalesced"] >= 1
    rows = list(csv.reader(traj_path.read_text().splitlines()))
    assert rows[0] == ["replicate", "step", "x", "y", "coalesced"]
    assert rows[1][:3] == ["0", "0", "0;0;6"]

    # Same config and seed: identical summary.
    assert main(["couple", "--config", cfg]) == 0
    assert json.loads(capsys.readouterr().out) == summary


def test_couple_contraction_statistics(tmp_path, capsys):
    doc = {
        "model": {"model": "polya_downup", "N": 8, "s": 1, "alpha": [1.0, 1.5, 0.5]},
        "start": [0, 0, 8],
        "start_upper": [3, 3, 2],
        "seed": 11,
        "replicates": 400,
        "max_steps": 300,
    }
    cfg = _write(tmp_path, doc)
    assert main(["couple", "--config", cfg]) == 0
    summary = json.loads(capsys.readouterr().out)
    # One-step gap statistics agree with the eigenvalue contraction.
    gap = abs(summary["contraction_gap_mean"] - summary["contraction_gap_expected"])
    assert gap <= 3 * summary["contraction_gap_se"]


def test_couple_equal_starts(tmp_path, capsys):
    doc = {
        "model": {"model": "ehrenfest", "N": 6, "s": 1, "p": [0.3, 0.3, 0.4]},
        "start": [1, 2, 3],
        "start_upper": [1, 2, 3],
        "replicates": 10,
        "max_steps": 50,
    }
    cfg = _write(tmp_path, doc)
    assert main(["couple", "--config", cfg]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["coalesced"] == 10
    assert summary["coalescence_quantiles"]["q100"] == 0.0


def test_couple_rejects_unordered_pair(tmp_path, capsys):
    doc = {
        "model": {"model": "ehrenfest", "N": 6, "s": 1, "p": [0.3, 0.3, 0.4]},
        "start": [2, 2, 2],
        "start_upper": [0, 0, 6],
        "replicates": 5,
        "max_steps": 10,
    }
    cfg = _write(tmp_path, doc)
    assert main(["couple", "--config", cfg]) == 2
    assert "not ordered" in capsys.readouterr().err


def test_spectral_standard_choice(tmp_path, capsys):
    doc = {
        "model": {"model": "moran_standard", "N": 100, "m": 0.7, "p": [0.2] * 5},
        "start": [0, 10, 0, 10, 80],
    }
    cfg = _write(tmp_path, doc)
    assert main(["spectral", "--config", cfg]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lambda"] == 0.993
    assert out["c1"] == 1.0
    assert out["conditions"]["weak_domination_positive_eigenvector"] is True


def test_spectral_delta_construction(tmp_path, capsys):
    cfg = _write(tmp_path, DELTA_MORAN)
    assert main(["spectral", "--config", cfg]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["conditions"]["strict_domination"] is True
    assert out["conditions"]["weak_domination_irreducible"] is True


def test_spectral_failing_matrix_exits_nonzero(tmp_path, capsys):
    doc = {
        "model": {
            "model": "moran_general",
            "N": 6,
            "mutation_matrix": [
                [0.2, 0.4, 0.4],
                [0.3, 0.4, 0.3],
                [0.5, 0.1, 0.4],
            ],
        },
        "start": [1, 2, 3],
    }
    cfg = _write(tmp_path, doc)
    assert main(["spectral", "--config", cfg]) == 3
    assert "monotonicity" in capsys.readouterr().err


def test_spectral_rejects_urn_models(tmp_path, capsys):
    cfg = _write(tmp_path, HUBBELL)
    assert main(["spectral", "--config", cfg]) == 2


def test_validation_failures_exit_2(tmp_path, capsys):
    bad1 = _write(tmp_path, {"model": {"model": "nope", "N": 3}, "start": [1, 2]}, "b1.json")
    assert main(["bounds", "--config", bad1]) == 2
    capsys.readouterr()
    bad2 = _write(tmp_path, {"model": HUBBELL["model"], "start": [1, 1, 1]}, "b2.json")
    assert main(["bounds", "--config", bad2]) == 2
    capsys.readouterr()
    bad3 = _write(tmp_path, dict(HUBBELL, epsilon=-1), "b3.json")
    assert main(["bounds", "--config", bad3]) == 2
    capsys.readouterr()
    assert main(["bounds", "--config", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()
    bad4 = _write(
        tmp_path,
        {"model": {"model": "polya_level", "N": 5, "s": 1, "alpha": 180}, "start": [1, 4]},
        "b4.json",
    )
    assert main(["bounds", "--config", bad4]) == 2
    capsys.readouterr()
    bad5 = _write(tmp_path, dict(HUBBELL, start=[0, 10.5, 0, 9.5, 80]), "b5.json")
    assert main(["bounds", "--config", bad5]) == 2


def test_json_numbers_are_rounded_to_12_significant_digits(tmp_path, capsys):
    cfg = _write(tmp_path, HUBBELL)
    assert main(["bounds", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    crude = doc["crude_coeff"]
    assert crude == float(f"{crude:.12g}")
    assert abs(crude - 2.2186e19) / 2.2186e19 < 1e-3
