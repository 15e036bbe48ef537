import json
import re
import time

import numpy as np
import pytest

from qsd_bounds import StateSet, pcup, random_state_set, save_state_set
from qsd_bounds.cli import main
from qsd_bounds.experiment import ExperimentConfig, run_cell, run_experiment, to_csv


def values(out: str) -> dict[str, float]:
    found = {}
    for line in out.splitlines():
        m = re.match(r"^(\w+)\s+(-?[\d.]+(?:e[-+]\d+)?)", line)
        if m:
            found[m.group(1)] = float(m.group(2))
    return found


@pytest.fixture
def files(tmp_path, orthogonal_pair, identical_pair):
    paths = {}
    for name, s in [("orth", orthogonal_pair), ("ident", identical_pair), ("rand", random_state_set(3, 3, 2, 0))]:
        paths[name] = tmp_path / f"{name}.json"
        save_state_set(s, paths[name])
    paths["bad"] = tmp_path / "bad.json"
    paths["bad"].write_text('{"dim": 2, "states": [{"density": {"re": [[1,0],[0,0]], "im": [[0,0],[0,0]]}}]}')
    paths["invalid"] = tmp_path / "invalid.json"
    save_state_set(StateSet([0.6, 0.6], [np.eye(2) / 2, np.eye(2) / 2]), paths["invalid"])
    return paths


def test_validate(files, capsys):
    assert main(["validate", str(files["orth"])]) == 0
    assert main(["validate", str(files["invalid"])]) == 2
    assert "prior_sum" in capsys.readouterr().out


def test_bounds_me_orthogonal(files, capsys, tmp_path):
    out_json = tmp_path / "report.json"
    assert main(["bounds", "me", str(files["orth"]), "--json", str(out_json)]) == 0
    v = values(capsys.readouterr().out)
    for key in ("pcup", "pcup_prime", "qiu", "pclp", "srm"):
        assert v[key] == pytest.approx(1.0, abs=1e-12)
    doc = json.loads(out_json.read_text())
    assert doc["pcup"] == pytest.approx(1.0)
    assert doc["oracle_converged"]


def test_bounds_me_identical(files, capsys):
    assert main(["bounds", "me", str(files["ident"])]) == 0
    v = values(capsys.readouterr().out)
    assert v["pcup"] == pytest.approx(0.7, abs=1e-12)
    assert v["pclp"] == pytest.approx(0.7, abs=1e-12)
    assert v["srm"] == pytest.approx(0.58, abs=1e-12)


def test_malformed_file(files, capsys):
    assert main(["bounds", "me", str(files["bad"])]) == 2
    assert "states[0].prior" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["bounds", "me", str(tmp_path / "nope.json")]) == 2


def test_bad_arguments(files, capsys):
    assert main(["bounds", "inc", str(files["orth"])]) == 2
    assert main(["bounds", "inc", str(files["orth"]), "--p", "1.5"]) == 2
    assert main(["oracle", "inc", str(files["orth"])]) == 2
    assert main(["experiment", "--M", "2", "--R", "3", "--N", "2", "--trials", "1"]) == 2


def test_bounds_inc_orthogonal(files, capsys):
    assert main(["bounds", "inc", str(files["orth"]), "--p", "0.25"]) == 0
    v = values(capsys.readouterr().out)
    assert v["pcuip"] == pytest.approx(0.75, abs=1e-12)
    assert v["pclip"] == pytest.approx(0.75, abs=1e-12)


def test_bounds_inc_full_rate(files, capsys):
    assert main(["bounds", "inc", str(files["rand"]), "--p", "1"]) == 0
    v = values(capsys.readouterr().out)
    assert v["pcuip"] == pytest.approx(0, abs=1e-12)
    assert v["pclip"] == pytest.approx(0, abs=1e-12)


def test_bounds_inc_zero_rate(files, capsys):
    assert main(["bounds", "inc", str(files["rand"]), "--p", "0", "--iters", "5"]) == 0
    out = capsys.readouterr().out
    v = values(out)
    m = re.search(r"oracle\s+([\d.]+) \.\. ([\d.]+)", out)
    primal = float(m.group(1))
    assert primal - 1e-9 <= v["pcuip"] <= pcup(random_state_set(3, 3, 2, 0))[0] + 1e-12
    assert out.count("a=") == 7


def test_oracle_commands(files, capsys, tmp_path):
    povm_path = tmp_path / "povm.json"
    assert main(["oracle", "me", str(files["ident"]), "--tol", "1e-9", "--povm-out", str(povm_path)]) == 0
    v = values(capsys.readouterr().out)
    assert v["primal"] == pytest.approx(0.7, abs=1e-9)
    assert povm_path.exists()
    assert main(["oracle", "inc", str(files["ident"]), "--p", "0.1"]) == 0
    v = values(capsys.readouterr().out)
    assert v["primal"] == pytest.approx(0.63, abs=1e-6)


def test_oracle_non_convergence_exit_code(files, capsys):
    assert main(["oracle", "me", str(files["rand"]), "--tol", "1e-15", "--max-iters", "5"]) == 1


# --- experiments ----------------------------------------------------------------

def test_binary_cell_exact():
    cell = run_cell(ExperimentConfig(M=2, R=1, N=2, trials=50, seed=1))
    assert cell.mean_rel_err["pcup"] <= 1e-8
    assert cell.mean_rel_err["qiu"] <= 1e-8
    assert cell.violations == 0


def test_experiment_deterministic(tmp_path, capsys):
    args = ["experiment", "--M", "2", "3", "--R", "1", "--trials", "4", "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "# qsd-bounds v1"
    assert "N=3" in lines[2]
    header = lines[3].split(",")
    assert header[:3] == ["M", "R", "N"]
    assert "mean_rel_err_pcuip" in header and "wall_clock_s" not in header
    assert len(lines) == 6


def test_experiment_parallel_matches_serial():
    cfg = ExperimentConfig(M=3, R=1, trials=4, seed=5)
    assert to_csv([run_cell(cfg, jobs=2)]) == to_csv([run_cell(cfg)])


def test_timing_column():
    text = to_csv(run_experiment([2], [1], trials=2), timing=True)
    assert text.splitlines()[3].endswith("wall_clock_s")


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(M=2, R=1, trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(M=2, R=1, p_range=(0.3, 0.2))
    assert ExperimentConfig(M=4, R=1).N == 4
    assert ExperimentConfig(M=2, R=3).N == 4


def test_qiu_trend_cell():
    cell = run_cell(ExperimentConfig(M=3, R=2, N=4, trials=100, seed=0))
    assert cell.mean_rel_err["pcup"] <= cell.mean_rel_err["qiu"]
    assert cell.violations == 0


def test_pcup_scales_cubically():
    def median_time(n, reps=7):
        s = random_state_set(n, 4, n, 0)
        times = []
        for _ in range(reps):
            t = time.perf_counter()
            pcup(s)
            times.append(time.perf_counter() - t)
        return float(np.median(times))

    median_time(64, 2)  # warm up
    assert median_time(128) <= 10 * median_time(64)
