import json

import numpy as np
import pytest

from jacobi_markov.cli import config_hash, main, parse_grid
from jacobi_markov.errors import UsageError


def _only_run(root, kind):
    runs = [p for p in (root / kind).iterdir() if p.is_dir()]
    assert len(runs) == 1
    return runs[0]


def _manifest(run):
    return json.loads((run / "manifest.json").read_text())


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("-1:1:5"), [-1, -0.5, 0, 0.5, 1])
    np.testing.assert_allclose(parse_grid("0.1, 0.2"), [0.1, 0.2])
    assert parse_grid("").size == 0
    with pytest.raises(UsageError):
        parse_grid("a:b")


def test_config_hash_ignores_output_keys():
    base = {"gamma": 1.0, "nmax": 4}
    assert config_hash(base) == config_hash({**base, "out": "x", "threads": 3, "deterministic_paths": True})
    assert config_hash(base) != config_hash({**base, "nmax": 5})


def test_verify_gegenbauer_passes(tmp_path, capsys):
    code = main(["verify", "gegenbauer", "--gamma", "1", "--nmax", "6", "--out", str(tmp_path)])
    assert code == 0
    run = _only_run(tmp_path, "gegenbauer")
    man = _manifest(run)
    assert man["exit_code"] == 0 and man["all_pass"]
    assert man["manifest_version"] == 1
    assert (run / "summary.csv").read_text().splitlines()[0] == "identity_id,params,grid,max_abs_err,max_rel_err,tolerance,pass"
    assert "PASS gegenbauer" in capsys.readouterr().out


def test_invalid_parameters_exit_two(tmp_path):
    assert main(["verify", "gasper", "--alpha", "0.4", "--beta", "0.5", "--out", str(tmp_path)]) == 2
    man = json.loads((tmp_path / "gasper").glob("*/manifest.json").__next__().read_text())
    assert "invalid configuration" in man["error"]


def test_alpha_without_beta_exit_two(tmp_path):
    assert main(["verify", "gasper", "--alpha", "2", "--out", str(tmp_path)]) == 2


def test_empty_grid_exit_two(tmp_path):
    assert main(["scan", "kernel-positivity", "--grid", "", "--out", str(tmp_path)]) == 2


def test_unknown_argument_exit_two(tmp_path):
    assert main(["verify", "nonsense", "--out", str(tmp_path)]) == 2


def test_failing_check_exit_one(tmp_path):
    # a tolerance below the rounding floor makes the comparison fail
    code = main(["verify", "gasper", "--alpha", "2", "--beta", "0.5", "--ell", "1", "--nmax", "8", "--tol", "1e-300",
                 "--out", str(tmp_path)])
    assert code == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma": 2.5, "nmax": 3}))
    out = tmp_path / "out"
    assert main(["verify", "gegenbauer", "--config", str(cfg), "--nmax", "5", "--out", str(out)]) == 0
    man = _manifest(_only_run(out, "gegenbauer"))
    assert man["config"]["gamma"] == 2.5
    assert man["config"]["nmax"] == 5


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gama": 2.5}))
    assert main(["verify", "gegenbauer", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_deterministic_paths_name(tmp_path):
    args = ["verify", "gegenbauer", "--gamma", "1", "--nmax", "3", "--deterministic-paths", "--out", str(tmp_path)]
    assert main(args) == 0
    run = _only_run(tmp_path, "gegenbauer")
    assert run.name.startswith("cfg-")


def test_table_eigenvalues(tmp_path):
    assert main(["table", "eigenvalues", "--alpha", "2", "--beta", "0.5", "--a", "0.3", "--nmax", "10", "--out", str(tmp_path)]) == 0
    run = _only_run(tmp_path, "eigenvalues")
    assert (run / "table.csv").read_text().splitlines()[0] == "n,lambda_formula,lambda_matrix,abs_diff"


def test_table_trace_marks_boundary(tmp_path):
    assert main(["table", "trace", "--gamma", "1", "--nmax", "256", "--out", str(tmp_path)]) == 0
    rows = (_only_run(tmp_path, "trace") / "table.csv").read_text().splitlines()[1:]
    assert sum(r.split(",")[2] == "true" for r in rows) == 1


def test_scan_negativity_requires_ell(tmp_path):
    assert main(["scan", "kernel-negativity-ell", "--ell", "0", "--out", str(tmp_path)]) == 2
    assert main(["scan", "kernel-negativity-ell", "--ell", "1", "--grid=-0.9:0.9:4", "--out", str(tmp_path)]) == 0


def test_biangle_suite_bad_pairs(tmp_path):
    assert main(["verify", "biangle", "--pairs", "0", "--out", str(tmp_path)]) == 2
