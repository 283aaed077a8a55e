import json
import subprocess
import sys

import numpy as np
import pytest

from kappaql import kappa_estimate
from kappaql.cli import EXIT_INPUT, EXIT_NUMERICAL, InputError, load_csv, main, read_sim_config


@pytest.fixture
def csv_file(tmp_path, rng):
    X = rng.standard_normal((25, 3))
    X[:, 2] = np.round(X[:, 0] ** 2, 2)
    path = tmp_path / "data.csv"
    np.savetxt(path, X, delimiter=",", header="a,b,c", comments="")
    return path, X


def run_json(argv, capsys):
    code = main(argv + ["--format", "json"])
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def test_load_csv_basic(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x,y\n1,2\n3,4\n")
    ds = load_csv(p)
    assert (ds.n, ds.p) == (2, 2)
    np.testing.assert_array_equal(ds.column("y"), [2.0, 4.0])


def test_load_csv_no_header_and_delimiter(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("1;2;3\n4;5;6\n")
    ds = load_csv(p, delimiter=";", has_header=False)
    assert list(ds.columns) == ["col1", "col2", "col3"]


def test_ragged_row_reports_line(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("x,y\n1,2\n3\n")
    with pytest.raises(InputError, match=r":3: expected 2 fields"):
        load_csv(p)


def test_na_policies(tmp_path):
    p = tmp_path / "na.csv"
    p.write_text("x,y\n1,\n")
    with pytest.raises(InputError, match="missing"):
        load_csv(p)
    assert load_csv(p, na_policy="drop-row").n == 0


def test_zero_rows_downstream_error(tmp_path, capsys):
    p = tmp_path / "na.csv"
    p.write_text("x,y\n1,\n")
    code = main(["corr", str(p), "--col-x", "x", "--col-y", "y", "--na-policy", "drop-row"])
    assert code == EXIT_INPUT
    assert "at least 2" in capsys.readouterr().err


def test_unreadable_and_duplicate_header(tmp_path):
    with pytest.raises(InputError, match="cannot read"):
        load_csv(tmp_path / "missing.csv")
    p = tmp_path / "d.csv"
    p.write_text("x,x\n1,2\n")
    with pytest.raises(InputError, match="duplicate"):
        load_csv(p)


def test_corr_delegates(csv_file, capsys):
    path, X = csv_file
    code, rep, _ = run_json(["corr", str(path), "--col-x", "a", "--col-y", "c"], capsys)
    assert code == 0
    est = kappa_estimate(X[:, 0], X[:, 2])
    assert rep["tau_corr"] == est.tau_corr and rep["tau_cov"] == est.tau_cov
    assert rep["gamma3"] == est.gamma3 and rep["gamma4"] == est.gamma4
    assert set(rep["wald"]) == {"statistic", "df", "p_value", "boundary"}
    assert rep["se_null"] == pytest.approx((0.4456 / 25) ** 0.5)
    assert rep["quasi_lr"]["p_value"] > 0


def test_corr_flags(csv_file, capsys):
    path, _ = csv_file
    _, a, _ = run_json(["corr", str(path), "--col-x", "a", "--col-y", "b"], capsys)
    _, b, _ = run_json(["corr", str(path), "--col-x", "a", "--col-y", "b", "--c", "0.2",
                        "--variance-denominator", "n-2"], capsys)
    assert b["c"] == 0.2 and b["variance_denominator"] == "n-2"
    assert b["wald"]["statistic"] == pytest.approx(23 * a["tau_corr"] ** 2 / 0.2)
    assert a["lrt"] == b["lrt"]


def test_json_round_trip_and_determinism(csv_file, capsys):
    path, _ = csv_file
    main(["matrix", str(path), "--format", "json"])
    first = capsys.readouterr().out
    main(["matrix", str(path), "--format", "json"])
    assert capsys.readouterr().out == first
    rep = json.loads(first)
    assert json.dumps(rep, indent=2) == first.rstrip("\n")
    assert len(rep["tests"]) == 3 and rep["names"] == ["a", "b", "c"]


def test_table_output(csv_file, capsys):
    path, _ = csv_file
    assert main(["corr", str(path), "--col-x", "a", "--col-y", "b"]) == 0
    out = capsys.readouterr().out
    assert "tau_corr" in out and "wald.p_value" in out


def test_unknown_column_and_degenerate(tmp_path, csv_file, capsys):
    path, _ = csv_file
    assert main(["corr", str(path), "--col-x", "a", "--col-y", "zz"]) == EXIT_INPUT
    assert "unknown column" in capsys.readouterr().err
    p = tmp_path / "const.csv"
    p.write_text("x,y,z\n1,5,1\n2,5,3\n3,5,2\n")
    assert main(["corr", str(p), "--col-x", "x", "--col-y", "y"]) == EXIT_NUMERICAL
    assert main(["matrix", str(p)]) == EXIT_NUMERICAL
    assert "column 1" in capsys.readouterr().err


def test_fit_report(csv_file, capsys):
    path, _ = csv_file
    code, rep, _ = run_json(["fit", str(path), "--response", "c", "--predictors", "a,b"], capsys)
    assert code == 0 and rep["converged"]
    assert len(rep["theta"]) == 2 and len(rep["hessian"]) == 2
    assert rep["gradient_norm"] <= 1e-8 and rep["feasibility_margin"] > 0
    assert rep["trace"][0]["step"] == 0.0


def test_fit_non_convergence_exit(csv_file, capsys):
    path, _ = csv_file
    code, rep, err = run_json(["fit", str(path), "--response", "c", "--predictors", "a",
                               "--max-iter", "0"], capsys)
    assert code == EXIT_NUMERICAL
    assert rep["converged"] is False and len(rep["trace"]) == 1
    assert "did not converge" in err


def test_simulate_config(tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("# tiny run\ngenerator = continuous_gaussian\nn_grid = 10, 20\n"
                   "replicates = 100\nseed = 5\nstudies = calibrate, size, concentration\n")
    code, rep, _ = run_json(["simulate", str(cfg)], capsys)
    assert code == 0
    assert rep["studies"] == ["calibrate", "size", "concentration"]
    assert set(rep["type_i_error"]) == {"wald:10", "lrt:10", "wald:20", "lrt:20"}
    assert set(rep["concentration_table"]) == {"0.05", "0.1", "0.2"}
    code, rep2, _ = run_json(["simulate", str(cfg), "--seed", "6"], capsys)
    assert rep2["seed"] == 6 and rep2["c_hat"] != rep["c_hat"]


def test_simulate_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    for text in ("bogus = 1\n", "replicates = ten\n", "replicates = 50\n",
                 "studies = everything\n"):
        bad.write_text(text)
        with pytest.raises(InputError):
            read_sim_config(bad)
    assert main(["simulate", str(bad)]) == EXIT_INPUT
    assert main(["simulate", str(tmp_path / "none.cfg")]) == EXIT_INPUT


def test_bad_seed_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit):
        main(["simulate", "x.cfg", "--seed", str(2 ** 64)])


def test_module_entry_point(csv_file):
    path, _ = csv_file
    out = subprocess.run([sys.executable, "-m", "kappaql", "corr", str(path), "--col-x", "a",
                          "--col-y", "b", "--format", "json"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["command"] == "corr"
