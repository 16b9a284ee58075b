import json
import math

import numpy as np
import pytest

from bosegrid import cli
from bosegrid.cli import Dataset, main, read_dataset, write_dataset


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def load(tmp_path, capsys, *argv, fmt="csv"):
    path = tmp_path / f"out.{fmt}"
    code, _, err = run(capsys, *argv, "--format", fmt, "--out", str(path))
    assert code == 0, err
    return read_dataset(path), path.read_bytes()


def test_table1(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "table1", "--n-phi", "2,32,64")
    de = ds.column("delta_e_over_m")
    assert de[0] == pytest.approx(0.0, abs=1e-12)
    assert round(de[1], 3) == 42.319 and round(de[2], 3) == 89.396
    assert ds.column("n_b")[1:] == [9, 27]
    assert ds.params["n_phi"] == [2, 32, 64]


def test_table1_gate(capsys):
    code, _, err = run(capsys, "table1", "--n-phi", "512")
    assert code == 2 and "--large-ok" in err


def test_errors_has_all_curves(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "errors", "--n-phi", "64", "--n-max", "10")
    assert {"eps_w", "eps_d", "eps_pi", "eps_phipi", "eps_c"} <= set(ds.columns)
    assert ds.column("n") == list(range(11))
    assert all(v >= 0 for v in ds.column("eps_c"))


def test_squeeze_fit(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "squeeze", fmt="json")
    assert ds.summary["b"] == pytest.approx(-0.477, rel=0.15)
    assert ds.summary["r2"] > 0.999


def test_aho_scan(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "aho", "--masses", "1,4,6", "--eps", "1e-6", "--kf-eps", "1e-4")
    assert ds.summary["optimal_mass"][0]["mass"] in (4.0, 6.0)
    assert 4.0 <= ds.summary["sampling"][0]["k_over_f"] <= 6.0


def test_twosite_scan(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "twosite", "--masses", "1.5", "--eps", "1e-6", "--kf-eps", "1e-4",
                 "--n-cut", "24")
    assert 1.2 <= ds.summary["sampling"][0]["k_over_f"] <= 2.0
    assert ds.summary["energy"] < 0


def test_counterexample(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "counterexample", fmt="json")
    s = ds.summary
    assert 0.3 <= s["high_weight_30"] <= 0.7 and 0.1 <= s["high_weight_40"] <= 0.35
    assert s["fft_error"] < 1e-12
    assert sum(ds.column("p_f")) == pytest.approx(1.0, abs=1e-4)


def test_qpe_eigenstate(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "qpe-demo", "--n-phi", "64", "--state", "eig:5")
    p = ds.column("p")
    assert p[5] == pytest.approx(1.0, abs=1e-12)
    assert len(p) == 128
    assert ds.summary["lower_ok"] and ds.summary["upper_ok"]


def test_qpe_shots_need_seed(capsys):
    code, _, err = run(capsys, "qpe-demo", "--shots", "100")
    assert code == 2 and "--seed" in err
    code, _, _ = run(capsys, "qpe-demo", "--state", "random")
    assert code == 2


def test_qpe_random_with_shots(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "qpe-demo", "--n-phi", "32", "--state", "random:20", "--shots", "500",
                 "--seed", "11")
    assert sum(ds.column("counts")) == 500


@pytest.mark.parametrize("argv", [
    ["table1", "--n-phi", "3"],
    ["qpe-demo", "--n-phi", "48"],
    ["qpe-demo", "--state", "eig:99"],
    ["qpe-demo", "--state", "bogus"],
    ["advise", "--backend", "histogram"],
    ["table1", "--n-phi", "x"],
    ["nonsense"],
])
def test_invalid_arguments_exit_two(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_numerical_failure_exit_three(capsys, monkeypatch):
    def boom(args):
        raise ArithmeticError("did not converge")

    monkeypatch.setattr(cli, "cmd_table1", boom)
    code, _, err = run(capsys, "table1")
    assert code == 3 and "numerical failure" in err


def test_advise_harmonic(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "advise", "--mass", "3", fmt="json")
    assert ds.summary["verdict"] == "accepted"
    assert ds.column("action")[-1] == "Accept"
    assert 1 / 1.3 <= ds.summary["final"]["mass"] <= 1.3


def test_advise_counterexample(tmp_path, capsys):
    ds, _ = load(tmp_path, capsys, "advise", "--backend", "counterexample", "--eps", "1e-3", "--f-c", "0.8")
    assert "GrowForBosons" in ds.column("action")


def test_advise_from_histograms(tmp_path, capsys):
    live, _ = load(tmp_path, capsys, "advise", "--mass", "3", fmt="json")
    rounds = live.summary["transcript"]["rounds"]
    records = [{k: r[k] for k in ("grid", "p_phi", "p_kappa", "p_boson")} for r in rounds]
    hist = tmp_path / "hist.json"
    hist.write_text(json.dumps(records))
    ds, _ = load(tmp_path, capsys, "advise", "--backend", "histogram", "--histograms", str(hist), fmt="json")
    assert ds.summary["verdict"] == "accepted"
    assert ds.column("action") == live.column("action")


def test_advise_shots_need_seed(capsys):
    assert run(capsys, "advise", "--shots", "100")[0] == 2


@pytest.mark.parametrize("argv", [
    ["table1", "--n-phi", "16,32"],
    ["qpe-demo", "--n-phi", "16", "--state", "random", "--shots", "64", "--seed", "3"],
    ["advise", "--mass", "3", "--shots", "20000", "--seed", "4", "--eps", "1e-3"],
])
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_byte_identical_reruns(tmp_path, capsys, argv, fmt):
    a = load(tmp_path, capsys, *argv, fmt=fmt)[1]
    b = load(tmp_path, capsys, *argv, fmt=fmt)[1]
    assert a == b


def test_stdout_matches_file(tmp_path, capsys):
    _, data = load(tmp_path, capsys, "table1", "--n-phi", "8")
    code, out, _ = run(capsys, "table1", "--n-phi", "8")
    assert code == 0 and out.encode() == data


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_dataset_roundtrip(tmp_path, fmt):
    ds = Dataset("demo", {"x": [1, 2], "s": "a b"}, ["i", "v", "flag", "name"],
                 [[0, 0.1, True, "p,q"], [1, math.pi, False, "r"], [2, np.float64(1e-300), True, "s"]],
                 {"fit": 1.5})
    path = tmp_path / f"d.{fmt}"
    write_dataset(ds, path, fmt)
    back = read_dataset(path)
    assert back.command == "demo" and back.params == {"x": [1, 2], "s": "a b"}
    assert back.summary == {"fit": 1.5}
    assert back.columns == ds.columns
    assert back.rows == [[0, 0.1, True, "p,q"], [1, math.pi, False, "r"], [2, 1e-300, True, "s"]]


def test_read_rejects_foreign_files(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_dataset(p)
    p.write_text('{"schema": "other"}')
    with pytest.raises(ValueError):
        read_dataset(p)
