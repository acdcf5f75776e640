import numpy as np
import pytest

from sbmlab.cli import main
from sbmlab.model import read_edge_list, read_labels
from sbmlab.split import read_edge_split


def test_sample_writes_edge_list(tmp_path):
    out = tmp_path / "g.txt"
    labels = tmp_path / "labels.txt"
    code = main(
        ["--n", "60", "--d", "5", "--eps", "0.5", "--seed", "3",
         "--out", str(out), "sample", "--labels-out", str(labels)]
    )
    assert code == 0
    g = read_edge_list(out)
    assert g.n == 60
    lab = read_labels(labels, k=2)
    assert lab.n == 60


def test_sample_null_to_stdout(capsys):
    assert main(["--n", "50", "--d", "4", "--seed", "1", "sample", "--null"]) == 0
    lines = capsys.readouterr().out.splitlines()
    n, m = map(int, lines[0].split())
    assert n == 50 and len(lines) == m + 1


def test_split_writes_three_files(tmp_path):
    prefix = tmp_path / "s"
    code = main(["--n", "80", "--d", "6", "--eta", "0.3", "--seed", "5", "split", "--prefix", str(prefix)])
    assert code == 0
    sp, seed = read_edge_split(f"{prefix}.y1", f"{prefix}.y2", f"{prefix}.meta")
    assert seed == 5
    assert sp.eta == 0.3
    assert sp.y1.n == 80


def test_recover_and_project_rows(tmp_path, capsys):
    assert main(["--n", "200", "--d", "12", "--eps", "0.9", "--seed", "7", "recover", "--method", "spectral"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "method,rate"
    method, rate = out[1].split(",")
    assert method == "spectral" and float(rate) > 0.2

    assert main(["--n", "200", "--d", "12", "--eps", "0.9", "--delta", "0.2", "--seed", "7", "project"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("method,rate_before,rate_after")
    fields = out[1].split(",")
    assert float(fields[2]) > 0.1  # rate preserved after projection


def test_test_verb_byte_stable(tmp_path):
    args = ["--n", "150", "--d", "10", "--eps", "0.6", "--seed", "11", "--trials", "4"]
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(f1), "test", "--no-timing"]) == 0
    assert main(args + ["--out", str(f2), "test", "--no-timing"]) == 0
    assert f1.read_bytes() == f2.read_bytes()
    header = f1.read_text().splitlines()[0]
    assert header == "seed,arm,statistic,threshold,decision,recovery_rate_if_known,wall_time_ms"
    # both arms present
    arms = {line.split(",")[1] for line in f1.read_text().splitlines()[1:]}
    assert arms == {"P", "Q"}


def test_learn_verb(tmp_path, capsys):
    gout = tmp_path / "w.txt"
    assert main(
        ["--n", "300", "--d", "20", "--eps", "0.8", "--seed", "13", "--trials", "3",
         "learn", "--graphon-out", str(gout)]
    ) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "trial,frob_error_sq,ratio_to_kd"
    assert len(lines) == 4
    assert gout.exists()
    from sbmlab.learn import read_graphon

    w = read_graphon(gout)
    assert w.m == 300


def test_ldlr_verb(tmp_path):
    out = tmp_path / "ldlr.csv"
    assert main(["--n", "8", "--d", "4", "--eps", "0.5", "--out", str(out), "ldlr", "--ell", "3"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,d,eps,k,ell,degree,mass,cumulative_norm"
    assert len(lines) == 5


def test_sweep_verb(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(
        ["--n", "200", "--d", "16", "--seed", "17", "--trials", "4",
         "--out", str(out), "sweep", "--grid", "1.0", "--no-timing"]
    ) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("snr,eps,power")
    assert lines[-1].startswith("# grid=1")


def test_sweep_bad_grid():
    assert main(["--n", "100", "--d", "8", "sweep", "--grid", "1.0,oops"]) == 1


def test_check_verb(capsys):
    assert main(["--n", "400", "--d", "20", "--eps", "0.5", "--seed", "19", "--trials", "3", "check"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "max_norm,mean_norm,bound,max_ratio,trials"
    vals = lines[1].split(",")
    assert float(vals[0]) <= float(vals[2])


def test_usage_errors_exit_code_one():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    assert main(["accept", "--suite", "nonsense"]) == 1


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("unknown.key = 1\n")
    with pytest.raises(ValueError):
        main(["--config", str(cfg), "sample"])


def test_test_verb_pipelines(tmp_path):
    # graphon pipeline: above-threshold planted arm separates from the null
    cfg = tmp_path / "g.cfg"
    cfg.write_text(
        "params.n = 300\nparams.d = 60.0\nparams.eps = 0.9\nparams.k = 2\n"
        "pipeline = graphon\ntrials = 6\nseed = 23\nthreshold.quantile = 0.99\n"
    )
    out = tmp_path / "graphon.csv"
    assert main(["--config", str(cfg), "--out", str(out), "test", "--no-timing"]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    power = sum(int(r[4]) for r in rows if r[1] == "P") / 6
    size = sum(int(r[4]) for r in rows if r[1] == "Q") / 6
    assert power >= 0.8 and size <= 0.2

    # bipartite pipeline runs end to end
    cfg2 = tmp_path / "b.cfg"
    cfg2.write_text(
        "params.n = 120\nparams.d = 24.0\nparams.eps = 0.9\nparams.k = 2\n"
        "pipeline = bipartite\ntrials = 4\nseed = 29\n"
    )
    out2 = tmp_path / "bip.csv"
    assert main(["--config", str(cfg2), "--out", str(out2), "test", "--no-timing"]) == 0
    assert len(out2.read_text().splitlines()) == 9

    # pipelines with their own verbs are rejected here
    cfg3 = tmp_path / "l.cfg"
    cfg3.write_text("params.n = 100\nparams.d = 8.0\npipeline = ldlr\n")
    assert main(["--config", str(cfg3), "test"]) == 1


def test_accept_json_wiring(tmp_path, monkeypatch):
    import sbmlab.cli as cli
    from sbmlab.acceptance import CriterionResult

    canned = [
        CriterionResult("C1", True, {"metric_a": 1.0}, 0.1),
        CriterionResult("C2", False, {"metric_b": 2.5}, 0.2),
    ]
    monkeypatch.setattr(cli, "run_acceptance", lambda suite, seed=None: canned)
    out = tmp_path / "report.json"
    code = main(["--out", str(out), "accept", "--suite", "full", "--json"])
    assert code == 2  # one canned criterion fails
    import json

    data = json.loads(out.read_text())
    assert data[0]["criterion"] == "C1" and data[0]["passed"] is True
    assert data[1]["metrics"]["metric_b"] == 2.5

    out2 = tmp_path / "report.csv"
    assert main(["--out", str(out2), "accept", "--suite", "full"]) == 2
    assert out2.read_text().splitlines()[0] == "criterion,status,metric,value"
