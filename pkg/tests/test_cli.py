import csv
import json
import subprocess
import sys

import pytest

from mrf_changepoint.artifacts import read_dataset_csv
from mrf_changepoint.cli import main


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--p", "15", "--T", "400", "--tau-star", "200", "--density", "0.15",
                 "--similarity", "0", "--seed", "7", "--out", str(out)]) == 0
    return out


def _load(path):
    doc = json.loads(path.read_text())
    doc.pop("runtime_seconds", None)
    return doc


def test_simulate_outputs(sim, tmp_path):
    assert {"dataset.csv", "truth.json", "scenario.json", "config.json"} <= {
        p.name for p in sim.iterdir()}
    data = read_dataset_csv(sim / "dataset.csv")
    assert data.values.shape == (400, 15)
    for name in ("truth.json", "scenario.json", "config.json"):
        assert json.loads((sim / name).read_text())["schema_version"] == 1
    again = tmp_path / "again"
    main(["simulate", "--p", "15", "--T", "400", "--tau-star", "200", "--density", "0.15",
          "--similarity", "0", "--seed", "7", "--out", str(again)])
    assert (again / "dataset.csv").read_bytes() == (sim / "dataset.csv").read_bytes()


def test_simulate_community(tmp_path):
    assert main(["simulate", "--community-table6", "--T", "1500", "--tau-star", "750",
                 "--burn-in", "20", "--thin", "1", "--out", str(tmp_path)]) == 0
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert truth["tau_star"] == 750 and len(truth["groups"]) == 50
    assert read_dataset_csv(tmp_path / "dataset.csv").values.shape == (1500, 50)


def test_scan_domain_contract(sim, tmp_path):
    assert main(["scan", "--input", str(sim / "dataset.csv"), "--kl", "60", "--ku", "60",
                 "--step", "20", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "scan.json").read_text())
    assert 60 <= doc["tau_hat"] <= 340
    with open(tmp_path / "curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["tau"]) for r in rows] == list(range(60, 341, 20))


def test_fast_scan_threads_and_stage2(sim, tmp_path):
    docs = []
    for threads in ("1", "8"):
        out = tmp_path / threads
        assert main(["fast-scan", "--input", str(sim / "dataset.csv"), "--stage1-step", "10",
                     "--stage2-halfwidth", "30", "--stage2-step", "3", "--bandwidth", "15",
                     "--threads", threads, "--out", str(out)]) == 0
        docs.append(_load(out / "scan.json"))
    assert docs[0] == docs[1]
    assert len(docs[0]["stage2"]["grid"]) == 21
    assert docs[0]["stage1"]["bandwidth"] == 15.0
    assert (tmp_path / "1" / "stage1_curve.csv").exists()


def test_stability_and_metrics(sim, tmp_path):
    assert main(["stability", "--input", str(sim / "dataset.csv"), "--start", "1", "--end", "200",
                 "--bootstrap", "50", "--threshold", "0.9", "--lambda-policy", "fixed",
                 "--lam", "0.02", "--out", str(tmp_path / "st")]) == 0
    doc = json.loads((tmp_path / "st" / "stability.json").read_text())
    assert doc["n_bootstrap"] == 50
    with open(tmp_path / "st" / "frequencies.csv") as fh:
        assert {r["n_bootstrap"] for r in csv.DictReader(fh)} == {"50"}
    assert (tmp_path / "st" / "stable_edges.csv").exists()
    est = {"schema_version": 1, "tau_hat": 190,
           "theta1": json.loads((sim / "truth.json").read_text())["theta1"],
           "theta2": {"p": 15, "entries": []}}
    (tmp_path / "e.json").write_text(json.dumps(est))
    assert main(["metrics", "--estimate", str(tmp_path / "e.json"), "--truth",
                 str(sim / "truth.json"), "--out", str(tmp_path / "m")]) == 0
    rep = json.loads((tmp_path / "m" / "metrics.json").read_text())
    assert rep["first"]["sensitivity"] == 1 and rep["second"]["sensitivity"] == 0
    assert rep["changepoint"]["abs_error"] == 10


def test_impute_command(tmp_path):
    (tmp_path / "v.csv").write_text("date,a,b,c,d\n2001-01-01,1,NA,0,1\n2001-01-02,0,1,1,0\n"
                                    "2001-01-03,1,0,NA,0\n")
    (tmp_path / "p.csv").write_text("seat,start,end,party\na,2000-01-01,2002-01-01,X\n"
                                    "b,2000-01-01,2002-01-01,X\nc,2000-01-01,2002-01-01,Y\n"
                                    "d,2000-01-01,2002-01-01,Y\n")
    assert main(["impute", "--input", str(tmp_path / "v.csv"), "--parties", str(tmp_path / "p.csv"),
                 "--strategy", "own-party-majority", "--out", str(tmp_path / "o")]) == 0
    text = (tmp_path / "o" / "dataset.csv").read_text()
    assert "NA" not in text
    d = read_dataset_csv(tmp_path / "o" / "dataset.csv")
    assert d.values[0].tolist() == [1, 1, 0, 1] and d.values[2].tolist() == [1, 0, 0, 0]


def test_exit_codes(sim, tmp_path):
    assert main(["scan", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 3
    assert main(["scan", "--input", str(sim / "dataset.csv"), "--kl", "300", "--ku", "300",
                 "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("time,a,b\n1,0,2\n2,1,1\n")
    assert main(["scan", "--input", str(bad), "--out", str(tmp_path)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["scan"])
    assert exc.value.code == 2


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MRF_CP_OUTPUT_DIR", str(tmp_path / "envout"))
    assert main(["simulate", "--p", "4", "--T", "20", "--tau-star", "10", "--density", "0.5",
                 "--burn-in", "10", "--thin", "1"]) == 0
    assert (tmp_path / "envout" / "dataset.csv").exists()


def test_python_fallback_backend_selected(tmp_path):
    code = ("import mrf_changepoint.kernels as k, numpy as np;"
            "from mrf_changepoint import *;"
            "print(k.BACKEND);"
            "s=make_ising_spec();t=random_network(4,0.5,seed=1);"
            "print(gibbs_sample(s,t,5,10,1,seed=2).sum())")
    env = {"MRF_CP_BACKEND": "python", "PATH": "/usr/bin:/bin"}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env,
                         check=True).stdout.split()
    ref = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"PATH": "/usr/bin:/bin"}, check=True).stdout.split()
    assert out[0] == "python"
    assert out[1] == ref[1]
