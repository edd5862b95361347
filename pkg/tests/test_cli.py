import json
import subprocess
import sys

import pytest

from interference_lab.cli import main
from interference_lab.network import read_network


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def graph10(tmp_path, capsys):
    f = tmp_path / "g10.edges"
    assert main(["gen-graph", "--kind", "k-regular", "--n", "10", "--k", "3", "--seed", "5", "--out", str(f)]) == 0
    capsys.readouterr()
    return f


def test_gen_graph(tmp_path, capsys):
    f = tmp_path / "g.edges"
    code, _, err = run(["gen-graph", "--kind", "k-regular", "--n", "100", "--k", "4", "--seed", "7", "--out", str(f)], capsys)
    assert code == 0
    assert "edges=200" in err and "d_max=4" in err
    assert read_network(f).num_edges == 200


def test_gen_graph_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen-graph", "--n", "10", "--k", "3", "--seed", "1"])
    assert exc.value.code == 1
    code, _, err = run(["gen-graph", "--n", "5", "--k", "3", "--seed", "1", "--out", str(tmp_path / "x")], capsys)
    assert code == 1 and "even" in err


def test_gen_graph_io_error(tmp_path, capsys):
    code, _, _ = run(["gen-graph", "--n", "6", "--k", "2", "--seed", "1", "--out", str(tmp_path / "no" / "x")], capsys)
    assert code == 2


def test_tv_check_sutva(capsys):
    code, out, _ = run(["tv-check", "--null", "no-effect", "--alt", "own-treatment", "--n", "8"], capsys)
    assert code == 0
    assert "# max_tv: 0.0" in out and "# risk_bound: 1.0" in out
    assert len([l for l in out.splitlines() if not l.startswith("#")]) == 257


def test_tv_check_graph(graph10, capsys):
    code, out, _ = run(["tv-check", "--null", "own-treatment", "--alt", "stratified", "--graph", str(graph10),
                        "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["meta"]["risk_bound"] == 1.0
    assert len(doc["rows"]) == 1024


def test_tv_check_not_refinement(graph10, capsys):
    code, _, err = run(["tv-check", "--null", "stratified", "--alt", "own-treatment", "--graph", str(graph10)], capsys)
    assert code == 2
    assert "not a refinement" in err and "z=" in err


def test_risk_bound(capsys):
    code, out, _ = run(["risk-bound", "--null", "no-effect", "--alt", "own-treatment", "--n", "8",
                        "--reps", "2000", "--seed", "1"], capsys)
    assert code == 0
    assert "# seed: 1" in out and "# reps: 2000" in out
    assert "tv-lower-bound,1.0" in out


def test_lim_run(capsys):
    code, out, _ = run(["lim-run", "--n", "200", "--k", "4", "--graph-seed", "1", "--beta", "0,0,1",
                        "--reps", "50", "--seed", "3", "--truth", "alt"], capsys)
    assert code == 0
    assert "# type2:" in out and "# seed: 3" in out
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert rows[0] == "rep,g_hat,tau,reject" and len(rows) == 51


def test_lim_run_model_file(tmp_path, graph10, capsys):
    f = tmp_path / "m.json"
    f.write_text(json.dumps({"kind": "lim", "beta": [[0, 0, 0.5]] * 10}))
    code, out, _ = run(["lim-run", "--graph", str(graph10), "--model", str(f), "--reps", "5", "--seed", "1",
                        "--truth", "null"], capsys)
    assert code == 0 and "# type1:" in out


def test_lim_run_degree_zero(tmp_path, capsys):
    f = tmp_path / "iso.edges"
    f.write_text("# nodes: 4\n0 1\n1 2\n")
    code, _, _ = run(["lim-run", "--graph", str(f), "--beta", "0,0,1", "--reps", "5", "--seed", "1"], capsys)
    assert code == 2


def test_lim_run_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["lim-run", "--n", "20", "--k", "2", "--graph-seed", "1", "--beta", "0,0,1"])
    assert exc.value.code == 1


def test_lim_consistency(capsys):
    code, out, _ = run(["lim-consistency", "--k", "4", "--n", "200,400", "--reps", "20", "--seed", "2"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0] == "n,delta,type1,type1_se,type2,type2_se,overall,reps,seed"
    assert len(lines) == 3


def test_lim_consistency_trivial_delta(capsys):
    code, _, _ = run(["lim-consistency", "--n", "200", "--delta", "5", "--reps", "5", "--seed", "2"], capsys)
    assert code == 1


def test_moments(capsys):
    code, out, _ = run(["moments", "--degree", "2", "--p", "0.5"], capsys)
    assert code == 0
    assert "m1,0.5,0.5" in out and "m2,0.375,0.375" in out
    assert "m3,0.3125,0.3125" in out and "m4,0.28125,0.28125" in out
    code, out, _ = run(["moments", "--degree", "1", "--p", "0.3"], capsys)
    assert "m4,0.3,0.3" in out
    code, _, _ = run(["moments", "--degree", "0", "--p", "0.5"], capsys)
    assert code == 1


def test_threads_env_override(monkeypatch, capsys):
    argv = ["lim-run", "--n", "300", "--k", "4", "--graph-seed", "1", "--beta", "0,0,1", "--reps", "2500",
            "--seed", "3"]
    _, a, _ = run(["--threads", "1"] + argv, capsys)
    monkeypatch.setenv("INTERFERENCE_LAB_THREADS", "4")
    _, b, _ = run(["--threads", "1"] + argv, capsys)
    assert a == b
    monkeypatch.setenv("INTERFERENCE_LAB_THREADS", "many")
    code, _, _ = run(argv, capsys)
    assert code == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "interference_lab", "moments", "--degree", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "closed_form" in res.stdout
