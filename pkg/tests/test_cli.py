import json
import subprocess
import sys

import pytest

from isospec import __version__
from isospec.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_verify_chain_cycle6(capsys):
    code, doc = run_json(capsys, "verify-chain", "cycle:6", "--p", "2")
    assert code == 0 and doc["pass"] is True
    chain = doc["result"]["reports"][0]["chain"]
    assert chain and all(c["pass"] for c in chain if c["item"] != "4-table")
    assert doc["result"]["cheeger"]["pass"]


def test_envelope_carries_config_and_version(capsys):
    _, doc = run_json(capsys, "constants", "petersen", "--seed", "7", "--p", "3")
    assert doc["artifact"] == "isospec" and doc["version"] == __version__
    assert doc["config"]["seed"] == 7 and doc["config"]["p"] == [3.0]
    assert doc["config"]["subcommand"] == "constants" and doc["config"]["graph"] == "petersen"
    assert doc["result"]["lambda2"] == pytest.approx(2 / 3)


def test_output_is_deterministic_apart_from_timestamp(capsys):
    argv = ("constants", "random-regular:n=10,d=3,seed=5", "--p", "1.5", "--p", "3")
    docs = [run_json(capsys, *argv)[1] for _ in range(2)]
    for d in docs:
        d.pop("timestamp")
    a, b = (json.dumps(d, sort_keys=True) for d in docs)
    assert a == b


def test_counterexample_counts(capsys):
    code, doc = run_json(capsys, "counterexample", "--n", "10", "--j", "5")
    r = doc["result"]
    assert code == 0
    assert r["translate_count"] == 64 and r["size_F_n"] == 10240 and r["boundary_F_n"] == 2048
    assert all(r["checks"].values())


def test_usage_error_json(capsys):
    code, out, _ = run(capsys, "gen")
    err = json.loads(out)
    assert code == 2 and err["error"] == "UsageError" and err["argv"] == ["gen"]
    assert err["version"] == __version__
    code, out, _ = run(capsys, "constants", "cycle:6", "--p", "0.5")
    assert code == 2 and "p must be" in json.loads(out)["message"]
    code, out, _ = run(capsys, "constants", "no_such_family:3")
    assert code == 2


def test_check_failure_exit_code(capsys):
    # the 4-table entry fails on K2 but verify-chain only gates on the chain proper
    code, doc = run_json(capsys, "verify-chain", "complete:2", "--p", "2")
    table = [c for c in doc["result"]["reports"][0]["chain"] if c["item"] == "4-table"]
    assert table and not table[0]["pass"]
    assert code in (0, 1) and (code == 0) == doc["pass"]


def test_gen_csv_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "cycle:5", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "5 5"
    path = tmp_path / "c5.txt"
    path.write_text(out)
    _, doc = run_json(capsys, "gen", f"file:{path}")
    assert doc["result"]["n"] == 5 and doc["result"]["m"] == 5


def test_walk_csv_and_json(capsys):
    code, out, _ = run(capsys, "walk", "cycle:4", "--k-max", "4", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["k,rho,loss", "0,1.0,0.0", "1,0.0,0.0", "2,0.5,0.0", "3,0.0,0.0", "4,0.5,0.0"]
    _, doc = run_json(capsys, "walk", "lamplighter", "--k-max", "4")
    assert doc["result"]["rho"][2] == pytest.approx(1 / 3) and doc["result"]["bipartite"]


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "folner", "cycle:6", "--subset", "0,1,2", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["pass"] is True


def test_transport_on_window(capsys):
    code, doc = run_json(capsys, "transport", "lamplighter-window:4")
    r = doc["result"]
    assert code == 0 and r["residual"] < 1e-10 and r["norm_total"] <= r["certified_bound"]


def test_suite_subset_prints_lines(capsys):
    code, out, err = run(capsys, "suite", "--quick", "--only", "3,9")
    assert code == 0
    assert err.splitlines()[0].startswith("[PASS] criterion 3")
    assert [c["number"] for c in json.loads(out)["result"]["criteria"]] == [3, 9]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "isospec", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
