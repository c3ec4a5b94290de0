import json

import pytest

from sspeq.cli import main


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def write_additive_instance(path, with_bids=False):
    inst = {
        "family": "handmade",
        "m": 2,
        "n": 2,
        "seed": 0,
        "allocation": [[1], [0]],
        "valuations": [
            {"kind": "additive", "m": 2, "items": ["3/1", "1/1"]},
            {"kind": "additive", "m": 2, "items": ["2/1", "2/1"]},
        ],
    }
    if with_bids:
        inst["allocation"] = [[0], [1]]
        inst["bids"] = [["3/1", "0/1"], ["0/1", "2/1"]]
    path.write_text(json.dumps(inst))
    return path


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        code = main(
            ["gen", "--family", "table-submodular", "--m", "4", "--seed", "5", "--out", str(out)]
        )
        assert code == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    d = json.loads(a.read_text())
    assert d["family"] == "table-submodular"
    assert len(d["valuations"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["gen", "--family", "budget-additive", "--m", "4", "--n", "3"],
        ["gen", "--family", "coverage", "--m", "4"],
        ["gen", "--family", "setpair", "--m", "8", "--count", "2"],
        ["gen", "--family", "sensitive", "--m", "9", "--g", "1", "--h", "2", "--support", "2"],
        ["gen", "--family", "gray-exponential", "--m", "5"],
    ],
)
def test_gen_families_emit_valid_instances(argv, capsys):
    code, out = run_cli(capsys, argv)
    assert code == 0
    d = json.loads(out)
    assert {"family", "m", "n", "valuations"} <= set(d)
    if d["family"] == "gray-exponential":
        assert d["allocation"] is not None


def test_gen_csv_format(capsys):
    code, out = run_cli(capsys, ["gen", "--family", "coverage", "--m", "3", "--format", "csv"])
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2
    assert "family" in lines[0]


def test_gen_sensitive_rejects_even_m(capsys):
    code, _ = run_cli(capsys, ["gen", "--family", "sensitive", "--m", "8", "--g", "1", "--h", "2"])
    assert code == 2


def test_steal_reports_frozen_run(tmp_path, capsys):
    inst = write_additive_instance(tmp_path / "inst.json")
    trace = tmp_path / "trace.ldj"
    code, out = run_cli(
        capsys,
        ["steal", "--instance", str(inst), "--init", "instance", "--trace-out", str(trace)],
    )
    assert code == 0
    d = json.loads(out)
    assert d["steals"] == 2
    assert d["welfare"] == "5/1"
    assert d["opt"] == "5/1"
    assert d["ratio"] == "1/1"
    assert d["equilibrium_verified"] is True
    rows = [json.loads(line) for line in trace.read_text().splitlines()]
    assert [(r["thief"], r["victim"], r["item"]) for r in rows] == [(0, 1, 0), (1, 0, 1)]


def test_steal_step_cap_means_violation(tmp_path, capsys):
    inst = write_additive_instance(tmp_path / "inst.json")
    code, out = run_cli(
        capsys, ["steal", "--instance", str(inst), "--init", "instance", "--step-cap", "1"]
    )
    assert code == 1
    assert json.loads(out)["truncated"] is True


def test_steal_budget_additive_reports_bound(capsys, tmp_path):
    gen_out = tmp_path / "ba.json"
    assert main(["gen", "--family", "budget-additive", "--m", "4", "--out", str(gen_out)]) == 0
    code, out = run_cli(capsys, ["steal", "--instance", str(gen_out), "--init", "pool"])
    assert code == 0
    d = json.loads(out)
    assert d["within_bound"] is True
    assert d["steals"] <= d["steal_bound"]


def test_topsteal_runs_frozen_instance(tmp_path, capsys):
    inst = write_additive_instance(tmp_path / "inst.json")
    code, out = run_cli(
        capsys, ["topsteal", "--instance", str(inst), "--init", "instance", "--t", "2"]
    )
    assert code == 0
    d = json.loads(out)
    assert d["steals"] == 2
    assert d["within_bound"] is True
    assert d["equilibrium_verified"] is True
    assert sum(d["cases"].values()) >= 1


def test_dynamic_gray_m5(tmp_path, capsys):
    gen_out = tmp_path / "gray.json"
    assert main(["gen", "--family", "gray-exponential", "--m", "5", "--out", str(gen_out)]) == 0
    code, out = run_cli(capsys, ["dynamic", "--instance", str(gen_out), "--init", "instance"])
    assert code == 0
    d = json.loads(out)
    assert d["exchanges"] == 19
    assert d["truncated"] is False
    assert d["sums_strictly_increase"] is True
    assert d["traditional"] is True
    assert d["equilibrium_verified"] is True


def test_dynamic_step_cap_means_violation(tmp_path, capsys):
    gen_out = tmp_path / "gray.json"
    assert main(["gen", "--family", "gray-exponential", "--m", "5", "--out", str(gen_out)]) == 0
    code, out = run_cli(
        capsys, ["dynamic", "--instance", str(gen_out), "--init", "instance", "--step-cap", "2"]
    )
    assert code == 1
    assert json.loads(out)["truncated"] is True


def test_adversary_small_family(tmp_path, capsys):
    report = tmp_path / "adv.json"
    code = main(
        [
            "adversary",
            "--m", "9",
            "--g", "1",
            "--h", "2",
            "--algorithm", "hill",
            "--budget", "30",
            "--report", str(report),
        ]
    )
    capsys.readouterr()
    assert code == 0
    d = json.loads(report.read_text())
    assert d["audit_ok"] is True
    assert d["certified"] is False
    assert d["queries"] == 30
    assert "query_lower_bound" not in d


def test_verify_equilibrium_and_violation(tmp_path, capsys):
    good = write_additive_instance(tmp_path / "good.json", with_bids=True)
    code, out = run_cli(capsys, ["verify", "--instance", str(good)])
    assert code == 0
    assert json.loads(out)["equilibrium"] is True

    bad_bids = tmp_path / "bad.json"
    bad_bids.write_text(json.dumps({"bids": [["0/1", "0/1"], ["1/2", "1/2"]]}))
    code, out = run_cli(capsys, ["verify", "--instance", str(good), "--bids", str(bad_bids)])
    assert code == 1
    d = json.loads(out)
    assert d["equilibrium"] is False
    kinds = {w["kind"] for w in d["witnesses"]}
    assert "allocation-mismatch" in kinds or "deviation" in kinds


def test_verify_needs_bids(tmp_path, capsys):
    inst = write_additive_instance(tmp_path / "inst.json")
    code, _ = run_cli(capsys, ["verify", "--instance", str(inst)])
    assert code == 2


def test_setpair_gen_then_check(tmp_path, capsys):
    sysfile = tmp_path / "sys.json"
    assert main(["setpair-gen", "--m", "8", "--count", "2", "--out", str(sysfile)]) == 0
    capsys.readouterr()
    code, out = run_cli(capsys, ["setpair-check", "--system", str(sysfile)])
    assert code == 0
    assert json.loads(out)["good"] is True

    broken = json.loads(sysfile.read_text())
    broken["pairs"][0][1] = broken["pairs"][0][0]
    badfile = tmp_path / "bad.json"
    badfile.write_text(json.dumps(broken))
    code, out = run_cli(capsys, ["setpair-check", "--system", str(badfile)])
    assert code == 1
    assert json.loads(out)["problems"]


def test_maxcut_reduce_star(tmp_path, capsys):
    graph = tmp_path / "star.json"
    graph.write_text(
        json.dumps({"vertices": 3, "edges": [[0, 1, "1/1"], [0, 2, "1/1"]]})
    )
    code, out = run_cli(capsys, ["maxcut-reduce", "--graph", str(graph), "--side", "2"])
    assert code == 0
    d = json.loads(out)
    assert d["local_max"] is False
    assert d["improving_move"] == [1, 0, 1]
    assert d["cut_weight"] == "1/1"
    code, out = run_cli(capsys, ["maxcut-reduce", "--graph", str(graph), "--side", "1,2"])
    assert code == 0
    d = json.loads(out)
    assert d["local_max"] is True
    assert d["cut_weight"] == "2/1"


def test_isoperimetric_exit_codes(capsys):
    code, out = run_cli(capsys, ["isoperimetric", "--n", "3"])
    assert code == 0
    assert json.loads(out)["ok"] is True
    code, _ = run_cli(capsys, ["isoperimetric", "--n", "4"])
    assert code == 2
    code, out = run_cli(capsys, ["isoperimetric", "--n", "4", "--samples", "50"])
    assert code == 0
