import json
import subprocess

import pytest


def run(cli, *args):
    return subprocess.run([cli, *map(str, args)], capture_output=True, text=True)


def test_validate_exit_codes(cli, data_dir, tmp_path):
    assert run(cli, "validate", data_dir / "two_node_gas.json").returncode == 0

    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": [')
    r = run(cli, "validate", bad)
    assert r.returncode == 2
    assert "byte" in r.stderr

    net = json.loads((data_dir / "two_node_gas.json").read_text())
    net["nodes"][1]["potential"] = [[30.0, 20.0]]
    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps(net))
    r = run(cli, "validate", invalid)
    assert r.returncode == 1
    assert "input-invalid" in r.stderr


def test_solve_report(cli, data_dir, tmp_path):
    out = tmp_path / "r.json"
    r = run(cli, "solve", data_dir / "two_node_gas.json", "--t", 16, "--refine-rounds", 2,
            "--with-oracle", "--out", out)
    assert r.returncode == 0, r.stderr
    assert "lower bound" in r.stdout
    rep = json.loads(out.read_text())
    assert [h["round"] for h in rep["history"]] == [0, 1, 2]
    assert rep["checks"] == {"bounds_monotone": True, "lower_le_upper": True}
    assert rep["history"][-1]["upper_estimate"] == pytest.approx(1.0, rel=1e-6)


def test_solve_is_reproducible(cli, data_dir, tmp_path):
    reports = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert run(cli, "solve", data_dir / "gas_triangle.json", "--t", 4, "--refine-rounds", 2,
                   "--tighten", 10, "--seed", 5, "--out", out).returncode == 0
        rep = json.loads(out.read_text())
        del rep["timings"]
        reports.append(json.dumps(rep, sort_keys=True))
    assert reports[0] == reports[1]


def test_solver_choices_agree_on_trees(cli, data_dir):
    values = {}
    for solver in ("tree", "lp"):
        r = run(cli, "solve", data_dir / "dissipative_tree4.json", "--t", 4, "--solver", solver, "-q")
        assert r.returncode == 0, r.stderr
        values[solver] = json.loads(r.stdout)["lower_bound"]
    assert abs(values["tree"] - values["lp"]) <= 1e-7


def test_hierarchy_does_not_lower_the_bound(cli, data_dir):
    def bound(*extra):
        r = run(cli, "solve", data_dir / "gas_triangle.json", "--t", 3, "-q", *extra)
        assert r.returncode == 0, r.stderr
        return json.loads(r.stdout)["lower_bound"]

    plain = bound()
    assert bound("--hierarchy", "size:2") >= plain - 1e-7


def test_conflicting_flags(cli, data_dir):
    r = run(cli, "solve", data_dir / "gas_triangle.json", "--solver", "tree", "--hierarchy", "minimal")
    assert r.returncode == 2


def test_infeasible_and_capacity(cli, data_dir, tmp_path):
    net = json.loads((data_dir / "two_node_gas.json").read_text())
    net["edges"][0]["flow_domain"] = [[5.0, 6.0]]
    path = tmp_path / "infeasible.json"
    path.write_text(json.dumps(net))
    r = run(cli, "solve", path, "--t", 4)
    assert r.returncode == 3
    assert "discretization-infeasible" in r.stderr
    r = run(cli, "solve", path, "--t", 4, "--tighten", 5)
    assert r.returncode == 3
    assert "locally-infeasible (tightening)" in r.stderr

    r = subprocess.run([cli, "oracle", str(data_dir / "gas_chain5.json")], capture_output=True, text=True,
                       env={"PCNF_ORACLE_CAP": "10"})
    assert r.returncode == 4
    assert "instance too large for oracle" in r.stderr


def test_export_golden_and_round_trip(cli, data_dir, golden_dir, tmp_path):
    r = run(cli, "export", data_dir / "two_node_gas.json", "--t", 2)
    assert r.returncode == 0
    assert r.stdout == (golden_dir / "two_node_t2.mps").read_text()
    r = run(cli, "export", data_dir / "gas_triangle.json", "--t", 2, "--export-format", "lp")
    assert r.stdout == (golden_dir / "gas_triangle_t2.lp").read_text()

    assert run(cli, "export", data_dir / "two_node_gas.json", "--out", tmp_path / "no" / "x.mps").returncode == 2


def test_oracle_command(cli, data_dir):
    r = run(cli, "oracle", data_dir / "two_node_gas.json", "--t", 8, "--oracle-mode", "both")
    assert r.returncode == 0, r.stderr
    doc = json.loads(r.stdout)
    assert doc["oracle"]["continuous-approx"]["feasible"] is True
    assert doc["oracle"]["discretized"]["value"] <= doc["oracle"]["continuous-approx"]["value"] + 1e-7
