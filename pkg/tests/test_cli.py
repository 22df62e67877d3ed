"""Command-line behavior: artifact layout, exit codes, config-file layering,
the rho sweep, manifest reruns, and the output-directory env var."""
import json

import pytest

from alphauct.cli import OUT_ENV_VAR, main


def run_cli(*argv) -> int:
    return main(list(argv))


def read_json(path):
    return json.loads(path.read_text())


def csv_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


SEARCH_ARGS = ["search", "--env", "trap3", "--iters", "20", "--expansion", "5",
               "--chunk", "1", "--backup", "max", "--judge", "comparative",
               "--seed", "7"]


def test_search_writes_artifacts_and_succeeds(tmp_path, capsys):
    out = tmp_path / "run"
    assert run_cli(*SEARCH_ARGS, "--out", str(out)) == 0
    for name in ("tree.txt", "trace.txt", "result.json", "manifest.json"):
        assert (out / name).exists(), name
    result = read_json(out / "result.json")
    assert result["outcome"] == "success"
    assert result["best_path_normalized"] == ["open_lobby", "go_vault",
                                              "open_goal"]
    assert result == json.loads(capsys.readouterr().out)
    assert (out / "tree.txt").read_text().startswith("# tree v1\n")
    manifest = read_json(out / "manifest.json")
    assert manifest["command"] == "search"
    assert manifest["config"]["max_iterations"] == 20
    assert manifest["artifacts"]["result"] == "result.json"


def test_search_usage_errors_exit_2(tmp_path, capsys):
    out = str(tmp_path / "x")
    assert run_cli("search", "--env", "trap3", "--expansion", "0",
                   "--out", out) == 2
    assert run_cli("search", "--out", out) == 2  # no env anywhere
    assert run_cli("search", "--env", "atlantis", "--out", out) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_exits_2(capsys):
    assert run_cli("conquer") == 2
    capsys.readouterr()


def test_config_file_layering(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"env": "trap3", "max_iterations": 5,
                               "judge_noise": 0.05}))
    out = tmp_path / "run"
    # flag beats file, file beats default
    assert run_cli("search", "--config", str(cfg), "--iters", "9",
                   "--out", str(out)) == 0
    conf = read_json(out / "manifest.json")["config"]
    assert conf["max_iterations"] == 9
    assert conf["judge_noise"] == 0.05
    assert conf["expansion_factor"] == 5  # untouched default


def test_config_file_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"env": "trap3", "budget": 10}))
    assert run_cli("search", "--config", str(cfg),
                   "--out", str(tmp_path / "r")) == 2
    assert "budget" in capsys.readouterr().err


def test_bandit_curve_artifacts(tmp_path, capsys):
    out = tmp_path / "bandit"
    assert run_cli("bandit", "--arms", "3", "--gap", "0.1", "--sigma2", "0.04",
                   "--horizon", "500", "--seeds", "5", "--out", str(out)) == 0
    header, rows = csv_rows(out / "curve.csv")
    assert header == ["t", "mean_regret", "std_regret", "bound"]
    assert rows[-1][0] == "500"
    assert float(rows[-1][3]) >= float(rows[0][3])  # bound grows with t
    summary = read_json(out / "summary.json")
    assert {"final_mean_regret", "bound_total", "fit"} <= set(summary)
    assert summary["final_mean_regret"] <= summary["bound_total"]
    capsys.readouterr()


def test_bandit_usage_errors(tmp_path, capsys):
    out = str(tmp_path / "b")
    assert run_cli("bandit", "--rho", "1.5", "--out", out) == 2
    assert run_cli("bandit", "--arms", "1", "--out", out) == 2
    assert run_cli("bandit", "--seeds", "0", "--out", out) == 2
    assert run_cli("bandit", "--rho-grid", "abc", "--out", out) == 2
    # support violation surfaces as a config error, not a crash
    assert run_cli("bandit", "--gap", "0.9", "--sigma2", "0.04",
                   "--out", out) == 2
    capsys.readouterr()


def test_bandit_rho_grid_sweep(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert run_cli("bandit", "--arms", "3", "--gap", "0.1", "--sigma2", "0.1",
                   "--horizon", "800", "--seeds", "6",
                   "--rho-grid", "0.25,1.0", "--out", str(out)) == 0
    header, rows = csv_rows(out / "ratios.csv")
    assert header == ["rho", "ratio", "ci_lo", "ci_hi", "mean_regret",
                      "base_mean_regret", "n_seeds"]
    assert [r[0] for r in rows] == ["0.25", "1.0"]
    assert float(rows[-1][1]) == 1.0  # blind baseline against itself
    assert not (out / "curve.csv").exists()
    capsys.readouterr()


def test_ablate_artifacts(tmp_path, capsys):
    out = tmp_path / "ablate"
    assert run_cli("ablate", "--fixture", "trap3", "--seeds", "4",
                   "--out", str(out)) == 0
    header, rows = csv_rows(out / "ablation.csv")
    assert header == ["judge_mode", "backup", "successes", "runs", "rate"]
    assert len(rows) == 4  # 2x2 grid
    assert {(r[0], r[1]) for r in rows} == \
        {("comparative", "max"), ("comparative", "mean"),
         ("independent", "max"), ("independent", "mean")}
    summary = read_json(out / "summary.json")
    assert set(summary["tests"]) == {"max_vs_mean",
                                     "comparative_vs_independent"}
    assert not (out / "speedup.json").exists()  # probe off by default
    capsys.readouterr()


def test_rerun_reproduces_bytes(tmp_path, capsys):
    first, again = tmp_path / "a", tmp_path / "b"
    assert run_cli(*SEARCH_ARGS, "--out", str(first)) == 0
    # accepts the manifest path or its directory
    assert run_cli("rerun", str(first / "manifest.json"),
                   "--out", str(again)) == 0
    for name in ("tree.txt", "trace.txt", "result.json"):
        assert (first / name).read_bytes() == (again / name).read_bytes(), name
    third = tmp_path / "c"
    assert run_cli("rerun", str(first), "--out", str(third)) == 0
    assert (first / "tree.txt").read_bytes() == (third / "tree.txt").read_bytes()
    capsys.readouterr()


def test_rerun_rejects_foreign_manifests(tmp_path, capsys):
    bogus = tmp_path / "manifest.json"
    bogus.write_text(json.dumps({"command": "teleport", "config": {}}))
    assert run_cli("rerun", str(bogus), "--out", str(tmp_path / "o")) == 2
    missing = tmp_path / "incomplete.json"
    missing.write_text(json.dumps({"command": "search"}))
    assert run_cli("rerun", str(missing), "--out", str(tmp_path / "o2")) == 2
    assert run_cli("rerun", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "o3")) == 2
    capsys.readouterr()


def test_out_env_var_sets_default_root(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUT_ENV_VAR, str(tmp_path / "root"))
    monkeypatch.chdir(tmp_path)
    assert run_cli(*SEARCH_ARGS) == 0
    assert (tmp_path / "root" / "search" / "result.json").exists()
    capsys.readouterr()


def test_verify_filter_and_fault_exit_codes(capsys):
    assert run_cli("verify", "--filter", "selection") == 0
    out = capsys.readouterr().out
    assert "PASS selection_fixtures" in out
    assert out.strip().endswith("1/1 criteria passed")
    assert run_cli("verify", "--filter", "dedup",
                   "--inject-fault", "dedup") == 1
    out = capsys.readouterr().out
    assert "FAIL dedup_law" in out
    assert run_cli("verify", "--filter", "no_such_criterion") == 2
    capsys.readouterr()
