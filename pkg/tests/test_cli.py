import json
import subprocess
import sys

import pytest

from wiresecret import __version__
from wiresecret.cli import RunConfig, UsageError, main

from conftest import write


def out(tmp_path, name):
    return str(tmp_path / name)


def commands(files, tmp_path):
    """One invocation per subcommand, each writing a fresh file in ``tmp_path``."""
    return {
        "compound": ["compound", "--structure", files["structure"], "--channel", files["erasures"],
                     "--grid", "8", "--refine-rounds", "1", "--out", out(tmp_path, "compound.json")],
        "region siso": ["region", "siso", "--channel", files["siso"], "--grid", "4", "--weights", "1,2",
                        "--boundary-out", out(tmp_path, "siso_b.json"), "--out", out(tmp_path, "siso.csv")],
        "region mimo": ["region", "mimo", "--channel", files["mimo"], "--alpha-grid", "4", "--weights", "1,2",
                        "--perturbations", "20", "--seed", "3", "--boundary-out", out(tmp_path, "mimo_b.json"),
                        "--out", out(tmp_path, "mimo.csv")],
        "region dmc": ["region", "dmc", "--channel", files["degraded_dmc"], "--dists", files["dists"],
                       "--out", out(tmp_path, "dmc.json")],
        "miso": ["miso", "--instance", files["instance"], "--chain", files["chain"],
                 "--report", out(tmp_path, "miso.json"), "--out", out(tmp_path, "miso.csv")],
        "simulate": ["simulate", "--config", files["sim"], "--n", "2,4", "--seeds", "3", "--seed", "7",
                     "--out", out(tmp_path, "trend.csv")],
        "capacity kk": ["capacity", "kk", "--P", "1", "--N", "1,1,1", "--k", "2",
                        "--out", out(tmp_path, "kk.csv")],
        "validate": ["validate", "--structure", files["structure"], "--channel", files["degraded_dmc"],
                     "--out", out(tmp_path, "validate.json")],
    }


OUTPUT_STEMS = {"compound", "siso", "siso_b", "mimo", "mimo_b", "dmc", "miso", "trend", "kk", "validate"}


def outputs_of(tmp_path):
    return {p.name: p.read_bytes() for p in sorted(tmp_path.iterdir()) if p.stem in OUTPUT_STEMS}


def test_every_subcommand_is_reproducible(files, tmp_path):
    runs = []
    for _ in range(2):
        for name, argv in commands(files, tmp_path).items():
            assert main(argv) == 0, name
        runs.append(outputs_of(tmp_path))
    assert len(runs[0]) == 11
    assert runs[0] == runs[1]


def test_csv_format(files, tmp_path):
    assert main(commands(files, tmp_path)["simulate"]) == 0
    raw = (tmp_path / "trend.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").split("\n")
    assert lines[0].startswith(f"# wiresecret {__version__} seed=7 config=")
    assert len(lines[0].split("config=")[1]) == 64
    assert lines[1] == "n,seed,receiver,error_prob,leakage_bits_per_symbol"
    assert len(lines) == 2 + 2 * 3 * 2 + 1 and lines[-1] == ""
    first = lines[2].split(",")
    assert first[:3] == ["2", "0", "1"]
    assert 0.0 <= float(first[4]) <= 0.5


def test_config_hash_tracks_inputs(files, tmp_path):
    argv = commands(files, tmp_path)["capacity kk"]
    main(argv)
    a = (tmp_path / "kk.csv").read_text().splitlines()
    argv[argv.index("--k") + 1] = "3"
    main(argv)
    b = (tmp_path / "kk.csv").read_text().splitlines()
    assert a[0] != b[0] and a[1] == b[1] == "k,K,P,capacity_bits"


def test_thread_count_does_not_change_output(files, tmp_path, monkeypatch):
    argv = commands(files, tmp_path)["simulate"]
    main(argv)
    serial = (tmp_path / "trend.csv").read_bytes()
    monkeypatch.setenv("WIRESECRET_THREADS", "4")
    main(argv)
    assert (tmp_path / "trend.csv").read_bytes() == serial
    monkeypatch.setenv("WIRESECRET_THREADS", "many")
    assert main(argv) == 1


def test_compound_report(files, tmp_path):
    main(commands(files, tmp_path)["compound"])
    doc = json.loads((tmp_path / "compound.json").read_text())
    assert doc["provenance"].startswith("wiresecret ")
    res = doc["result"]
    assert res["reduced_counts"] == [1, 2]
    assert abs(res["lower_bound"] - 0.25) < 5e-3 and res["lower_bound"] <= res["upper_bound"] + 1e-6


def test_non_degraded_siso_exits_2(files, tmp_path, capsys):
    code = main(["region", "siso", "--channel", files["bad_siso"], "--out", out(tmp_path, "x.csv")])
    assert code == 2
    err = capsys.readouterr().err
    assert "N_1=1" in err and "N_2=2" in err
    assert not (tmp_path / "x.csv").exists()


def test_validate_reports_lp_residual(files, tmp_path):
    code = main(["validate", "--channel", files["reversed_dmc"], "--out", out(tmp_path, "v.json")])
    assert code == 2
    res = json.loads((tmp_path / "v.json").read_text())["result"]["channel"]
    assert res["degraded"] is False and res["lp_residual"] > 1e-3


def test_validate_overlap_exits_2(files, tmp_path):
    assert main(["validate", "--structure", files["overlap"], "--out", out(tmp_path, "v.json")]) == 2
    res = json.loads((tmp_path / "v.json").read_text())["result"]["structure"]
    assert res["valid"] is False and [[1, 2], [1, 2, 3]] in res["conflicts"]


def test_simulate_rejects_non_degraded(files, tmp_path):
    doc = json.loads(open(files["sim"]).read())
    doc["channel"]["transitions"] = doc["channel"]["transitions"][::-1]
    bad = write(tmp_path / "bad_sim.json", doc)
    assert main(["simulate", "--config", bad, "--n", "2", "--seeds", "1", "--seed", "0",
                 "--out", out(tmp_path, "t.csv")]) == 2


def test_simulate_warns_on_failing_conditions(files, tmp_path, capsys):
    doc = json.loads(open(files["sim"]).read())
    doc["total_rates"] = [0, 0.5]
    cfg = write(tmp_path / "weak_sim.json", doc)
    assert main(["simulate", "--config", cfg, "--n", "2", "--seeds", "1", "--seed", "0",
                 "--out", out(tmp_path, "t.csv")]) == 0
    assert "warning: rate condition" in capsys.readouterr().err


def test_miso_non_convergence_exits_3_with_trace(files, tmp_path):
    argv = ["miso", "--instance", files["instance"], "--chain", files["chain"], "--max-doublings", "2",
            "--out", out(tmp_path, "trace.csv")]
    assert main(argv) == 3
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[1] == "t,R_1,R_2" and len(lines) == 2 + 3


def test_mimo_with_chain(files, tmp_path):
    assert main(["region", "mimo", "--channel", files["mimo"], "--chain", files["mimo_chain"],
                 "--out", out(tmp_path, "m.json")]) == 0
    rates = json.loads((tmp_path / "m.json").read_text())["result"]["rates"]
    assert len(rates) == 2 and min(rates) >= 0


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["compound", "--structure", "x.json"],
    ["capacity", "kk", "--P", "1", "--N", "1,a", "--k", "1"],
    ["simulate", "--config", "c.json", "--n", "2", "--seeds", "1"],
])
def test_usage_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 1
    assert capsys.readouterr().err


def test_missing_file_is_usage_error(files, tmp_path):
    assert main(["compound", "--structure", str(tmp_path / "nope.json"), "--channel", files["erasures"]]) == 1


def test_bad_json_is_validation_error(files, tmp_path):
    (tmp_path / "broken.json").write_text("{not json")
    assert main(["compound", "--structure", files["broken"], "--channel", files["erasures"]]) == 2


def test_weights_need_seed(files, tmp_path):
    assert main(["region", "mimo", "--channel", files["mimo"], "--weights", "1,1"]) == 1


def test_run_config_invariants():
    with pytest.raises(UsageError):
        RunConfig("miso", params={"tol": 0.0})
    with pytest.raises(UsageError):
        RunConfig("simulate", seed=2 ** 64)
    assert RunConfig("simulate", seed=2 ** 64 - 1).provenance().startswith("wiresecret")


def test_console_script_exit_codes(files, tmp_path):
    run = lambda *a: subprocess.run([sys.executable, "-m", "wiresecret.cli", *a], capture_output=True)
    ok = run("capacity", "kk", "--P", "1", "--N", "1,1", "--k", "2")
    assert ok.returncode == 0 and ok.stdout.decode().splitlines()[1] == "k,K,P,capacity_bits"
    assert run("region", "siso", "--channel", files["bad_siso"]).returncode == 2
    assert run("bogus").returncode == 1
