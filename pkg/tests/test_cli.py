import json
import os

import pytest

from slabadjoint.cli import main

FAST = ["--set", "mc.samples=20000", "--set", "verify.duality_samples=5"]


def read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main(["run", "--out", str(out), "-q", "--set", "detectors=10,40,49.5"] + FAST)
    return out, code


def test_zero_detectors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "z.cfg"
    cfg.write_text("detectors =\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "detector" in capsys.readouterr().err


def test_bad_flag_value_exit_2(tmp_path):
    assert main(["verify", "--grid", "4000", "--out", str(tmp_path)]) == 2
    assert main(["verify", "--set", "nonsense", "--out", str(tmp_path)]) == 2


def test_run_writes_tables(run_dir):
    out, _ = run_dir
    names = set(os.listdir(out))
    for stem in ("table1_first_order_absolute", "table2_first_order_relative", "table3_second_order_absolute",
                 "table4_second_order_relative", "table6_relative_std", "table7_skewness",
                 "moments_case_5", "correlation_case_5", "verification"):
        assert stem + ".tsv" in names
    assert "results.json" in names and "verification.json" in names
    assert "adjoint solves per response: 4" in read(out / "detector_R1_b10" / "solve_count.txt")


def test_nominal_responses_in_json(run_dir):
    out, _ = run_dir
    doc = json.loads(read(out / "results.json"))
    vals = [d["response"]["closed_form"] for d in doc["detectors"]]
    for got, ref in zip(vals, (3.77e9, 3.66e9, 6.076e8)):
        assert got == pytest.approx(ref, rel=5e-3)


def test_json_uses_17_digits(run_dir):
    out, _ = run_dir
    text = read(out / "results.json")
    doc = json.loads(text)
    r = doc["detectors"][0]["response"]["closed_form"]
    assert format(r, ".17g") in text


def test_tsv_headers_carry_units(run_dir):
    out, _ = run_dir
    for name in os.listdir(out):
        if not name.endswith(".tsv"):
            continue
        header = read(out / name).splitlines()[0].split("\t")
        numeric_cols = header[1:]
        assert all("[" in h for h in numeric_cols if h not in ("method", "units", "status", "detail")), name
        if any("units of row" in h for h in header):
            labels = [line.split("\t")[0] for line in read(out / name).splitlines()[1:]]
            assert all(label.endswith("]") for label in labels), name


def test_tsv_four_significant_digits(run_dir):
    out, _ = run_dir
    row = read(out / "table1_first_order_absolute.tsv").splitlines()[1].split("\t")
    assert row[1] == "-1.917e+11"


def test_run_exit_reflects_checks(run_dir):
    out, code = run_dir
    doc = json.loads(read(out / "verification.json"))
    expected = 0 if doc["all_gating_checks_passed"] else 1
    assert code == expected


def test_tightened_tolerance_fails(tmp_path):
    args = ["verify", "--out", str(tmp_path), "-q", "--set", "detectors=10", "--set", "mc.samples=0",
            "--set", "verify.duality_samples=2", "--set", "tolerance.quad_vs_closed=1e-12"]
    assert main(args) == 1
    doc = json.loads(read(tmp_path / "verification.json"))
    failed = {c["check"] for c in doc["checks"] if not c["passed"]}
    assert "second-order/quadrature-vs-closed" in failed


def test_verify_passes_without_monte_carlo(tmp_path):
    args = ["verify", "--out", str(tmp_path), "-q", "--set", "detectors=10,-10", "--set", "mc.samples=0",
            "--set", "verify.duality_samples=5"]
    assert main(args) == 0


def test_three_node_grid_fails_grid_convergence(tmp_path):
    args = ["verify", "--grid", "3", "--out", str(tmp_path), "-q", "--set", "detectors=10",
            "--set", "mc.samples=0"]
    assert main(args) == 1
    doc = json.loads(read(tmp_path / "verification.json"))
    failed = {c["check"] for c in doc["checks"] if not c["passed"]}
    assert "grid-convergence/psi" in failed


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["run", "-q", "--set", "detectors=10,40", "--seed", "5"] + FAST
    main(base + ["--out", str(a)])
    main(base + ["--out", str(b)])
    files = sorted(os.path.relpath(os.path.join(d, f), a) for d, _, fs in os.walk(a) for f in fs)
    assert files
    for rel in files:
        assert read(a / rel) == read(b / rel), rel


def test_tables_subcommand(tmp_path):
    assert main(["tables", "--out", str(tmp_path), "--format", "tsv"]) == 0
    names = sorted(os.listdir(tmp_path))
    assert all(n.startswith("table") for n in names) and len(names) == 6


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "slabadjoint", "tables", "--out", str(tmp_path), "--format", "json"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert os.path.exists(tmp_path / "results.json")
