import csv
import json

import numpy as np
import pytest

from rebalance import cli
from rebalance.core import Dataset, load_csv, write_csv
from rebalance.datasets import make_imbalanced
from rebalance.harness import TimingRow
from rebalance.report import TABLE_COLUMNS, benchmark_tables, projection_csv, timing_csv


@pytest.fixture
def data_csv(tmp_path):
    path = tmp_path / "d.csv"
    write_csv(make_imbalanced(400, (0.75, 0.2, 0.05), d=3, seed=1), path)
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_balance_is_byte_identical_on_rerun(tmp_path, data_csv, capsys):
    args = ["balance", "--in", data_csv, "--label", "label", "--sampler", "smote",
            "--k", "5", "--seed", "7"]
    assert run(*args, "--out-dir", tmp_path / "a") == 0
    out = capsys.readouterr().out
    assert "class,before,after" in out and "sampling_seconds" in out
    assert run(*args, "--out-dir", tmp_path / "b", "--threads", "3") == 0
    a = (tmp_path / "a" / "d_smote.csv").read_bytes()
    assert a == (tmp_path / "b" / "d_smote.csv").read_bytes()
    balanced = load_csv(tmp_path / "a" / "d_smote.csv", "label")
    assert np.bincount(balanced.labels).tolist() == [300, 300, 300]


def test_manifest_rerun_reproduces_output(tmp_path, data_csv):
    assert run("balance", "--in", data_csv, "--label", "label", "--sampler", "ccr",
               "--energy", "0.5", "--seed", "3", "--out-dir", tmp_path / "a") == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config"]["energy"] == 0.5 and manifest["seed"] == 3
    assert manifest["version"] == cli.__version__
    assert run("rerun", tmp_path / "a" / "manifest.json", "--out-dir", tmp_path / "b") == 0
    assert (tmp_path / "a" / "d_ccr.csv").read_bytes() == \
        (tmp_path / "b" / "d_ccr.csv").read_bytes()


def test_exit_codes(tmp_path, data_csv, capsys):
    assert run("balance", "--in", data_csv, "--sampler", "smoot") == 2
    assert "valid: none, adasyn" in capsys.readouterr().err
    single = tmp_path / "one.csv"
    write_csv(Dataset(np.ones((6, 2)), np.zeros(6, int)), single)
    assert run("balance", "--in", single) == 3
    assert "nothing to balance" in capsys.readouterr().err
    assert run("balance", "--in", tmp_path / "missing.csv") == 2
    assert run("balance", "--in", data_csv, "--k", "0") == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\nfoo,a\n")
    assert run("balance", "--in", bad) == 3
    with pytest.raises(SystemExit) as exc:
        run("balance", "--k", "1")
    assert exc.value.code == 2


def test_benchmark_tables_agree_across_formats(tmp_path, data_csv):
    out = tmp_path / "bench"
    assert run("benchmark", "--in", data_csv, "--label", "label", "--samplers",
               "smote,random_oversample", "--classifiers", "gaussian_nb",
               "--format", "markdown,csv,json", "--out-dir", out) == 0
    with open(out / "benchmark.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0][2:]) == TABLE_COLUMNS
    assert [r[2] for r in rows[1:]] == ["None", "Random Oversampling", "SMOTE"]
    md = (out / "benchmark.md").read_text().splitlines()
    md_rows = [[c.strip() for c in line.strip("|").split("|")] for line in md
               if line.startswith("| ") and not line.startswith("| Sampling")]
    assert md_rows == [r[2:] for r in rows[1:]]
    js = json.loads((out / "benchmark.json").read_text())
    assert [list(r.values()) for r in js[0]["rows"]] == md_rows
    for r in rows[1:]:
        for cell in r[3:7]:
            assert len(cell.split(".")[1]) == 2 and 0 <= float(cell) <= 100
    folds = list(csv.DictReader(open(out / "folds.csv")))
    assert len(folds) == 15


def test_benchmark_figures_flag(tmp_path, data_csv):
    out = tmp_path / "fig"
    assert run("benchmark", "--in", data_csv, "--label", "label", "--samplers", "smote",
               "--figures", "--out-dir", out) == 0
    png = out / "benchmark_d_gaussian_nb.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert not list((tmp_path / "nofig").glob("*.png"))


def test_timing_command(tmp_path, data_csv):
    out = tmp_path / "t"
    assert run("timing", "--in", data_csv, "--label", "label", "--samplers",
               "smote,safe_level_smote", "--sizes", "100,200,400", "--out-dir", out) == 0
    rows = list(csv.DictReader(open(out / "timing.csv")))
    assert len(rows) == 6
    # seconds are printed to the microsecond, log10 from the unrounded value
    for r in rows:
        assert 10 ** float(r["log10_seconds"]) == pytest.approx(float(r["seconds"]),
                                                                abs=1e-6, rel=1e-5)
    proj = list(csv.DictReader(open(out / "projection.csv")))
    assert [p["sampler"] for p in proj] == ["smote", "safe_level_smote"]
    assert run("timing", "--in", data_csv, "--sizes", "200,100", "--out-dir", out) == 2
    assert run("timing", "--in", data_csv, "--sizes", "100,9000", "--out-dir", out) == 2


def test_report_helpers():
    rows = [TimingRow("smote", 100, 0.5, (0.5,)), TimingRow("smote", 200, 1.0, (1.0,))]
    text = timing_csv(rows)
    assert text.splitlines()[0] == "sampler,size,seconds,log10_seconds"
    assert "smote,100000,500.000" in projection_csv(rows, 100_000)
    assert benchmark_tables([]) == []
