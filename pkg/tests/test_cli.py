import csv
import subprocess
import sys

import numpy as np
import pytest

from brcd import __version__, fileio
from brcd.cli import main, run_check_grad
from brcd.codes import CodeMatrix


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


@pytest.fixture
def data(tmp_path):
    prefix = tmp_path / "all"
    assert run("gen-data", "--n-classes", 3, "--per-class", 30, "--dim", 8, "--out", prefix) == 0
    return tmp_path, prefix


class TestParsing:
    def test_help(self, capsys):
        with pytest.raises(SystemExit) as e:
            run("--help")
        assert e.value.code == 0
        out = capsys.readouterr().out
        for cmd in ("gen-data", "teacher", "cluster", "mask", "distill", "eval", "bench", "check-grad", "pipeline"):
            assert cmd in out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as e:
            run("--version")
        assert e.value.code == 0
        assert capsys.readouterr().out.strip() == f"brcd {__version__}"

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as e:
            run("frobnicate")
        assert e.value.code == 2

    def test_missing_required(self):
        with pytest.raises(SystemExit) as e:
            run("cluster", "--k", 3)
        assert e.value.code == 2

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "brcd", "--version"], capture_output=True, text=True)
        assert res.returncode == 0 and __version__ in res.stdout


class TestGenData:
    def test_files_and_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("gen-data", "--n-classes", 2, "--per-class", 5, "--dim", 3, "--seed", 4, "--out", a) == 0
        assert run("gen-data", "--n-classes", 2, "--per-class", 5, "--dim", 3, "--seed", 4, "--out", b) == 0
        assert (tmp_path / "a.emb").read_bytes() == (tmp_path / "b.emb").read_bytes()
        assert fileio.read_embeddings(tmp_path / "a.emb").shape == (10, 3)
        assert fileio.read_labels(tmp_path / "a.lab").tolist() == [0] * 5 + [1] * 5

    def test_refuses_overwrite(self, data, capsys):
        _, prefix = data
        assert run("gen-data", "--out", prefix) == 2
        assert "refusing to overwrite" in capsys.readouterr().err


class TestChain:
    def test_teacher_cluster_mask_distill_eval(self, data):
        tmp, prefix = data
        emb, lab = f"{prefix}.emb", f"{prefix}.lab"
        cod = tmp / "t.cod"
        assert run("teacher", "--fit", emb, "--fit-labels", lab, "--bits", 16, "--apply", f"{emb}:{cod}") == 0
        assert fileio.read_codes(cod).b == 16
        assert run("cluster", "--codes", cod, "--k", 4, "--out-labels", tmp / "c.lab",
                   "--out-centroids", tmp / "c.emb") == 0
        assert fileio.read_embeddings(tmp / "c.emb").shape == (4, 16)
        assert run("mask", "--codes", cod, "--labels", tmp / "c.lab", "--out", tmp / "m.cod",
                   "--expectations", tmp / "e.csv") == 0
        assert len(fileio.read_codes(tmp / "m.cod")) == 4
        assert read_csv(tmp / "e.csv")[0] == ["cluster", "dim", "expectation", "mask"]
        assert run("distill", "--features", emb, "--teacher", f"file:{cod}", "--bits", 16, "--M", 16,
                   "--epochs", 2, "--k", 4, "--out", tmp / "s.stu", "--log", tmp / "log.csv") == 0
        log = read_csv(tmp / "log.csv")
        assert log[0] == ["epoch", "loss", "isd", "opr"] and len(log) == 3
        arch, params = fileio.read_student(tmp / "s.stu")
        assert arch == "linear" and params["W1"].shape == (16, 8)

    def test_eval_csv(self, tmp_path, rng):
        s = rng.choice([-1, 1], size=(20, 8))
        fileio.write_codes(tmp_path / "db.cod", CodeMatrix.from_pm1(s))
        fileio.write_codes(tmp_path / "q.cod", CodeMatrix.from_pm1(s[:5]))
        fileio.write_labels(tmp_path / "db.lab", np.arange(20) % 2)
        fileio.write_labels(tmp_path / "q.lab", np.arange(5) % 2)
        code = run("eval", "--student-db", tmp_path / "db.cod", "--teacher-db", tmp_path / "db.cod",
                   "--queries", tmp_path / "q.cod", "--teacher-queries", tmp_path / "q.cod",
                   "--db-labels", tmp_path / "db.lab", "--query-labels", tmp_path / "q.lab",
                   "--K", 5, "--out", tmp_path / "r.csv")
        assert code == 0
        rows = read_csv(tmp_path / "r.csv")
        assert rows[0] == ["metric", "name", "K", "value"]
        names = {(r[0], r[1]) for r in rows[1:]}
        assert ("mAP", "SSHP") in names and ("mAP", "ASHP") in names
        isd_row = [r for r in rows[1:] if r[0] == "ISD"][0]
        assert float(isd_row[3]) == 0.0

    def test_bad_apply_pair_is_usage_error(self, data, capsys):
        _, prefix = data
        assert run("teacher", "--fit", f"{prefix}.emb", "--kind", "hyperplane", "--apply", f"{prefix}.emb") == 2
        assert "IN.emb:OUT.cod" in capsys.readouterr().err

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        missing = tmp_path / "nope.cod"
        assert run("cluster", "--codes", missing, "--k", 2, "--out-labels", tmp_path / "x.lab") == 3
        assert str(missing) in capsys.readouterr().err

    def test_corrupt_input_is_data_error(self, tmp_path):
        (tmp_path / "bad.cod").write_bytes(b"garbage!")
        assert run("cluster", "--codes", tmp_path / "bad.cod", "--k", 2, "--out-labels", tmp_path / "x.lab") == 3

    def test_bench_synthetic(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run("bench", "--synthetic", 300, 32, "--batch-sizes", "1,4", "--K", "10", "--reps", 3,
                   "--out", out) == 0
        rows = read_csv(out)
        assert rows[0] == ["N", "K", "bs1_ms", "bs4_ms"]
        assert rows[1][:2] == ["300", "10"]


class TestCheckGrad:
    def test_report_passes(self):
        rep = run_check_grad(M=4, bits=8, dim=6)
        assert max(rep.values()) < 1e-5

    def test_cli_exit_zero(self, capsys):
        assert run("check-grad", "--M", 4, "--bits", 8, "--dim", 6) == 0


class TestPipeline:
    def _config(self, tmp_path, **extra):
        body = {
            "version": 1, "workdir": "work", "n_classes": 3, "per_class": 40, "dim": 8,
            "n_train": 60, "n_query": 20, "n_db": 40, "bits": 8, "m": 16, "epochs": 2, "eval_k": 10,
        }
        body.update(extra)
        path = tmp_path / "run.ini"
        path.write_text("[run]\n" + "".join(f"{k} = {v}\n" for k, v in body.items()))
        return path

    def test_end_to_end(self, tmp_path, capsys):
        cfg = self._config(tmp_path)
        assert run("pipeline", "--config", cfg) == 0
        work = tmp_path / "work"
        for name in ("student.stu", "summary.csv", "train_log.csv", "masks.cod", "clusters.lab"):
            assert (work / name).exists()
        rows = read_csv(work / "summary.csv")
        metrics = {(r[0], r[1]) for r in rows[1:]}
        assert {("mAP", "SSHP"), ("mAP", "ASHP"), ("mAP", "teacher")} <= metrics
        assert "mAP" in capsys.readouterr().out

    def test_rerun_refuses_then_force(self, tmp_path):
        cfg = self._config(tmp_path)
        assert run("pipeline", "--config", cfg) == 0
        first = (tmp_path / "work" / "student.stu").read_bytes()
        assert run("pipeline", "--config", cfg) == 2
        assert run("pipeline", "--config", cfg, "--force") == 0
        assert (tmp_path / "work" / "student.stu").read_bytes() == first

    def test_unknown_key(self, tmp_path):
        assert run("pipeline", "--config", self._config(tmp_path, colour="red")) == 2

    def test_bad_version(self, tmp_path):
        assert run("pipeline", "--config", self._config(tmp_path, version=2)) == 2

    def test_missing_config(self, tmp_path):
        assert run("pipeline", "--config", tmp_path / "none.ini") == 3
