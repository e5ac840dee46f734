import json
import subprocess
import sys

import pytest

from probecast.cli import dispatch

MIB = 1 << 20


def run_cli(*argv):
    return subprocess.run([sys.executable, "-m", "probecast", *map(str, argv)],
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "synth.csv"
    assert dispatch(["synth", "--oracle", "poly2", "--n", "80", "--seed", "3",
                     "--out", str(path)]) == 0
    return path


class TestExitCodes:
    def test_unknown_subcommand_exits_2(self):
        r = run_cli("frobnicate")
        assert r.returncode == 2
        assert "usage" in (r.stderr + r.stdout).lower()

    def test_help_exits_0(self):
        r = run_cli("--help")
        assert r.returncode == 0
        for sub in ("probe", "train", "balance", "kernel"):
            assert sub in r.stdout

    def test_every_subcommand_has_help(self):
        for sub in ("probe", "profile", "collect", "train", "search", "predict",
                    "eval", "synth", "load", "kernel", "balance"):
            r = run_cli(sub, "--help")
            assert r.returncode == 0, sub

    def test_runtime_failure_exits_1_with_one_line(self, tmp_path):
        r = run_cli("eval", "--model", tmp_path / "missing.model",
                    "--data", tmp_path / "missing.csv")
        assert r.returncode == 1
        assert len(r.stderr.strip().split("\n")) == 1


class TestProbeCommands:
    def test_probe_prints_csv_row(self, tmp_path, capsys):
        code = dispatch(["probe", "--kind", "cpu", "--duration", "0.3",
                         "--workers", "1"])
        out = capsys.readouterr().out.strip()
        assert code == 0
        kind, workers, count, elapsed = out.split(",")
        assert kind == "cpu" and int(count) > 0 and 0.3 <= float(elapsed) <= 0.8

    def test_profile_prints_counters(self, tmp_path, capsys):
        code = dispatch(["profile", "--window", "0.2", "--workers", "1",
                         "--disk-workers", "1",
                         "--mem-array-bytes", str(8 * MIB),
                         "--disk-file-bytes", str(MIB),
                         "--disk-path", str(tmp_path / "p.bin")])
        out = capsys.readouterr().out.strip()
        assert code == 0
        fields = out.split(",")
        assert len(fields) == 5 and all(int(c) > 0 for c in fields[2:])


class TestTrainEvalPredict:
    def test_train_writes_model_and_summaries(self, synth_csv, tmp_path, capsys):
        out = tmp_path / "m.model"
        code = dispatch(["train", "--model", "ridge", "--data", str(synth_csv),
                         "--out", str(out)])
        printed = capsys.readouterr().out
        assert code == 0 and out.exists()
        assert printed.startswith("model,mean,p95,std,count")
        assert "ridge-train" in printed and "ridge-test" in printed

    def test_eval_reports_summary(self, synth_csv, tmp_path, capsys):
        model = tmp_path / "m.model"
        dispatch(["train", "--model", "ridge", "--data", str(synth_csv),
                  "--out", str(model)])
        capsys.readouterr()
        code = dispatch(["eval", "--model", str(model), "--data", str(synth_csv),
                         "--split", "test"])
        printed = capsys.readouterr().out
        assert code == 0 and "ridge-test" in printed

    def test_predict_from_counters(self, synth_csv, tmp_path, capsys):
        model = tmp_path / "m.model"
        dispatch(["train", "--model", "ridge", "--data", str(synth_csv),
                  "--out", str(model)])
        capsys.readouterr()
        code = dispatch(["predict", "--model", str(model),
                         "--from-counters", "1500000000,200000000,150000"])
        printed = capsys.readouterr().out.strip()
        assert code == 0 and float(printed) > 0

    def test_config_file_supplies_defaults(self, synth_csv, tmp_path, capsys):
        model = tmp_path / "m.model"
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps(
            {"train": {"model": "ridge", "data": str(synth_csv), "out": str(model)}}))
        code = dispatch(["--config", str(conf), "train"])
        capsys.readouterr()
        assert code == 0 and model.exists()


class TestReproducibility:
    def test_synth_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert dispatch(["synth", "--oracle", "exp", "--n", "50",
                             "--seed", "11", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_train_byte_identical(self, synth_csv, tmp_path):
        a, b = tmp_path / "a.model", tmp_path / "b.model"
        for out in (a, b):
            assert dispatch(["train", "--model", "mlp", "--layers", "6,4",
                             "--epochs", "30", "--seed", "5",
                             "--data", str(synth_csv), "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_search_byte_identical(self, synth_csv, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert dispatch(["search", "--method", "tpe", "--budget", "12",
                             "--seed", "2", "--epochs", "15",
                             "--data", str(synth_csv), "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_balance_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert dispatch(["balance", "--scenario", "builtin:asymmetric",
                             "--policy", "queue", "--seed", "1",
                             "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestKernelCommand:
    def test_kernel_prints_elapsed(self, capsys):
        code = dispatch(["kernel", "--work-units", "1",
                         "--array-bytes", str(8 * MIB)])
        printed = capsys.readouterr().out.strip()
        assert code == 0 and float(printed) > 0


class TestLoadCommand:
    def test_load_runs_for_duration(self):
        code = dispatch(["load", "--kind", "cpu", "--intensity", "1",
                         "--duration", "0.3"])
        assert code == 0
