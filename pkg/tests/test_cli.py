"""
End-to-end tests of the command-line entry point on a tiny synthetic setup.

Author: Facet Development
"""

import json

import pandas as pd
import pytest

from src.cli import main, resolve_dev_domains, resolve_train_domains
from src.config.run_config import RunConfig
from src.evaluation.metrics import EvalReport
from src.meta.training_log import TrainingLog
from src.utils.errors import ConfigError

TINY_SETTINGS = [
    "synth.image_size=16",
    "synth.n_domains=3",
    "synth.samples_per_domain=16",
    "data.image_size=16",
    "data.test_domain=synth2",
    "network.widths=[4,8,8]",
    "network.asc_channels=4",
    "network.meta_hidden=8",
    "meta.iterations=2",
    "meta.batch_size=6",
    "meta.checkpoint_every=1",
]


def cli_args(root, *extra):
    settings = TINY_SETTINGS + [f"data.root={root / 'data'}", f"output_dir={root / 'run'}"]
    args = []
    for item in settings:
        args += ["--set", item]
    return args + list(extra)


def without_test_domain(args):
    index = args.index("data.test_domain=synth2")
    return args[:index - 1] + args[index + 1:]


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth"] + cli_args(root)) == 0
    assert main(["train"] + cli_args(root)) == 0
    return root


class TestSynth:

    def test_writes_domains_with_splits(self, trained_run):
        data = trained_run / "data"
        assert sorted(p.name for p in data.iterdir()) == ["synth0", "synth1", "synth2"]
        assert (data / "synth0" / "manifest.json").exists()

    def test_non_empty_root_needs_force(self, tmp_path, capsys):
        assert main(["synth"] + cli_args(tmp_path)) == 0
        capsys.readouterr()
        assert main(["synth"] + cli_args(tmp_path)) == 2
        assert "--force" in capsys.readouterr().err
        assert main(["synth", "--force"] + cli_args(tmp_path)) == 0

    def test_force_keeps_unrelated_files(self, tmp_path):
        notes = tmp_path / "data" / "notes.txt"
        notes.parent.mkdir(parents=True)
        notes.write_text("keep", encoding="utf-8")
        assert main(["synth", "--force"] + cli_args(tmp_path)) == 0
        assert notes.read_text(encoding="utf-8") == "keep"


class TestTrain:

    def test_run_directory(self, trained_run):
        run = trained_run / "run"
        assert (run / "config.json").exists()
        assert (run / "training_curves.png").exists()
        assert len(TrainingLog(run / "train_log.jsonl").read()) == 2

        saved = json.loads((run / "config.json").read_text(encoding="utf-8"))
        assert saved["meta.iterations"] == 2
        assert saved["data.test_domain"] == "synth2"

    def test_no_domains_is_a_data_error(self, tmp_path, capsys):
        assert main(["train"] + cli_args(tmp_path)) == 3
        assert "✗" in capsys.readouterr().err

    def test_needs_a_held_out_domain(self, trained_run, capsys):
        assert main(["train"] + without_test_domain(cli_args(trained_run))) == 2
        assert "held-out" in capsys.readouterr().err


class TestEval:

    def test_report_written(self, trained_run, capsys):
        assert main(["eval"] + cli_args(trained_run)) == 0
        assert "AUC" in capsys.readouterr().out

        report = EvalReport.load(trained_run / "run" / "eval_report.json")
        assert report.domain == "synth2"
        assert len(report.scores) == 16
        assert report.hter == (report.far + report.frr) / 2
        assert (trained_run / "run" / "eval_report.png").exists()

    def test_explicit_domains_and_output(self, trained_run, tmp_path):
        output = tmp_path / "reports" / "synth0.json"
        args = ["eval", "--test-domain", "synth0", "--dev-domains", "synth1,synth2", "--output", str(output)]
        assert main(args + cli_args(trained_run)) == 0
        assert EvalReport.load(output).domain == "synth0"

    def test_missing_test_domain(self, trained_run):
        assert main(["eval"] + without_test_domain(cli_args(trained_run))) == 2

    def test_unknown_test_domain(self, trained_run):
        assert main(["eval", "--test-domain", "synth9"] + cli_args(trained_run)) == 3

    def test_dev_domains_never_include_test_domain(self, trained_run):
        cfg = RunConfig.load(overrides=[f"data.root={trained_run / 'data'}"])
        assert cfg.data.test_domain is None
        assert resolve_dev_domains(cfg, "synth2") == ["synth0", "synth1"]
        assert resolve_train_domains(cfg, exclude="synth0") == ["synth1", "synth2"]

        configured = cfg.with_overrides({"data.test_domain": "synth2"})
        assert resolve_dev_domains(configured, "synth0") == ["synth1", "synth2"]

        listed = cfg.with_overrides({"data.train_domains": ["synth0", "synth1", "synth2"]})
        assert resolve_dev_domains(listed, "synth1") == ["synth0", "synth2"]

        with pytest.raises(ConfigError):
            resolve_dev_domains(cfg, "synth2", override="synth1,synth2")

    def test_test_domain_from_flag_only(self, trained_run, tmp_path):
        output = tmp_path / "synth2.json"
        args = ["eval", "--test-domain", "synth2", "--output", str(output)]
        assert main(args + without_test_domain(cli_args(trained_run))) == 0
        assert EvalReport.load(output).domain == "synth2"

    def test_dev_flag_with_test_domain_rejected(self, trained_run):
        args = ["eval", "--dev-domains", "synth0,synth2"]
        assert main(args + cli_args(trained_run)) == 2


class TestExport:

    def test_embeddings(self, trained_run, tmp_path):
        output = tmp_path / "exports"
        assert main(["export", "--splits", "train,dev", "--output", str(output)] + cli_args(trained_run)) == 0

        train_frame = pd.read_csv(output / "embeddings_train.csv")
        dev_frame = pd.read_csv(output / "embeddings_dev.csv")
        assert len(train_frame) + len(dev_frame) == 3 * 16
        assert list(train_frame.columns) == ["domain", "label"] + [f"e{i}" for i in range(8)]
        assert sorted(train_frame["domain"].unique()) == [0, 1, 2]

    def test_gradcam(self, trained_run, tmp_path):
        output = tmp_path / "exports"
        args = ["export", "--kind", "gradcam", "--domains", "synth0", "--splits", "test",
                "--limit", "2", "--target", "spoof", "--output", str(output)]
        assert main(args + cli_args(trained_run)) == 0
        assert len(list((output / "gradcam" / "synth0" / "test").glob("*.png"))) == 2


class TestConfigHandling:

    def test_print_config(self, tmp_path, capsys):
        assert main(["train", "--print-config"] + cli_args(tmp_path)) == 0
        flat = json.loads(capsys.readouterr().out)
        assert flat["meta.iterations"] == 2
        assert flat["network.widths"] == [4, 8, 8]
        assert not (tmp_path / "run").exists()

    def test_unknown_key(self, tmp_path, capsys):
        assert main(["train", "--set", "meta.itertions=3"] + cli_args(tmp_path)) == 2
        assert "itertions" in capsys.readouterr().err

    def test_invalid_value(self, tmp_path):
        assert main(["train", "--set", "data.dev_fraction=1.5"] + cli_args(tmp_path)) == 2

    def test_unknown_variant(self, tmp_path):
        assert main(["benchmark", "--variants", "no_depth"] + cli_args(tmp_path)) == 2


@pytest.mark.slow
class TestBenchmarkCommand:

    def test_benchmark_writes_summary(self, tmp_path):
        args = ["benchmark", "--variants", "full,no_meta", "--seeds", "0", "--held-out", "synth2"]
        assert main(args + cli_args(tmp_path)) == 0

        results = pd.read_csv(tmp_path / "run" / "benchmark" / "results.csv")
        assert sorted(results["variant"]) == ["full", "no_meta"]
        assert set(results["protocol"]) == {"synth0&synth1 to synth2"}
        assert "Median over seeds" in (tmp_path / "run" / "benchmark" / "summary.md").read_text(encoding="utf-8")
