"""
Unit tests for the training loop and the training log.

Author: Facet Development
"""

import json
import shutil
import tempfile
import unittest
from pathlib import Path

import torch

from src.data.schema import SynthConfig
from src.data.synthetic import generate_domains
from src.losses.objectives import LossWeights
from src.meta.engine import MetaConfig
from src.meta.trainer import CHECKPOINT_DIR, FINAL_CHECKPOINT, LOG_NAME, periodic_checkpoint_path, train
from src.meta.training_log import TrainingLog, TrainingRecord
from src.network.checkpoint import load_checkpoint, read_checkpoint_meta
from src.network.model import NetworkConfig, build_model
from src.utils.errors import DataError

TINY = NetworkConfig(widths=(4, 8, 8), asc_channels=4, meta_hidden=8)


def _state(model):
    return {k: v.detach().clone() for k, v in model.state_dict().items()}


class TestTrainer(unittest.TestCase):
    """Test cases for train()"""

    @classmethod
    def setUpClass(cls):
        cls.domains = generate_domains(SynthConfig(image_size=16, n_domains=3, samples_per_domain=16, seed=0))

    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = tempfile.mkdtemp()
        self.root = Path(self.temp_dir)

    def tearDown(self):
        """Clean up test fixtures"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _train(self, name, iterations=4, seed=0, **kwargs):
        meta_cfg = MetaConfig(iterations=iterations, batch_size=6, checkpoint_every=kwargs.pop("every", 2),
                              switch_iteration=kwargs.pop("switch", None))
        return train(self.domains, TINY, meta_cfg, LossWeights(), seed=seed,
                     output_dir=self.root / name, show_progress=False, **kwargs)

    def test_zero_iterations_keeps_initialization(self):
        result = self._train("zero", iterations=0)

        self.assertEqual(result.step, 0)
        self.assertIsNone(result.last_report)
        self.assertEqual(TrainingLog(result.log_path).read(), [])

        initial = _state(build_model(TINY, seed=0))
        restored = load_checkpoint(result.checkpoint_dir, expected=TINY).model.state_dict()
        for key, value in initial.items():
            self.assertTrue(torch.equal(restored[key], value), key)

    def test_run_layout(self):
        result = self._train("layout", iterations=4, every=2)
        run = self.root / "layout"

        self.assertEqual(result.log_path, run / LOG_NAME)
        self.assertEqual(result.checkpoint_dir, run / FINAL_CHECKPOINT)
        self.assertTrue((run / CHECKPOINT_DIR / "step_000002").is_dir())
        self.assertTrue(periodic_checkpoint_path(run, 4).is_dir())
        self.assertEqual(read_checkpoint_meta(periodic_checkpoint_path(run, 2))["step"], 2)
        self.assertEqual(read_checkpoint_meta(result.checkpoint_dir)["step"], 4)
        self.assertEqual(len(TrainingLog(result.log_path).read()), 4)

    def test_same_seed_is_reproducible(self):
        a = self._train("a", iterations=3, seed=7)
        b = self._train("b", iterations=3, seed=7)

        self.assertEqual(TrainingLog(a.log_path).deterministic_view(),
                         TrainingLog(b.log_path).deterministic_view())
        for key, value in a.model.state_dict().items():
            self.assertTrue(torch.equal(b.model.state_dict()[key], value), key)

    def test_different_seeds_differ(self):
        a = self._train("a", iterations=2, seed=1)
        b = self._train("b", iterations=2, seed=2)
        self.assertNotEqual(TrainingLog(a.log_path).deterministic_view(),
                            TrainingLog(b.log_path).deterministic_view())

    def test_mining_schedule_switches_at_configured_iteration(self):
        result = self._train("schedule", iterations=4, switch=2)
        records = TrainingLog(result.log_path).read()

        self.assertEqual([r.mining_mode for r in records], ["batch_all", "batch_all", "batch_hard", "batch_hard"])
        self.assertEqual([r.margin for r in records], [0.1, 0.1, 0.3, 0.3])
        self.assertEqual([r.iteration for r in records], [0, 1, 2, 3])

    def test_log_records_losses_and_grad_norms(self):
        result = self._train("records", iterations=1)
        record = TrainingLog(result.log_path).read()[0]

        self.assertEqual(set(record.grad_norms), {"theta_F", "theta_D", "theta_S", "theta_M"})
        self.assertEqual(set(record.losses), {"total", "mtrn", "mtst"})
        self.assertAlmostEqual(record.losses["total"], result.last_report.total)
        self.assertGreaterEqual(record.wall_time, 0.0)

    def test_resume_reproduces_uninterrupted_run(self):
        full = self._train("full", iterations=4, every=2, switch=3)

        shutil.copytree(self.root / "full", self.root / "resumed")
        resume_from = periodic_checkpoint_path(self.root / "resumed", 2)
        resumed = self._train("resumed", iterations=4, every=2, switch=3, resume_from=resume_from)

        self.assertEqual(TrainingLog(full.log_path).deterministic_view(),
                         TrainingLog(resumed.log_path).deterministic_view())
        for key, value in full.model.state_dict().items():
            self.assertTrue(torch.equal(resumed.model.state_dict()[key], value), key)

    def test_config_stored_in_checkpoint(self):
        result = self._train("cfg", iterations=1, config={"meta.iterations": 1})
        self.assertEqual(read_checkpoint_meta(result.checkpoint_dir)["config"], {"meta.iterations": 1})

    def test_single_domain_rejected(self):
        with self.assertRaises(DataError):
            train(self.domains[:1], TINY, MetaConfig(iterations=1, batch_size=6),
                  output_dir=self.root / "one", show_progress=False)


class TestTrainingLog(unittest.TestCase):
    """Test cases for TrainingLog"""

    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = tempfile.mkdtemp()
        self.log = TrainingLog(Path(self.temp_dir) / "run" / "train_log.jsonl")

    def tearDown(self):
        """Clean up test fixtures"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _record(self, iteration, total, mode="batch_all", wall_time=0.5):
        return TrainingRecord(
            iteration=iteration,
            losses={"total": total,
                    "mtrn": {"cls": total / 2, "trip": 0.1, "total": total / 2},
                    "mtst": {"cls": total / 4, "dep": 0.01, "total": total / 2}},
            margin=0.1 if mode == "batch_all" else 0.3,
            mining_mode=mode,
            grad_norms={"theta_F": 1.0, "theta_M": 2.0},
            wall_time=wall_time,
        )

    def test_append_and_read(self):
        self.log.reset()
        for i in range(3):
            self.log.append(self._record(i, 1.0 + i))

        records = self.log.read()
        self.assertEqual(len(records), 3)
        self.assertEqual(records[2], self._record(2, 3.0))

        with open(self.log.path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertEqual(json.loads(lines[0])["iteration"], 0)

    def test_missing_file_reads_empty(self):
        self.assertEqual(self.log.read(), [])
        self.assertTrue(self.log.to_frame().empty)
        self.assertEqual(self.log.generate_report(), "No training iterations recorded yet.")

    def test_deterministic_view_ignores_wall_time(self):
        other = TrainingLog(Path(self.temp_dir) / "other.jsonl")
        self.log.reset()
        other.reset()
        self.log.append(self._record(0, 1.0, wall_time=0.1))
        other.append(self._record(0, 1.0, wall_time=9.9))

        self.assertEqual(self.log.deterministic_view(), other.deterministic_view())
        self.assertNotIn("wall_time", self.log.deterministic_view()[0])

    def test_truncate(self):
        self.log.reset()
        for i in range(5):
            self.log.append(self._record(i, float(i)))
        self.log.truncate(2)
        self.assertEqual([r.iteration for r in self.log.read()], [0, 1])

    def test_frame_and_summary(self):
        self.log.reset()
        for i in range(4):
            self.log.append(self._record(i, float(i + 1), "batch_all" if i < 2 else "batch_hard"))

        frame = self.log.to_frame()
        for column in ("iteration", "total", "mtrn_cls", "mtst_dep", "grad_theta_M", "mining_mode"):
            self.assertIn(column, frame.columns)
        self.assertEqual(frame["mtrn_cls"].tolist(), [0.5, 1.0, 1.5, 2.0])

        summary = self.log.summary(window=2)
        self.assertEqual(summary["total"].tolist(), [1.0, 1.5, 2.5, 3.5])
        self.assertNotIn("grad_theta_M", summary.columns)

        report = self.log.generate_report()
        self.assertIn("Iterations: 4", report)
        self.assertIn("batch_hard at iteration 2", report)


if __name__ == '__main__':
    unittest.main()
