"""
Unit tests for the data pipeline.

Tests for:
- RGB/HSV conversion and model inputs
- Sample and dataset invariants
- Synthetic domain generation and dev-split carving
- Dataset repository (manifest + PNG layout)

Author: Facet Development
"""

import json
import logging
import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pytest

from src.config.labels import DEPTH_SIZE, LIVE, N_PARSING_CLASSES, SPOOF
from src.data.color import hsv_to_rgb, make_model_input, rgb_to_hsv
from src.data.repository import MANIFEST_NAME, list_domains, load_domain, load_domains, save_domain
from src.data.schema import FULL_PARSING_SIZE, DomainDataset, DomainShift, ImageSample, SynthConfig
from src.data.synthetic import (
    carve_dev_split,
    generate_domains,
    generate_synthetic_domain,
    label_histogram,
)
from src.utils.errors import DataError


def make_sample(label=LIVE, size=8, domain_id=0, sample_id="s0", value=0.5):
    depth = np.full((DEPTH_SIZE, DEPTH_SIZE), 0.5 if label == LIVE else 0.0, dtype=np.float32)
    return ImageSample(
        rgb=np.full((size, size, 3), value, dtype=np.float32),
        label=label,
        depth_gt=depth,
        parsing_gt=np.zeros((size, size), dtype=np.uint8),
        domain_id=domain_id,
        sample_id=sample_id,
    )


class TestColor:
    """RGB/HSV conversion."""

    def test_primary_colors(self):
        np.testing.assert_allclose(rgb_to_hsv(np.array([1.0, 0.0, 0.0])), [0.0, 1.0, 1.0])
        np.testing.assert_allclose(rgb_to_hsv(np.array([0.0, 1.0, 0.0])), [1 / 3, 1.0, 1.0])
        np.testing.assert_allclose(rgb_to_hsv(np.array([0.0, 0.0, 1.0])), [2 / 3, 1.0, 1.0])

    def test_gray_has_zero_hue_and_saturation(self):
        hsv = rgb_to_hsv(np.array([0.4, 0.4, 0.4]))
        np.testing.assert_allclose(hsv, [0.0, 0.0, 0.4])

    def test_roundtrip(self, rng):
        rgb = rng.uniform(0.0, 1.0, size=(32, 32, 3))
        np.testing.assert_allclose(hsv_to_rgb(rgb_to_hsv(rgb)), rgb, atol=1e-9)

    def test_output_range(self, rng):
        hsv = rgb_to_hsv(rng.uniform(0.0, 1.0, size=(500, 3)))
        assert hsv.min() >= 0.0 and hsv.max() <= 1.0

    def test_out_of_range_rejected(self):
        with pytest.raises(DataError):
            rgb_to_hsv(np.array([1.2, 0.0, 0.0]))
        with pytest.raises(DataError):
            rgb_to_hsv(np.array([[-0.1, 0.0, 0.0]]))

    def test_model_input_channels(self):
        sample = make_sample(size=16)
        x = make_model_input(sample)
        assert x.shape == (16, 16, 6)
        assert x.dtype == np.float32
        np.testing.assert_allclose(x[..., :3], sample.rgb)
        np.testing.assert_allclose(x[..., 3:], rgb_to_hsv(sample.rgb), atol=1e-6)

    def test_model_input_resize(self):
        x = make_model_input(make_sample(size=16), size=32)
        assert x.shape == (32, 32, 6)
        assert x.min() >= 0.0 and x.max() <= 1.0


class TestSchema(unittest.TestCase):
    """Sample and dataset invariants."""

    def test_valid_sample(self):
        sample = make_sample()
        self.assertTrue(sample.is_live)
        self.assertEqual(sample.image_size, 8)

    def test_spoof_depth_must_be_zero(self):
        with self.assertRaises(DataError):
            ImageSample(
                rgb=np.zeros((8, 8, 3), dtype=np.float32),
                label=SPOOF,
                depth_gt=np.ones((DEPTH_SIZE, DEPTH_SIZE), dtype=np.float32),
                parsing_gt=np.zeros((8, 8), dtype=np.uint8),
                domain_id=0,
            )

    def test_invalid_fields(self):
        base = dict(
            rgb=np.zeros((8, 8, 3), dtype=np.float32),
            label=LIVE,
            depth_gt=np.zeros((DEPTH_SIZE, DEPTH_SIZE), dtype=np.float32),
            parsing_gt=np.zeros((8, 8), dtype=np.uint8),
            domain_id=0,
        )
        cases = [
            {"rgb": np.full((8, 8, 3), 1.5, dtype=np.float32)},
            {"label": 2},
            {"depth_gt": np.zeros((16, 16), dtype=np.float32)},
            {"parsing_gt": np.full((8, 8), N_PARSING_CLASSES, dtype=np.uint8)},
            {"parsing_gt": np.zeros((4, 4), dtype=np.uint8)},
            {"domain_id": -1},
        ]
        for change in cases:
            with self.subTest(change=list(change)):
                with self.assertRaises(DataError):
                    ImageSample(**{**base, **change})

    def test_sample_arrays_are_read_only(self):
        sample = make_sample()
        with self.assertRaises(ValueError):
            sample.rgb[0, 0, 0] = 1.0

    def test_dataset_needs_both_labels(self):
        with self.assertRaises(DataError):
            DomainDataset(name="d", samples=(make_sample(LIVE), make_sample(LIVE, sample_id="s1")))

    def test_dataset_unknown_split(self):
        with self.assertRaises(DataError):
            DomainDataset(name="d", samples=(make_sample(LIVE), make_sample(SPOOF)), split="val")

    def test_subset_keeps_order(self):
        samples = tuple(make_sample(LIVE if i % 2 == 0 else SPOOF, sample_id=f"s{i}") for i in range(6))
        dataset = DomainDataset(name="d", samples=samples, domain_id=2)
        part = dataset.subset([4, 1, 0], split="dev")
        self.assertEqual([s.sample_id for s in part], ["s4", "s1", "s0"])
        self.assertEqual(part.split, "dev")
        self.assertEqual(part.domain_id, 2)

    def test_synth_config_validation(self):
        with self.assertRaises(DataError):
            SynthConfig(image_size=60)
        with self.assertRaises(DataError):
            SynthConfig(n_domains=1)
        with self.assertRaises(DataError):
            SynthConfig(n_domains=3, shifts=(DomainShift(),))

    def test_default_shift_table(self):
        cfg = SynthConfig(n_domains=8)
        self.assertEqual(len(cfg.shifts), 8)
        self.assertEqual(cfg.shifts[0], cfg.shifts[6])


class TestSyntheticDomains:
    """Synthetic generator."""

    @pytest.fixture(scope="class")
    def cfg(self):
        return SynthConfig(image_size=32, n_domains=3, samples_per_domain=12, seed=5)

    def test_balanced_and_valid(self, cfg):
        dataset = generate_synthetic_domain(cfg, 1)
        assert dataset.name == "synth1"
        assert dataset.domain_id == 1
        assert len(dataset) == 12
        assert dataset.n_live == dataset.n_spoof == 6
        for sample in dataset:
            assert sample.rgb.shape == (32, 32, 3)
            assert sample.depth_gt.shape == (DEPTH_SIZE, DEPTH_SIZE)
            assert sample.domain_id == 1

    def test_spoof_depth_zero_live_depth_positive(self, cfg):
        dataset = generate_synthetic_domain(cfg, 0)
        for sample in dataset:
            if sample.is_live:
                assert sample.depth_gt.max() > 0.5
            else:
                assert not sample.depth_gt.any()

    def test_every_parsing_label_present_in_live_renders(self, cfg):
        assert cfg.covers_all_parsing_labels
        dataset = generate_synthetic_domain(cfg, 0)
        for sample in dataset:
            if sample.is_live:
                counts = label_histogram(sample.parsing_gt)
                assert all(counts[label] > 0 for label in range(N_PARSING_CLASSES))

    def test_small_images_accepted_with_warning(self, caplog):
        small = SynthConfig(image_size=16, n_domains=2, samples_per_domain=4, seed=5)
        assert not small.covers_all_parsing_labels
        assert FULL_PARSING_SIZE == 32

        with caplog.at_level(logging.WARNING, logger="src.data.synthetic"):
            domains = generate_domains(small)
        assert "may miss some labels" in caplog.text
        for sample in domains[0]:
            assert sample.parsing_gt.shape == (16, 16)
            assert sample.parsing_gt.max() < N_PARSING_CLASSES

    def test_deterministic(self, cfg):
        first = generate_synthetic_domain(cfg, 2)
        second = generate_synthetic_domain(cfg, 2)
        assert first.samples == second.samples

    def test_independent_of_worker_count(self, cfg):
        serial = generate_domains(cfg, workers=1)
        parallel = generate_domains(cfg, workers=3)
        assert [d.name for d in serial] == ["synth0", "synth1", "synth2"]
        for a, b in zip(serial, parallel):
            assert a.samples == b.samples

    def test_domains_differ(self, cfg):
        a, b = generate_domains(cfg)[:2]
        mean_a = np.mean([s.rgb.mean(axis=(0, 1)) for s in a], axis=0)
        mean_b = np.mean([s.rgb.mean(axis=(0, 1)) for s in b], axis=0)
        assert np.abs(mean_a - mean_b).max() > 0.01

    def test_different_seed_changes_images(self, cfg):
        other = SynthConfig(image_size=32, n_domains=3, samples_per_domain=12, seed=6)
        a = generate_synthetic_domain(cfg, 0)
        b = generate_synthetic_domain(other, 0)
        assert not np.array_equal(a.samples[0].rgb, b.samples[0].rgb)

    def test_carve_dev_split(self, cfg):
        dataset = generate_synthetic_domain(cfg, 0)
        train, dev = carve_dev_split(dataset, fraction=0.25, seed=1)
        assert len(train) + len(dev) == len(dataset)
        assert train.split == "train" and dev.split == "dev"
        assert dev.n_live >= 1 and dev.n_spoof >= 1
        assert train.n_live >= 1 and train.n_spoof >= 1
        ids = {s.sample_id for s in train} | {s.sample_id for s in dev}
        assert len(ids) == len(dataset)

        again_train, again_dev = carve_dev_split(dataset, fraction=0.25, seed=1)
        assert [s.sample_id for s in again_dev] == [s.sample_id for s in dev]

    def test_carve_dev_split_rejects_bad_fraction(self, cfg):
        dataset = generate_synthetic_domain(cfg, 0)
        with pytest.raises(DataError):
            carve_dev_split(dataset, fraction=1.0)


class TestRepository(unittest.TestCase):
    """On-disk dataset layout."""

    @classmethod
    def setUpClass(cls):
        cfg = SynthConfig(image_size=16, n_domains=2, samples_per_domain=8, seed=3)
        cls.domains = generate_domains(cfg)

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_save_load_roundtrip_is_exact(self):
        dataset = self.domains[0]
        save_domain(dataset, self.temp_dir)
        loaded = load_domain(Path(self.temp_dir) / dataset.name, split="train")
        self.assertEqual(loaded.name, dataset.name)
        self.assertEqual(loaded.domain_id, dataset.domain_id)
        self.assertEqual(loaded.samples, dataset.samples)

    def test_layout(self):
        domain_dir = save_domain(self.domains[0], self.temp_dir)
        for sub in ("images", "depth", "parsing"):
            self.assertTrue((domain_dir / sub).is_dir())
        with open(domain_dir / MANIFEST_NAME) as f:
            manifest = json.load(f)
        self.assertEqual(manifest["domain"], "synth0")
        self.assertEqual(len(manifest["records"]), 8)
        record = manifest["records"][0]
        self.assertEqual(set(record), {"id", "split", "label", "image", "depth", "parsing"})

    def test_append_splits(self):
        train, dev = carve_dev_split(self.domains[0], fraction=0.25)
        save_domain(train, self.temp_dir)
        domain_dir = save_domain(dev, self.temp_dir, append=True)

        self.assertEqual(len(load_domain(domain_dir, "train")), len(train))
        self.assertEqual(len(load_domain(domain_dir, "dev")), len(dev))
        everything = load_domain(domain_dir)
        self.assertEqual(everything.split, "test")
        self.assertEqual(len(everything), len(self.domains[0]))

    def test_missing_file_names_sample(self):
        domain_dir = save_domain(self.domains[0], self.temp_dir)
        victim = self.domains[0].samples[3].sample_id
        (domain_dir / "depth" / f"{victim}.png").unlink()
        with self.assertRaises(DataError) as ctx:
            load_domain(domain_dir)
        self.assertIn(victim, str(ctx.exception))

    def test_missing_manifest(self):
        with self.assertRaises(DataError):
            load_domain(Path(self.temp_dir) / "nothing")

    def test_malformed_manifest(self):
        domain_dir = save_domain(self.domains[0], self.temp_dir)
        (domain_dir / MANIFEST_NAME).write_text(json.dumps({"domain": "synth0", "records": [{"id": "x"}]}))
        with self.assertRaises(DataError):
            load_domain(domain_dir)

    def test_unknown_split(self):
        domain_dir = save_domain(self.domains[0], self.temp_dir)
        with self.assertRaises(DataError):
            load_domain(domain_dir, split="dev")

    def test_list_and_load_many(self):
        for dataset in self.domains:
            save_domain(dataset, self.temp_dir)
        names = list_domains(self.temp_dir)
        self.assertEqual(names, ["synth0", "synth1"])
        loaded = load_domains(self.temp_dir, names, "train", workers=2)
        self.assertEqual([d.name for d in loaded], names)
        self.assertEqual(list_domains(Path(self.temp_dir) / "absent"), [])


if __name__ == '__main__':
    unittest.main()
