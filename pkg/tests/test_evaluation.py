"""
Unit tests for evaluation: metrics, scoring and Grad-CAM saliency.

Author: Facet Development
"""

import json
import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pytest
import torch
import torch.nn as nn

from src.evaluation.grad_cam import grad_cam
from src.evaluation.metrics import (
    EvalReport,
    auc,
    candidate_thresholds,
    hter,
    optimal_threshold,
    roc_points,
    select_threshold,
)
from src.evaluation.scoring import evaluate_domain, score_domain
from src.network.model import NetworkConfig, build_model
from src.utils.errors import DataError

TINY = NetworkConfig(widths=(4, 8, 8), asc_channels=4, meta_hidden=8)


def random_case(rng, n, ties=False):
    scores = rng.uniform(size=n)
    if ties:
        scores = np.round(scores, 1)
    labels = rng.integers(0, 2, size=n)
    labels[0], labels[1] = 1, 0
    return scores, labels


def pair_counting_auc(scores, labels):
    live = [s for s, y in zip(scores, labels) if y == 1]
    spoof = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for a in live:
        for b in spoof:
            wins += 1.0 if a > b else 0.5 if a == b else 0.0
    return wins / (len(live) * len(spoof))


def counting_hter(scores, labels, threshold):
    live = [s for s, y in zip(scores, labels) if y == 1]
    spoof = [s for s, y in zip(scores, labels) if y == 0]
    far = sum(1 for s in spoof if s >= threshold) / len(spoof)
    frr = sum(1 for s in live if s < threshold) / len(live)
    return far, frr, (far + frr) / 2


class TestAuc:

    def test_perfect_separation(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
        assert auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0

    def test_chance_level(self, rng):
        scores = rng.uniform(size=20_000)
        labels = rng.integers(0, 2, size=20_000)
        assert abs(auc(scores, labels) - 0.5) < 0.02

    def test_eight_point_oracle(self):
        scores = [0.3, 0.7, 0.7, 0.1, 0.9, 0.5, 0.3, 0.2]
        labels = [1, 1, 0, 0, 1, 0, 0, 1]
        assert auc(scores, labels) == pair_counting_auc(scores, labels)

    def test_matches_pair_counting(self, rng):
        for i in range(500):
            scores, labels = random_case(rng, int(rng.integers(2, 30)), ties=i % 2 == 0)
            assert auc(scores, labels) == pytest.approx(pair_counting_auc(scores, labels), abs=1e-12)

    def test_rank_invariance(self, rng):
        scores, labels = random_case(rng, 40)
        base = auc(scores, labels)
        for _ in range(50):
            k, shift = rng.uniform(0.5, 5.0), rng.uniform(-1.0, 1.0)
            transform = [
                lambda s: np.exp(k * s) + shift,
                lambda s: k * s ** 3 + s,
                lambda s: np.arctan(k * (s - 0.5)),
            ][int(rng.integers(3))]
            assert auc(transform(scores), labels) == base

    def test_label_flip(self, rng):
        for _ in range(20):
            scores, labels = random_case(rng, 25)
            assert auc(scores, 1 - labels) == pytest.approx(1 - auc(scores, labels), abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 1])
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1])
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 2])


class TestHter:

    def test_separated_clusters(self):
        assert hter([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0], 0.5) == (0.0, 0.0, 0.0)

    def test_threshold_below_all_scores(self):
        assert hter([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0], 0.0) == (1.0, 0.0, 0.5)

    def test_tie_counts_as_live(self):
        far, frr, _ = hter([0.5, 0.5], [1, 0], 0.5)
        assert (far, frr) == (1.0, 0.0)

    def test_matches_counting(self, rng):
        for _ in range(500):
            scores, labels = random_case(rng, 10, ties=True)
            threshold = float(rng.uniform())
            np.testing.assert_allclose(hter(scores, labels, threshold),
                                       counting_hter(scores, labels, threshold), atol=1e-12, rtol=0)

    def test_single_label_rejected(self):
        with pytest.raises(ValueError):
            hter([0.1, 0.2], [0, 0], 0.5)


class TestThresholds:

    def test_candidates(self):
        t = candidate_thresholds([0.1, 0.9, 0.9, 0.5])
        assert len(t) == 4
        assert t[0] < 0.1 and t[-1] > 0.9
        np.testing.assert_allclose(t[1:3], [0.3, 0.7])

    def test_midpoint(self):
        assert select_threshold([0.9, 0.9, 0.1, 0.1], [1, 1, 0, 0]) == pytest.approx(0.5)

    def test_equal_error_point_of_balanced_dev(self, rng):
        for _ in range(100):
            n = 2 * int(rng.integers(2, 20))
            scores = rng.uniform(size=n)
            labels = np.array([1] * (n // 2) + [0] * (n // 2))
            rng.shuffle(labels)
            far, frr, half_total = hter(scores, labels, select_threshold(scores, labels))
            assert abs(far - frr) <= 1 / n + 1e-12
            assert half_total == pytest.approx((far + frr) / 2)

    def test_optimal_threshold_sweep_property(self, rng):
        for _ in range(50):
            scores, labels = random_case(rng, 20, ties=True)
            _, best = optimal_threshold(scores, labels)
            for t in list(candidate_thresholds(scores)) + list(rng.uniform(-0.5, 1.5, size=10)):
                assert best <= hter(scores, labels, t)[2] + 1e-12

    def test_roc_points(self):
        roc = roc_points([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0])
        assert set(roc) == {"fpr", "tpr", "thresholds"}
        assert roc["fpr"][0] == 0.0 and roc["fpr"][-1] == 1.0
        assert roc["tpr"][-1] == 1.0


class TestEvalReport(unittest.TestCase):
    """Test cases for EvalReport"""

    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = tempfile.mkdtemp()
        self.report = EvalReport.build([0.9, 0.6, 0.4, 0.2, 0.7], [1, 1, 0, 0, 0], 0.5, domain="synth3")

    def tearDown(self):
        """Clean up test fixtures"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_build(self):
        self.assertEqual(self.report.far, 1 / 3)
        self.assertEqual(self.report.frr, 0.0)
        self.assertEqual(self.report.hter, (self.report.far + self.report.frr) / 2)
        self.assertAlmostEqual(self.report.auc, 5 / 6)
        self.assertIsNone(self.report.roc["thresholds"][0])

    def test_save_and_load(self):
        path = self.report.save(Path(self.temp_dir) / "nested" / "eval_report.json")
        loaded = EvalReport.load(path)
        self.assertEqual(loaded, self.report)

    def test_load_rejects_inconsistent_report(self):
        path = Path(self.temp_dir) / "bad.json"
        data = self.report.to_dict()
        data["hter"] = 0.4
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        with self.assertRaises(ValueError):
            EvalReport.load(path)

    def test_save_rejects_invalid_report(self):
        self.report.labels = [1, 1, 0, 0]
        with self.assertRaises(ValueError):
            self.report.save(Path(self.temp_dir) / "eval_report.json")


class TestScoring:

    @pytest.fixture(scope="class")
    def model(self):
        return build_model(TINY, seed=0)

    def test_one_score_per_sample(self, model, tiny_domains):
        scores, labels = score_domain(model, tiny_domains[0], batch_size=5)
        assert scores.shape == (16,) and scores.dtype == np.float64
        assert np.all((scores > 0) & (scores < 1))
        np.testing.assert_array_equal(labels, tiny_domains[0].labels)

    def test_duplicated_and_shuffled_samples(self, model, tiny_domains):
        samples = tiny_domains[0].samples
        twice, _ = score_domain(model, [samples[3], samples[3]])
        assert twice[0] == pytest.approx(twice[1], abs=1e-7)

        order = np.random.default_rng(0).permutation(len(samples))
        base, _ = score_domain(model, samples)
        shuffled, _ = score_domain(model, [samples[i] for i in order])
        np.testing.assert_allclose(np.sort(shuffled), np.sort(base), atol=1e-6)

    def test_empty_dataset(self, model):
        with pytest.raises(DataError):
            score_domain(model, [])

    def test_evaluate_domain(self, model, tiny_domains):
        report = evaluate_domain(model, tiny_domains[2], tiny_domains[:2])
        assert report.domain == tiny_domains[2].name
        assert len(report.scores) == len(tiny_domains[2])
        assert report.hter == (report.far + report.frr) / 2

    def test_evaluate_needs_dev(self, model, tiny_domains):
        with pytest.raises(DataError):
            evaluate_domain(model, tiny_domains[2], [])


class HandCamNet(nn.Module):
    """Feature map = scale * x[:, :2]; logit = w . spatial mean of the feature map."""

    def __init__(self, w=(2.0, -1.0), connected=True):
        super().__init__()
        self.scale = nn.Parameter(torch.ones(()))
        self.w = nn.Parameter(torch.tensor(w))
        self.bias = nn.Parameter(torch.zeros(()))
        self.connected = connected

    def gradcam_forward(self, x):
        feature = self.scale * x[:, :2]
        if not self.connected:
            return feature, self.bias.reshape(1)
        logit = (feature.mean(dim=(2, 3)) * self.w).sum(dim=1) + self.bias
        return feature, logit


class TestGradCam:

    def test_hand_computation(self):
        x = torch.rand(1, 2, 4, 4, generator=torch.Generator().manual_seed(0))
        a0, a1 = x[0, 0], x[0, 1]

        live = torch.relu(2 * a0 - a1)
        np.testing.assert_allclose(grad_cam(HandCamNet(), x, "live"), (live / live.max()).numpy(), atol=1e-6)

        spoof = torch.relu(a1 - 2 * a0)
        if spoof.max() > 0:
            expected = (spoof / spoof.max()).numpy()
        else:
            expected = np.zeros((4, 4), dtype=np.float32)
        np.testing.assert_allclose(grad_cam(HandCamNet(), x, "spoof"), expected, atol=1e-6)

    def test_zero_gradient_gives_zero_map(self):
        x = torch.rand(1, 2, 4, 4)
        np.testing.assert_array_equal(grad_cam(HandCamNet(w=(0.0, 0.0)), x), np.zeros((4, 4)))
        np.testing.assert_array_equal(grad_cam(HandCamNet(connected=False), x), np.zeros((4, 4)))

    def test_network_contract(self):
        model = build_model(TINY, seed=0)
        x = torch.rand(6, 16, 16, generator=torch.Generator().manual_seed(1))
        for target in ("live", "spoof"):
            cam = grad_cam(model, x, target)
            assert cam.shape == (16, 16) and cam.dtype == np.float32
            assert cam.min() >= 0.0 and cam.max() <= 1.0

    def test_invariant_to_final_layer_rescaling(self):
        model = build_model(TINY, seed=0)
        x = torch.rand(1, 6, 16, 16, generator=torch.Generator().manual_seed(2))
        before = grad_cam(model, x)
        with torch.no_grad():
            model.meta.fc2.weight.mul_(3.0)
        after = grad_cam(model, x)
        np.testing.assert_allclose(after, before, atol=1e-5)
        assert np.argmax(after) == np.argmax(before)

    def test_bad_arguments(self):
        model = build_model(TINY, seed=0)
        with pytest.raises(ValueError):
            grad_cam(model, torch.rand(2, 6, 16, 16))
        with pytest.raises(ValueError):
            grad_cam(model, torch.rand(6, 16, 16), target="print")
