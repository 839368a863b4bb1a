"""
Desk-scale acceptance runs on the synthetic benchmark.

These train full models for several minutes each and only run with
`pytest --run-slow`.

Author: Facet Development
"""

from pathlib import Path

import pytest

from src.analysis.benchmark import DomainPool, run_benchmark
from src.analysis.report_generator import BenchmarkReport
from src.config.run_config import RunConfig
from src.evaluation.scoring import evaluate_domain
from src.network.model import build_model

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SEEDS = [0, 1, 2]


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    cfg = RunConfig.load(CONFIG_DIR / "desk.json", overrides=[
        f"data.root={root / 'data'}",
        f"output_dir={root / 'runs'}",
    ])
    return cfg, DomainPool.synthesize(cfg)


@pytest.mark.slow
class TestDeskBenchmark:

    def test_untrained_model_is_near_chance(self, desk):
        cfg, pool = desk
        model = build_model(cfg.network_config(), seed=0)
        report = evaluate_domain(model, pool.test["synth3"],
                                 [pool.dev[n] for n in pool.sources("synth3")], cfg.data.image_size)
        assert 0.3 <= report.auc <= 0.7

    def test_held_out_domain_and_ablation_direction(self, desk):
        cfg, pool = desk
        results = run_benchmark(cfg, variants=["full", "no_triplet", "no_meta"],
                                seeds=SEEDS, held_out=["synth3"], pool=pool)
        medians = BenchmarkReport(results).variant_medians()

        assert medians["full"]["auc"] >= 0.90
        assert medians["full"]["hter"] <= 0.20
        assert medians["full"]["auc"] >= medians["no_triplet"]["auc"]
        assert medians["full"]["auc"] >= medians["no_meta"]["auc"]
