"""
Command-line entry point for Facet.

Usage:
    python -m src.cli synth     --config configs/desk.json [--force]
    python -m src.cli train     --config configs/desk.json [--resume DIR]
    python -m src.cli eval      --config configs/desk.json [--checkpoint DIR]
    python -m src.cli export    --config configs/desk.json --kind embeddings|gradcam
    python -m src.cli benchmark --config configs/desk.json --variants full,no_meta

Every command accepts `--set key=value` (repeatable) and `--print-config`.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical abort.

Author: Facet Development
"""

import argparse
import logging
import shutil
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .analysis.benchmark import VARIANT_OVERRIDES, DomainPool, run_benchmark
from .analysis.exporter import EmbeddingExporter
from .analysis.report_generator import BenchmarkReport
from .analysis.visualizer import RunVisualizer
from .config.run_config import RunConfig
from .data.repository import list_domains, load_domain, load_domains, save_domain
from .data.schema import DomainDataset
from .data.synthetic import carve_dev_split, generate_domains
from .evaluation.scoring import evaluate_domain
from .meta.trainer import FINAL_CHECKPOINT, train
from .meta.training_log import TrainingLog
from .network.checkpoint import load_checkpoint
from .utils.errors import ConfigError, DataError, FacetError
from .utils.log import setup_logging

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "config.json"
EVAL_REPORT_NAME = "eval_report.json"


# ==================== Domain resolution ====================

def _available(cfg: RunConfig) -> List[str]:
    names = list_domains(cfg.data.root)
    if not names:
        raise DataError(f"No domains found under {cfg.data.root}; run `synth` first")
    return names


def resolve_train_domains(cfg: RunConfig, exclude: Optional[str] = None) -> List[str]:
    """
    Source domains: the configured train domains, or every domain on disk
    except the held-out one.

    Args:
        cfg: Run configuration
        exclude: Held-out domain (default data.test_domain); never returned

    Raises:
        ConfigError: Neither a held-out domain nor train domains are known
        DataError: Missing domains or fewer than 2 sources
    """
    available = _available(cfg)
    held_out = exclude or cfg.data.test_domain
    if cfg.data.train_domains:
        names = [n for n in cfg.data.train_domains if n != held_out]
    elif held_out is None:
        raise ConfigError("No held-out domain: set data.test_domain or data.train_domains")
    else:
        names = [n for n in available if n != held_out]
    missing = [n for n in names if n not in available]
    if missing:
        raise DataError(f"Train domains not found under {cfg.data.root}: {missing}")
    if len(names) < 2:
        raise DataError(f"Training needs at least 2 source domains, resolved {names}")
    return names


def resolve_test_domain(cfg: RunConfig, override: Optional[str] = None) -> str:
    name = override or cfg.data.test_domain
    if not name:
        raise ConfigError("No test domain: set data.test_domain or pass --test-domain")
    if name not in _available(cfg):
        raise DataError(f"Test domain '{name}' not found under {cfg.data.root}")
    return name


def resolve_dev_domains(cfg: RunConfig, test_name: str, override: Optional[str] = None) -> List[str]:
    """Domains whose dev splits fix the threshold; the test domain is never one of them."""
    names = _split_list(override) if override else resolve_train_domains(cfg, exclude=test_name)
    if test_name in names:
        raise ConfigError(f"Dev domains {names} include the test domain '{test_name}'")
    return names


def _load_split(cfg: RunConfig, name: str, split: str) -> DomainDataset:
    path = Path(cfg.data.root) / name
    return load_domain(path) if split == "test" else load_domain(path, split)


def _split_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


# ==================== Commands ====================

def cmd_synth(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Generate the synthetic domains into data.root."""
    synth = cfg.synth_config()
    root = Path(cfg.data.root)
    if root.exists() and any(root.iterdir()):
        if not args.force:
            raise ConfigError(f"Output directory {root} is not empty; pass --force to overwrite")
        for i in range(synth.n_domains):
            shutil.rmtree(root / synth.domain_name(i), ignore_errors=True)

    domains = generate_domains(synth, workers=cfg.data.workers)
    for dataset in domains:
        train_part, dev_part = carve_dev_split(dataset, cfg.data.dev_fraction, seed=synth.seed)
        save_domain(train_part, root)
        domain_dir = save_domain(dev_part, root, append=True)

        # Self-check: everything written must load back.
        reloaded = load_domain(domain_dir)
        print(f"✓ {dataset.name}: {len(reloaded)} samples "
              f"({reloaded.n_live} live / {reloaded.n_spoof} spoof), "
              f"train {len(train_part)}, dev {len(dev_part)}")

    print(f"✓ Wrote {len(domains)} domains to {root}")
    return 0


def cmd_train(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Train on the configured source domains."""
    names = resolve_train_domains(cfg)
    domains = load_domains(cfg.data.root, names, "train", workers=cfg.data.workers)
    output_dir = Path(cfg.output_dir)
    cfg.save(output_dir / RESOLVED_CONFIG_NAME)

    result = train(
        domains,
        network_cfg=cfg.network_config(),
        meta_cfg=cfg.meta_config(),
        weights=cfg.loss_weights(),
        seed=cfg.seed,
        output_dir=output_dir,
        triplet=cfg.triplet_config(),
        image_size=cfg.data.image_size,
        resume_from=args.resume,
        config=cfg.flatten(),
    )
    RunVisualizer().plot_training_curves(
        TrainingLog(result.log_path), save_path=output_dir / "training_curves.png"
    )

    print(f"✓ Trained on {', '.join(names)} for {result.step} iterations")
    if result.last_report is not None:
        print(f"✓ Last total loss: {result.last_report.total:.4f}")
    print(f"✓ Checkpoint: {result.checkpoint_dir}")
    return 0


def cmd_eval(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Evaluate a checkpoint on the held-out domain at the dev EER threshold."""
    checkpoint = load_checkpoint(
        args.checkpoint or Path(cfg.output_dir) / FINAL_CHECKPOINT,
        expected=cfg.network_config(),
    )
    test_name = resolve_test_domain(cfg, args.test_domain)
    dev_names = resolve_dev_domains(cfg, test_name, args.dev_domains)

    test = _load_split(cfg, test_name, "test")
    dev = [_load_split(cfg, name, "dev") for name in dev_names]
    report = evaluate_domain(checkpoint.model, test, dev, cfg.data.image_size)

    output = Path(args.output) if args.output else Path(cfg.output_dir) / EVAL_REPORT_NAME
    report.save(output)
    RunVisualizer().plot_roc(report, save_path=output.with_suffix(".png"))

    print(f"✓ {test_name}: AUC {report.auc:.4f}  HTER {report.hter:.4f} "
          f"(FAR {report.far:.4f}, FRR {report.frr:.4f}) at threshold {report.threshold:.4f}")
    print(f"✓ Report: {output}")
    return 0


def cmd_export(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Export embeddings (one CSV per split) or Grad-CAM maps (one PNG per sample)."""
    checkpoint = load_checkpoint(
        args.checkpoint or Path(cfg.output_dir) / FINAL_CHECKPOINT,
        expected=cfg.network_config(),
    )
    names = _split_list(args.domains) if args.domains else _available(cfg)
    output_dir = Path(args.output) if args.output else Path(cfg.output_dir) / "exports"
    exporter = EmbeddingExporter(checkpoint.model, cfg.data.image_size, layer=args.layer)

    if args.kind == "embeddings":
        for split in _split_list(args.splits):
            datasets = [_load_split(cfg, name, split) for name in names]
            path = output_dir / f"embeddings_{split}.csv"
            n_rows = exporter.to_csv(datasets, path)
            print(f"✓ {split}: {n_rows} embeddings -> {path}")
    else:
        for name in names:
            for split in _split_list(args.splits):
                dataset = _load_split(cfg, name, split)
                paths = exporter.saliency_maps(
                    dataset, output_dir / "gradcam" / name / split, target=args.target, limit=args.limit
                )
                print(f"✓ {name}/{split}: {len(paths)} saliency maps")
    return 0


def cmd_benchmark(cfg: RunConfig, args: argparse.Namespace) -> int:
    """Leave-one-domain-out benchmark over variants and seeds."""
    variants = _split_list(args.variants)
    unknown = [v for v in variants if v not in VARIANT_OVERRIDES]
    if unknown:
        raise ConfigError(f"Unknown variants {unknown}; choose from {list(VARIANT_OVERRIDES)}")
    try:
        seeds = [int(s) for s in _split_list(args.seeds)]
    except ValueError as e:
        raise ConfigError(f"--seeds must be comma-separated integers: {e}") from e
    held_out = _split_list(args.held_out) if args.held_out else None

    pool = DomainPool.from_config(cfg)
    results = run_benchmark(cfg, variants, seeds, held_out, pool)
    paths = BenchmarkReport(results).save(Path(cfg.output_dir) / "benchmark")

    for variant, group in results.groupby("variant", sort=False):
        print(f"✓ {variant}: median AUC {group['auc'].median():.4f}, "
              f"median HTER {group['hter'].median():.4f}")
    print(f"✓ Summary: {paths['summary']}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "export": cmd_export,
    "benchmark": cmd_benchmark,
}


# ==================== Parser ====================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config of flat dotted keys")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="Override a config key (repeatable)")
    common.add_argument("--print-config", action="store_true",
                        help="Print the fully resolved config and exit")
    common.add_argument("--log-level", default=None, help="Logging level (default from settings)")

    parser = argparse.ArgumentParser(prog="facet", description="Multi-task meta-learning face anti-spoofing")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="Generate synthetic domains")
    synth.add_argument("--force", action="store_true", help="Overwrite existing domain directories")

    train_cmd = sub.add_parser("train", parents=[common], help="Train a model")
    train_cmd.add_argument("--resume", default=None, help="Checkpoint directory to resume from")

    eval_cmd = sub.add_parser("eval", parents=[common], help="Evaluate on the held-out domain")
    eval_cmd.add_argument("--checkpoint", default=None)
    eval_cmd.add_argument("--test-domain", default=None)
    eval_cmd.add_argument("--dev-domains", default=None, help="Comma-separated dev domains")
    eval_cmd.add_argument("--output", default=None, help="Report path")

    export = sub.add_parser("export", parents=[common], help="Export embeddings or Grad-CAM maps")
    export.add_argument("--kind", choices=["embeddings", "gradcam"], default="embeddings")
    export.add_argument("--checkpoint", default=None)
    export.add_argument("--domains", default=None, help="Comma-separated domains (default: all)")
    export.add_argument("--splits", default="train,dev", help="Comma-separated splits (train, dev, test)")
    export.add_argument("--layer", choices=["meta_hidden", "pooled"], default="meta_hidden")
    export.add_argument("--target", choices=["live", "spoof"], default="live")
    export.add_argument("--limit", type=int, default=None, help="Maximum saliency maps per domain")
    export.add_argument("--output", default=None, help="Output directory")

    bench = sub.add_parser("benchmark", parents=[common], help="Leave-one-domain-out benchmark")
    bench.add_argument("--variants", default="full", help=f"Comma-separated, from {list(VARIANT_OVERRIDES)}")
    bench.add_argument("--seeds", default="0,1,2")
    bench.add_argument("--held-out", default=None, help="Comma-separated held-out domains (default: each)")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    try:
        cfg = RunConfig.load(args.config, args.overrides)
        if args.print_config:
            print(cfg.dumps())
            return 0
        return COMMANDS[args.command](cfg, args)
    except FacetError as e:
        print(f"✗ {e}", file=sys.stderr)
        if getattr(e, "iteration", None) is not None:
            print(f"  at iteration {e.iteration}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
