"""
Training loop for Facet.

Loops episode sampling and meta steps for the configured number of
iterations, applies the two-stage mining schedule, writes the training log and
checkpoints. Given the same seed and configuration a CPU run is bitwise
reproducible, and resuming from any periodic checkpoint reproduces the
uninterrupted run.

Author: Facet Development
"""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import torch
from tqdm import tqdm

from .engine import MetaConfig, MetaStepReport, build_optimizer, meta_step, mining_stage
from .training_log import TrainingLog, TrainingRecord
from ..config.settings import settings
from ..data.episodes import EpisodeSampler
from ..data.schema import DomainDataset
from ..losses.objectives import LossWeights
from ..losses.triplet import TripletConfig
from ..network.checkpoint import load_checkpoint, save_checkpoint
from ..network.model import MultiTaskFASNet, NetworkConfig, build_model
from ..utils.errors import NumericalAbort

logger = logging.getLogger(__name__)

LOG_NAME = "train_log.jsonl"
FINAL_CHECKPOINT = "checkpoint"
CHECKPOINT_DIR = "checkpoints"


@dataclass
class TrainResult:
    """
    Outcome of a training run.

    Attributes:
        model: Trained network
        checkpoint_dir: Final checkpoint directory
        log_path: Training log file
        step: Completed iterations
        last_report: Report of the last meta step (None if no step ran)
    """

    model: MultiTaskFASNet
    checkpoint_dir: Path
    log_path: Path
    step: int
    last_report: Optional[MetaStepReport] = None


def configure_torch() -> None:
    """Deterministic CPU execution with the configured thread count."""
    torch.use_deterministic_algorithms(True, warn_only=True)
    if settings.NUM_THREADS:
        torch.set_num_threads(settings.NUM_THREADS)


def periodic_checkpoint_path(output_dir: Union[str, Path], step: int) -> Path:
    return Path(output_dir) / CHECKPOINT_DIR / f"step_{step:06d}"


def train(
    domains: Sequence[DomainDataset],
    network_cfg: Optional[NetworkConfig] = None,
    meta_cfg: Optional[MetaConfig] = None,
    weights: Optional[LossWeights] = None,
    seed: int = 0,
    output_dir: Union[str, Path] = "runs/default",
    triplet: Optional[TripletConfig] = None,
    image_size: Optional[int] = None,
    resume_from: Optional[Union[str, Path]] = None,
    config: Optional[Dict[str, Any]] = None,
    show_progress: Optional[bool] = None
) -> TrainResult:
    """
    Train a model on the source domains.

    Args:
        domains: Source domains (at least two)
        network_cfg: Architecture
        meta_cfg: Meta-learning settings (iterations, schedule, optimizer)
        weights: Loss weights
        seed: Seed of the initialization and of the episode stream
        output_dir: Run directory (log, periodic and final checkpoints)
        triplet: Base triplet settings; mining mode and margin follow the
            two-stage schedule
        image_size: Model input side length (None: sample resolution)
        resume_from: Checkpoint directory of an earlier run with the same
            configuration
        config: Flattened run configuration stored in checkpoints
        show_progress: Progress bar; defaults to settings.SHOW_PROGRESS

    Returns:
        TrainResult

    Raises:
        DataError: Fewer than two domains or unfillable batches
        NumericalAbort: Non-finite loss (carries the iteration and report)
        OSError: Checkpoint write failure, naming the path
    """
    network_cfg = network_cfg or NetworkConfig()
    meta_cfg = meta_cfg or MetaConfig()
    weights = weights or LossWeights()
    output_dir = Path(output_dir)
    show_progress = settings.SHOW_PROGRESS if show_progress is None else show_progress

    configure_torch()
    sampler = EpisodeSampler(
        domains, meta_cfg.batch_size, image_size, with_parsing=network_cfg.use_parsing
    )

    model = build_model(network_cfg, seed=seed)
    optimizer = build_optimizer(model, meta_cfg)
    rng = np.random.default_rng(seed)
    log = TrainingLog(output_dir / LOG_NAME)
    start = 0

    if resume_from is not None:
        checkpoint = load_checkpoint(resume_from, expected=network_cfg)
        model = checkpoint.model
        optimizer = build_optimizer(model, meta_cfg)
        if checkpoint.optimizer_state is not None:
            optimizer.load_state_dict(checkpoint.optimizer_state)
        rng = checkpoint.restore_rng()
        if checkpoint.torch_rng_state is not None:
            torch.set_rng_state(checkpoint.torch_rng_state)
        start = checkpoint.step
        log.truncate(start)
        logger.info("Resuming from %s at step %d", resume_from, start)
    else:
        log.reset()

    logger.info(
        "Training on %s for %d iterations (meta_learning=%s)",
        [d.name for d in domains], meta_cfg.iterations, meta_cfg.meta_learning,
    )

    report = None
    started = time.perf_counter()
    progress = tqdm(range(start, meta_cfg.iterations), desc="train", disable=not show_progress)
    for iteration in progress:
        stage = mining_stage(iteration, meta_cfg, triplet)
        episode = sampler.sample(rng)
        try:
            _, report = meta_step(model, optimizer, episode, meta_cfg, weights, stage)
        except NumericalAbort as e:
            e.iteration = iteration
            logger.error("Numerical abort at iteration %d: %s", iteration, e)
            raise

        log.append(TrainingRecord(
            iteration=iteration,
            losses=report.losses_dict(),
            margin=stage.margin,
            mining_mode=stage.mining,
            grad_norms=report.grad_norms,
            wall_time=time.perf_counter() - started,
        ))
        progress.set_postfix(loss=f"{report.total:.4f}", mode=stage.mining)

        step = iteration + 1
        if step % meta_cfg.checkpoint_every == 0:
            save_checkpoint(
                periodic_checkpoint_path(output_dir, step), model, optimizer,
                step=step, rng=rng, seed=seed, config=config,
            )

    final_dir = save_checkpoint(
        output_dir / FINAL_CHECKPOINT, model, optimizer,
        step=meta_cfg.iterations, rng=rng, seed=seed, config=config,
    )
    model.eval()
    return TrainResult(
        model=model,
        checkpoint_dir=final_dir,
        log_path=log.path,
        step=meta_cfg.iterations,
        last_report=report,
    )
