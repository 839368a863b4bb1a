"""
Scoring of datasets with a trained model.

Author: Facet Development
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import torch

from .metrics import EvalReport, select_threshold
from ..data.color import make_model_input
from ..data.schema import DomainDataset, ImageSample
from ..utils.errors import DataError

logger = logging.getLogger(__name__)

Samples = Union[DomainDataset, Sequence[ImageSample]]


def _samples(dataset: Samples) -> Sequence[ImageSample]:
    samples = dataset.samples if isinstance(dataset, DomainDataset) else tuple(dataset)
    if len(samples) == 0:
        raise DataError("Cannot score an empty dataset")
    return samples


def batched_inputs(samples: Sequence[ImageSample], image_size: Optional[int], batch_size: int):
    """Yield B x 6 x H x W float32 tensors in sample order."""
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        x = np.stack([make_model_input(s, image_size) for s in chunk])
        yield torch.from_numpy(x).permute(0, 3, 1, 2).contiguous()


def score_domain(
    model,
    dataset: Samples,
    image_size: Optional[int] = None,
    batch_size: int = 64
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Live probability of every sample, in dataset order (eval mode).

    Args:
        model: Network
        dataset: DomainDataset or a sequence of samples
        image_size: Model input side length (None: sample resolution)
        batch_size: Forward batch size

    Returns:
        (scores float64, labels int64)

    Raises:
        DataError: Empty dataset
    """
    samples = _samples(dataset)
    model.eval()
    scores = []
    with torch.no_grad():
        for x in batched_inputs(samples, image_size, batch_size):
            scores.append(model(x).live_prob.double().numpy())
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return np.concatenate(scores), labels


def evaluate_domain(
    model,
    test: DomainDataset,
    dev: Sequence[DomainDataset],
    image_size: Optional[int] = None
) -> EvalReport:
    """
    Score a held-out domain at the EER threshold of the source dev splits.

    Args:
        model: Trained network
        test: Held-out test domain
        dev: Dev splits of the source domains (pooled for the threshold)
        image_size: Model input side length

    Returns:
        EvalReport of the test domain
    """
    if not dev:
        raise DataError("evaluate_domain needs at least one dev split")
    dev_scores, dev_labels = [], []
    for dataset in dev:
        s, y = score_domain(model, dataset, image_size)
        dev_scores.append(s)
        dev_labels.append(y)
    threshold = select_threshold(np.concatenate(dev_scores), np.concatenate(dev_labels))

    scores, labels = score_domain(model, test, image_size)
    report = EvalReport.build(scores, labels, threshold, domain=test.name)
    logger.info("%s: AUC %.4f, HTER %.4f at threshold %.4f", test.name, report.auc, report.hter, threshold)
    return report
