"""
Data export module for Facet.

This module exports what the visualizations of a trained model need:
embedding tables for external 2-D projection (e.g. t-SNE) and per-sample
Grad-CAM saliency maps.

Key Features:
- Embedding CSV with header domain,label,e0,...,eK
- Choice of layer: meta learner hidden layer (triplet space) or pooled input
- Saliency PNGs, one grayscale image per sample

Author: Facet Development
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import torch

from .visualizer import save_saliency
from ..data.color import make_model_input
from ..data.schema import DomainDataset
from ..evaluation.grad_cam import grad_cam
from ..evaluation.scoring import batched_inputs
from ..utils.validators import validate_embedding_header

logger = logging.getLogger(__name__)

LAYERS = ("meta_hidden", "pooled")


class EmbeddingExporter:
    """
    Exporter of embeddings and saliency maps of a trained model.

    Attributes:
        model: Trained network
        image_size: Model input side length (None: sample resolution)
        layer: meta_hidden (first hidden layer of M) or pooled (input of M)

    Example:
        >>> exporter = EmbeddingExporter(model, layer="meta_hidden")
        >>> exporter.to_csv([train_a, train_b], "embeddings_train.csv")
        200
    """

    def __init__(self, model, image_size: Optional[int] = None, layer: str = "meta_hidden"):
        """
        Initialize the exporter.

        Args:
            model: Trained network
            image_size: Model input side length
            layer: Embedding layer to export

        Raises:
            ValueError: Unknown layer
        """
        if layer not in LAYERS:
            raise ValueError(f"layer must be one of {LAYERS}, got '{layer}'")
        self.model = model
        self.image_size = image_size
        self.layer = layer

    def embed(self, dataset: DomainDataset, batch_size: int = 64) -> np.ndarray:
        """N x K embedding matrix of one dataset, in sample order."""
        self.model.eval()
        rows = []
        with torch.no_grad():
            for x in batched_inputs(dataset.samples, self.image_size, batch_size):
                out = self.model(x)
                rows.append((out.embedding if self.layer == "meta_hidden" else out.pooled).double().numpy())
        return np.concatenate(rows)

    def to_frame(self, datasets: Sequence[DomainDataset]) -> pd.DataFrame:
        """Embedding table with one row per sample."""
        if not datasets:
            raise ValueError("export needs at least one dataset")
        frames = []
        for dataset in datasets:
            values = self.embed(dataset)
            frame = pd.DataFrame(values, columns=[f"e{i}" for i in range(values.shape[1])])
            frame.insert(0, "label", dataset.labels)
            frame.insert(0, "domain", dataset.domain_id)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def to_csv(self, datasets: Sequence[DomainDataset], output_path: Union[str, Path]) -> int:
        """
        Export embeddings to CSV.

        Returns:
            Number of rows written
        """
        frame = self.to_frame(datasets)
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(output_path, index=False)
        logger.info("Exported %d embeddings to %s", len(frame), output_path)
        return len(frame)

    def saliency_maps(
        self,
        dataset: DomainDataset,
        output_dir: Union[str, Path],
        target: str = "live",
        limit: Optional[int] = None
    ) -> List[Path]:
        """
        Write one Grad-CAM PNG per sample: <output_dir>/<sample_id>.png.

        Returns:
            Paths of the written images
        """
        output_dir = Path(output_dir)
        paths = []
        for index, sample in enumerate(dataset.samples[:limit]):
            x = torch.from_numpy(make_model_input(sample, self.image_size)).permute(2, 0, 1)
            cam = grad_cam(self.model, x, target=target)
            name = sample.sample_id or f"{dataset.name}_{index:05d}"
            paths.append(save_saliency(cam, output_dir / f"{name}.png"))
        return paths


def export_embeddings(
    model,
    datasets: Sequence[DomainDataset],
    output_path: Union[str, Path],
    layer: str = "meta_hidden",
    image_size: Optional[int] = None
) -> int:
    """Convenience wrapper around EmbeddingExporter.to_csv."""
    return EmbeddingExporter(model, image_size, layer).to_csv(datasets, output_path)


def load_embeddings(path: Union[str, Path]) -> pd.DataFrame:
    """
    Read an embedding CSV back.

    Raises:
        ValueError: The header is not domain,label,e0,...,eK
    """
    frame = pd.read_csv(path)
    is_valid, error = validate_embedding_header(list(frame.columns))
    if not is_valid:
        raise ValueError(f"{path}: {error}")
    return frame
