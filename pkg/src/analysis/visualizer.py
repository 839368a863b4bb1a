"""
Visualization module for Facet.

This module renders the figures of a training run and its evaluation:
ROC curves of one or more test domains, loss curves from the training log,
embedding scatter plots and Grad-CAM saliency images.

Key Features:
- ROC curves with the chosen operating point marked
- Per-stage loss curves with the mining switch marked
- Embedding scatter (first two columns or a precomputed 2-D projection)
- Saliency maps as 8-bit grayscale PNGs

Author: Facet Development
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import matplotlib
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from PIL import Image

from ..evaluation.metrics import EvalReport
from ..meta.training_log import TrainingLog

# Use non-interactive backend for matplotlib
matplotlib.use('Agg')

logger = logging.getLogger(__name__)


def save_saliency(cam: np.ndarray, path: Union[str, Path]) -> Path:
    """
    Write a saliency map in [0, 1] as a grayscale PNG.

    Args:
        cam: H x W map
        path: Output file

    Returns:
        The written path
    """
    cam = np.asarray(cam, dtype=np.float64)
    if cam.ndim != 2:
        raise ValueError(f"saliency map must be 2-D, got shape {cam.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.round(np.clip(cam, 0.0, 1.0) * 255).astype(np.uint8)
    Image.fromarray(pixels).save(path)
    return path


class RunVisualizer:
    """
    Figures for one run directory.

    Example:
        >>> viz = RunVisualizer()
        >>> fig = viz.plot_roc([report], save_path="roc.png")
        >>> fig = viz.plot_training_curves(TrainingLog("runs/a/train_log.jsonl"))
    """

    def __init__(self, dpi: int = 150):
        self.dpi = dpi

    def _finish(self, fig: plt.Figure, save_path: Optional[Union[str, Path]]) -> plt.Figure:
        fig.tight_layout()
        if save_path:
            save_path = Path(save_path)
            save_path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(save_path, dpi=self.dpi, bbox_inches='tight')
            logger.info("Saved figure to %s", save_path)
        return fig

    def plot_roc(
        self,
        reports: Union[EvalReport, Sequence[EvalReport]],
        save_path: Optional[Union[str, Path]] = None
    ) -> plt.Figure:
        """
        ROC curves, one per report, with the operating point of each marked.

        Args:
            reports: One report or several (e.g. one per held-out domain)
            save_path: Optional PNG output

        Returns:
            matplotlib Figure
        """
        if isinstance(reports, EvalReport):
            reports = [reports]

        fig, ax = plt.subplots(figsize=(6, 6))
        ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=1)

        for report in reports:
            name = report.domain or "test"
            ax.plot(report.roc.get("fpr", []), report.roc.get("tpr", []),
                    label=f"{name} (AUC {report.auc:.3f}, HTER {report.hter:.3f})")
            # FAR is the false positive rate; 1 - FRR the true positive rate
            ax.scatter([report.far], [1.0 - report.frr], marker="o", zorder=3)

        ax.set_xlabel("False acceptance rate")
        ax.set_ylabel("True live rate")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_title("ROC")
        ax.legend(loc="lower right", fontsize=8)
        ax.grid(alpha=0.3)

        return self._finish(fig, save_path)

    def plot_training_curves(
        self,
        log: Union[TrainingLog, pd.DataFrame],
        window: int = 20,
        save_path: Optional[Union[str, Path]] = None
    ) -> plt.Figure:
        """
        Loss curves of a training run.

        Top: total and stage totals. Bottom: individual meta-test terms.
        Curves are smoothed with a rolling mean over `window` iterations.
        """
        frame = log.to_frame() if isinstance(log, TrainingLog) else log

        fig, axes = plt.subplots(2, 1, figsize=(10, 8), sharex=True)
        if frame.empty:
            axes[0].text(0.5, 0.5, 'No training iterations recorded', ha='center', va='center',
                         transform=axes[0].transAxes)
            return self._finish(fig, save_path)

        iterations = frame["iteration"]

        def smooth(column: str) -> pd.Series:
            return frame[column].rolling(window, min_periods=1).mean()

        for column in ("total", "mtrn_total", "mtst_total"):
            if column in frame:
                axes[0].plot(iterations, smooth(column), label=column)
        axes[0].set_ylabel("loss")
        axes[0].set_title("Objective")
        axes[0].legend()

        for term in ("cls", "trip", "dep", "seg"):
            column = f"mtst_{term}"
            if column in frame:
                axes[1].plot(iterations, smooth(column), label=term)
        axes[1].set_xlabel("iteration")
        axes[1].set_ylabel("loss")
        axes[1].set_title("Meta-test terms")
        axes[1].legend()

        switched = frame.loc[frame["mining_mode"] == "batch_hard", "iteration"]
        if not switched.empty:
            for ax in axes:
                ax.axvline(int(switched.iloc[0]), color="gray", linestyle=":", linewidth=1)

        return self._finish(fig, save_path)

    def plot_embeddings(
        self,
        frame: pd.DataFrame,
        columns: Optional[List[str]] = None,
        save_path: Optional[Union[str, Path]] = None
    ) -> plt.Figure:
        """
        Scatter of an embedding table, colored by domain, marker by label.

        Args:
            frame: Table from EmbeddingExporter.to_frame or load_embeddings
            columns: Two columns to plot (default e0, e1)
        """
        x_col, y_col = columns or ["e0", "e1"]
        fig, ax = plt.subplots(figsize=(7, 6))
        colors = plt.cm.tab10(np.linspace(0, 1, 10))

        for i, (domain, group) in enumerate(frame.groupby("domain")):
            for label, marker in ((1, "o"), (0, "x")):
                part = group[group["label"] == label]
                if part.empty:
                    continue
                ax.scatter(part[x_col], part[y_col], s=12, marker=marker,
                           color=colors[i % len(colors)],
                           label=f"domain {domain} {'live' if label == 1 else 'spoof'}")

        ax.set_xlabel(x_col)
        ax.set_ylabel(y_col)
        ax.legend(fontsize=7, markerscale=1.5)
        return self._finish(fig, save_path)
