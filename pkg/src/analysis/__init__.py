"""
Analysis module for Facet.

This module provides the leave-one-domain-out benchmark, its report,
figures of training runs and exports of embeddings and saliency maps.

Components:
- run_protocol / run_benchmark: leave-one-domain-out training and evaluation
- BenchmarkReport: results CSV and markdown summary
- RunVisualizer: ROC, training-curve and embedding figures
- EmbeddingExporter: embedding CSV and Grad-CAM PNG export
"""

from .benchmark import DomainPool, VARIANT_OVERRIDES, run_protocol, run_benchmark, protocol_name
from .report_generator import BenchmarkReport
from .visualizer import RunVisualizer, save_saliency
from .exporter import EmbeddingExporter, export_embeddings, load_embeddings

__all__ = [
    "DomainPool",
    "VARIANT_OVERRIDES",
    "run_protocol",
    "run_benchmark",
    "protocol_name",
    "BenchmarkReport",
    "RunVisualizer",
    "save_saliency",
    "EmbeddingExporter",
    "export_embeddings",
    "load_embeddings",
]
