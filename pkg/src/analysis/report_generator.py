"""
Report generation module for Facet.

This module turns a benchmark results table into the files a reader looks
at: the raw results CSV and a markdown summary with the median HTER and AUC
of every variant and protocol over seeds.

Author: Facet Development
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

from .benchmark import RESULT_COLUMNS
from ..config.settings import PUBLISHED_REFERENCE_RESULT

logger = logging.getLogger(__name__)

RESULTS_NAME = "results.csv"
SUMMARY_NAME = "summary.md"


class BenchmarkReport:
    """
    Summary of a benchmark run.

    Attributes:
        results: Table from run_benchmark (one row per variant, held-out domain, seed)

    Example:
        >>> report = BenchmarkReport(results)
        >>> report.summary()
        >>> report.save("runs/benchmark")
    """

    def __init__(self, results: pd.DataFrame):
        missing = [c for c in RESULT_COLUMNS if c not in results.columns]
        if missing:
            raise ValueError(f"Results table is missing columns: {missing}")
        self.results = results

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "BenchmarkReport":
        return cls(pd.read_csv(path))

    def summary(self) -> pd.DataFrame:
        """Median HTER/AUC per (variant, protocol) and the number of seeds behind it."""
        if self.results.empty:
            return pd.DataFrame(columns=["variant", "protocol", "hter", "auc", "n_seeds"])
        grouped = self.results.groupby(["variant", "protocol"], sort=False)
        return grouped.agg(
            hter=("hter", "median"),
            auc=("auc", "median"),
            n_seeds=("seed", "nunique"),
        ).reset_index()

    def variant_medians(self) -> Dict[str, Dict[str, float]]:
        """Median over all rows of each variant."""
        medians = self.results.groupby("variant", sort=False)[["hter", "auc"]].median()
        return {variant: row.to_dict() for variant, row in medians.iterrows()}

    def to_markdown(self, title: Optional[str] = None) -> str:
        """
        Markdown summary of the benchmark.

        Returns:
            Markdown text with one table of medians and one of per-variant medians
        """
        lines: List[str] = []
        lines.append(f"# {title or 'Facet benchmark'}")
        lines.append("")
        lines.append(f"*Generated: {datetime.now().strftime('%Y-%m-%d %H:%M')}*")
        lines.append("")

        summary = self.summary()
        if summary.empty:
            lines.append("No results recorded.")
            return "\n".join(lines) + "\n"

        lines.append("## Median over seeds")
        lines.append("")
        lines.append("| Variant | Protocol | HTER (%) | AUC (%) | Seeds |")
        lines.append("|---|---|---:|---:|---:|")
        for row in summary.itertuples(index=False):
            lines.append(
                f"| {row.variant} | {row.protocol} | {100 * row.hter:.2f} | "
                f"{100 * row.auc:.2f} | {row.n_seeds} |"
            )
        lines.append("")

        lines.append("## Median per variant")
        lines.append("")
        lines.append("| Variant | HTER (%) | AUC (%) |")
        lines.append("|---|---:|---:|")
        for variant, values in self.variant_medians().items():
            lines.append(f"| {variant} | {100 * values['hter']:.2f} | {100 * values['auc']:.2f} |")
        lines.append("")

        lines.append(
            "Reference on the real four-dataset O&C&I to M protocol: "
            f"HTER {PUBLISHED_REFERENCE_RESULT['hter_percent']:.2f}%, "
            f"AUC {PUBLISHED_REFERENCE_RESULT['auc_percent']:.2f}%. "
            "Synthetic numbers are not comparable to it."
        )
        return "\n".join(lines) + "\n"

    def save(self, output_dir: Union[str, Path]) -> Dict[str, Path]:
        """
        Write results.csv and summary.md.

        Returns:
            Mapping of file kind to written path
        """
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        results_path = output_dir / RESULTS_NAME
        summary_path = output_dir / SUMMARY_NAME
        self.results.to_csv(results_path, index=False)
        summary_path.write_text(self.to_markdown(), encoding="utf-8")
        logger.info("Benchmark report written to %s", output_dir)
        return {"results": results_path, "summary": summary_path}
