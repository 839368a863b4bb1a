"""
Training log for Facet.

Append-only JSON lines, one record per iteration:
    {iteration, losses, margin, mining_mode, grad_norms, wall_time}

`wall_time` is the only non-deterministic field; `deterministic_view()`
drops it so runs with the same seed can be compared exactly.

Author: Facet Development
"""

import json
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd


@dataclass
class TrainingRecord:
    """Record of a single training iteration."""
    iteration: int
    losses: Dict[str, Any]
    margin: float
    mining_mode: str  # "batch_all" or "batch_hard"
    grad_norms: Dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)

    def deterministic_dict(self) -> Dict[str, Any]:
        data = self.to_dict()
        data.pop("wall_time")
        return data


class TrainingLog:
    """
    Line-delimited training log.

    Example:
        >>> log = TrainingLog("runs/default/train_log.jsonl")
        >>> log.append(TrainingRecord(0, {"total": 1.2}, 0.1, "batch_all"))
        >>> len(log.read())
        1
        >>> print(log.generate_report())
    """

    def __init__(self, path: Union[str, Path]):
        """
        Initialize the log.

        Args:
            path: Log file location; parent directories are created on write
        """
        self.path = Path(path)

    def reset(self) -> None:
        """Start an empty log."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf-8")

    def append(self, record: TrainingRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    def read(self) -> List[TrainingRecord]:
        if not self.path.exists():
            return []
        with open(self.path, "r", encoding="utf-8") as f:
            return [TrainingRecord(**json.loads(line)) for line in f if line.strip()]

    def truncate(self, n_records: int) -> None:
        """Keep only the first `n_records` records (used when resuming)."""
        records = self.read()[:n_records]
        self.reset()
        for record in records:
            self.append(record)

    def deterministic_view(self) -> List[Dict[str, Any]]:
        return [r.deterministic_dict() for r in self.read()]

    def to_frame(self) -> pd.DataFrame:
        """One row per iteration with flattened loss columns."""
        rows = []
        for r in self.read():
            row = {"iteration": r.iteration, "margin": r.margin,
                   "mining_mode": r.mining_mode, "wall_time": r.wall_time,
                   "total": r.losses.get("total")}
            for stage in ("mtrn", "mtst"):
                for key, value in r.losses.get(stage, {}).items():
                    row[f"{stage}_{key}"] = value
            for group, norm in r.grad_norms.items():
                row[f"grad_{group}"] = norm
            rows.append(row)
        return pd.DataFrame(rows)

    def summary(self, window: int = 50) -> pd.DataFrame:
        """Rolling mean of every loss column."""
        frame = self.to_frame()
        if frame.empty:
            return frame
        loss_columns = [c for c in frame.columns
                        if c == "total" or c.endswith(("_cls", "_trip", "_seg", "_dep", "_total"))]
        rolled = frame[loss_columns].rolling(window, min_periods=1).mean()
        rolled.insert(0, "iteration", frame["iteration"])
        return rolled

    def generate_report(self) -> str:
        """Short text summary of the run."""
        frame = self.to_frame()
        if frame.empty:
            return "No training iterations recorded yet."

        lines = []
        lines.append("\n" + "=" * 70)
        lines.append("FACET TRAINING SUMMARY")
        lines.append("=" * 70)
        lines.append(f"\nIterations: {len(frame)}")
        lines.append(f"Wall time: {frame['wall_time'].iloc[-1]:.1f} s")
        lines.append(f"First total loss: {frame['total'].iloc[0]:.4f}")
        lines.append(f"Last total loss: {frame['total'].iloc[-1]:.4f}")

        switches = frame.index[frame["mining_mode"] != frame["mining_mode"].shift()].tolist()[1:]
        if switches:
            lines.append(f"Mining switched to batch_hard at iteration {int(frame.loc[switches[0], 'iteration'])}")

        lines.append("\n" + "=" * 70)
        return "\n".join(lines)
