"""
Dataset repository for Facet.

This module reads and writes the on-disk dataset layout and serves as the
data access layer for the training and evaluation code:

    <root>/<domain>/manifest.json
    <root>/<domain>/images/<id>.png     8-bit RGB
    <root>/<domain>/depth/<id>.png      8-bit grayscale, 32 x 32 (value / 255)
    <root>/<domain>/parsing/<id>.png    8-bit grayscale, pixel = label 0..12

Manifest records: {id, split, label, image, depth, parsing}, paths relative
to the domain directory. Externally prepared real data only needs to follow
this layout.

Author: Facet Development
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from PIL import Image

from .schema import DomainDataset, ImageSample
from ..utils.errors import DataError
from ..utils.validators import validate_manifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(values, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def _read_manifest(domain_dir: Path) -> Dict[str, Any]:
    manifest_path = domain_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise DataError(f"Missing manifest: {manifest_path}")
    try:
        with open(manifest_path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"Malformed manifest {manifest_path}: {e}") from e

    is_valid, error = validate_manifest(manifest)
    if not is_valid:
        raise DataError(f"Malformed manifest {manifest_path}: {error}")
    return manifest


def _load_png(path: Path, sample_id: str, kind: str) -> np.ndarray:
    if not path.exists():
        raise DataError(f"Sample '{sample_id}': missing {kind} file {path}")
    try:
        with Image.open(path) as img:
            if kind == "image":
                return np.asarray(img.convert("RGB"))
            return np.array(img)
    except OSError as e:
        raise DataError(f"Sample '{sample_id}': unreadable {kind} file {path}: {e}") from e


def save_domain(dataset: DomainDataset, root: PathLike, append: bool = False) -> Path:
    """
    Write one dataset split in the repository layout.

    Args:
        dataset: Dataset to write
        root: Dataset root directory
        append: Merge into an existing manifest of the same domain (used to
            store several splits of one domain side by side)

    Returns:
        Path of the domain directory

    Example:
        >>> save_domain(train, "data/synthetic")
        >>> save_domain(dev, "data/synthetic", append=True)
    """
    domain_dir = Path(root) / dataset.name
    for sub in ("images", "depth", "parsing"):
        (domain_dir / sub).mkdir(parents=True, exist_ok=True)

    records: List[Dict[str, Any]] = []
    if append and (domain_dir / MANIFEST_NAME).exists():
        records = _read_manifest(domain_dir)["records"]
    new_ids = {s.sample_id for s in dataset.samples}
    records = [r for r in records if r["id"] not in new_ids]

    for sample in dataset.samples:
        if not sample.sample_id:
            raise DataError(f"Domain '{dataset.name}': samples need ids to be saved")
        rel = {
            "image": f"images/{sample.sample_id}.png",
            "depth": f"depth/{sample.sample_id}.png",
            "parsing": f"parsing/{sample.sample_id}.png",
        }
        Image.fromarray(_to_uint8(sample.rgb)).save(domain_dir / rel["image"])
        Image.fromarray(_to_uint8(sample.depth_gt)).save(domain_dir / rel["depth"])
        Image.fromarray(sample.parsing_gt.astype(np.uint8)).save(domain_dir / rel["parsing"])
        records.append({
            "id": sample.sample_id,
            "split": dataset.split,
            "label": int(sample.label),
            **rel,
        })

    manifest = {"domain": dataset.name, "domain_id": int(dataset.domain_id), "records": records}
    with open(domain_dir / MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)

    logger.debug("Saved %d samples of %s/%s", len(dataset), dataset.name, dataset.split)
    return domain_dir


def load_domain(path: PathLike, split: Optional[str] = None) -> DomainDataset:
    """
    Load and validate one domain directory.

    Args:
        path: Domain directory containing manifest.json
        split: Only load records of this split. None loads every record and
            labels the result as the "test" split (a held-out domain is
            evaluated on all of its samples).

    Returns:
        DomainDataset in manifest order

    Raises:
        DataError: Missing/malformed manifest, missing files (naming the
            sample id), or samples violating the ImageSample invariants
    """
    domain_dir = Path(path)
    manifest = _read_manifest(domain_dir)
    domain_id = int(manifest.get("domain_id", 0))

    records = manifest["records"]
    if split is not None:
        records = [r for r in records if r["split"] == split]
        if not records:
            raise DataError(f"Domain '{manifest['domain']}' has no records for split '{split}'")

    samples = []
    for record in records:
        sample_id = record["id"]
        rgb = _load_png(domain_dir / record["image"], sample_id, "image")
        depth = _load_png(domain_dir / record["depth"], sample_id, "depth")
        parsing = _load_png(domain_dir / record["parsing"], sample_id, "parsing")
        if depth.ndim != 2 or parsing.ndim != 2:
            raise DataError(f"Sample '{sample_id}': depth and parsing maps must be single-channel")

        samples.append(ImageSample(
            rgb=rgb.astype(np.float32) / np.float32(255.0),
            label=int(record["label"]),
            depth_gt=depth.astype(np.float32) / np.float32(255.0),
            parsing_gt=parsing.astype(np.uint8),
            domain_id=domain_id,
            sample_id=sample_id,
        ))

    return DomainDataset(
        name=manifest["domain"],
        samples=tuple(samples),
        split=split or "test",
        domain_id=domain_id,
    )


def load_domains(
    root: PathLike,
    names: Sequence[str],
    split: Optional[str] = None,
    workers: Optional[int] = None
) -> List[DomainDataset]:
    """Load several domains of one root in parallel; order follows `names`."""
    root = Path(root)
    if not names:
        return []
    with ThreadPoolExecutor(max_workers=workers or len(names)) as pool:
        return list(pool.map(lambda name: load_domain(root / name, split), names))


def list_domains(root: PathLike) -> List[str]:
    """Names of the domain directories under `root` that hold a manifest."""
    root = Path(root)
    if not root.exists():
        return []
    return sorted(p.name for p in root.iterdir() if (p / MANIFEST_NAME).exists())
