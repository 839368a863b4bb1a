"""
Validation utilities for Facet.

This module provides JSON schema validation for the dataset manifest and
the evaluation report, and invariant checks for individual image samples.

Author: Facet Development
"""

from typing import Dict, Any, List, Optional

import numpy as np
from jsonschema import validate, ValidationError

from ..config.labels import DEPTH_SIZE, N_PARSING_CLASSES, SPLITS


# JSON Schemas for validation
MANIFEST_SCHEMA = {
    "type": "object",
    "properties": {
        "domain": {"type": "string", "minLength": 1},
        "domain_id": {"type": "integer", "minimum": 0},
        "records": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "split": {"type": "string", "enum": list(SPLITS)},
                    "label": {"type": "integer", "enum": [0, 1]},
                    "image": {"type": "string", "minLength": 1},
                    "depth": {"type": "string", "minLength": 1},
                    "parsing": {"type": "string", "minLength": 1},
                },
                "required": ["id", "split", "label", "image", "depth", "parsing"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["domain", "records"],
    "additionalProperties": True,
}

EVAL_REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "scores": {"type": "array", "items": {"type": "number"}},
        "labels": {"type": "array", "items": {"type": "integer", "enum": [0, 1]}},
        "auc": {"type": "number", "minimum": 0, "maximum": 1},
        "threshold": {"type": "number"},
        "far": {"type": "number", "minimum": 0, "maximum": 1},
        "frr": {"type": "number", "minimum": 0, "maximum": 1},
        "hter": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "required": ["scores", "labels", "auc", "threshold", "far", "frr", "hter"],
}


EMBEDDING_HEADER_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "array",
    "minItems": 3,
    "prefixItems": [{"const": "domain"}, {"const": "label"}],
    "items": {"type": "string", "pattern": "^e[0-9]+$"},
}


def validate_manifest(data: Dict[str, Any]) -> tuple[bool, Optional[str]]:
    """
    Validate a dataset manifest.

    Args:
        data: Parsed manifest.json content

    Returns:
        Tuple of (is_valid, error_message)

    Example:
        >>> manifest = {"domain": "synth0", "records": [{"id": "a", "split": "train",
        ...     "label": 1, "image": "images/a.png", "depth": "depth/a.png",
        ...     "parsing": "parsing/a.png"}]}
        >>> validate_manifest(manifest)
        (True, None)
    """
    try:
        validate(instance=data, schema=MANIFEST_SCHEMA)
    except ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path)
        return False, f"Manifest error at '{location}': {e.message}"

    ids = [record["id"] for record in data["records"]]
    if len(ids) != len(set(ids)):
        return False, "Manifest error: duplicate record ids"

    return True, None


def validate_eval_report(data: Dict[str, Any]) -> tuple[bool, Optional[str]]:
    """
    Validate a serialized evaluation report.

    Args:
        data: Dictionary produced by EvalReport.to_dict()

    Returns:
        Tuple of (is_valid, error_message)
    """
    try:
        validate(instance=data, schema=EVAL_REPORT_SCHEMA)
    except ValidationError as e:
        return False, f"Validation error: {e.message}"

    if len(data["scores"]) != len(data["labels"]):
        return False, "scores and labels differ in length"
    if abs(data["hter"] - (data["far"] + data["frr"]) / 2) > 1e-12:
        return False, "hter is not (far + frr) / 2"

    return True, None


def validate_embedding_header(columns: List[str]) -> tuple[bool, Optional[str]]:
    """
    Validate the header of an embedding export.

    Args:
        columns: Column names in file order

    Returns:
        Tuple of (is_valid, error_message)

    Example:
        >>> validate_embedding_header(["domain", "label", "e0", "e1"])
        (True, None)
    """
    try:
        validate(instance=columns, schema=EMBEDDING_HEADER_SCHEMA)
    except ValidationError as e:
        return False, f"Embedding header error: {e.message}"

    expected = [f"e{i}" for i in range(len(columns) - 2)]
    if columns[2:] != expected:
        return False, "Embedding columns must be e0..eK in order"

    return True, None


def validate_sample(
    rgb: np.ndarray,
    label: int,
    depth_gt: np.ndarray,
    parsing_gt: np.ndarray,
    domain_id: int
) -> tuple[bool, Optional[str]]:
    """
    Check the invariants of one image sample.

    - rgb is H x W x 3 with every value in [0, 1]
    - label is 1 (live) or 0 (spoof)
    - depth_gt is 32 x 32 in [0, 1], all zeros for spoof samples
    - parsing_gt is H x W with integer labels in 0..12
    - domain_id is a non-negative integer

    Args:
        rgb: Color image
        label: Live/spoof label
        depth_gt: Depth ground truth
        parsing_gt: Parsing mask
        domain_id: Domain index

    Returns:
        Tuple of (is_valid, error_message)
    """
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        return False, f"rgb must be H x W x 3, got shape {rgb.shape}"
    if not np.all(np.isfinite(rgb)) or rgb.min() < 0 or rgb.max() > 1:
        return False, "rgb values must lie in [0, 1]"

    if label not in (0, 1):
        return False, f"label must be 0 or 1, got {label}"

    if depth_gt.shape != (DEPTH_SIZE, DEPTH_SIZE):
        return False, f"depth_gt must be {DEPTH_SIZE} x {DEPTH_SIZE}, got {depth_gt.shape}"
    if not np.all(np.isfinite(depth_gt)) or depth_gt.min() < 0 or depth_gt.max() > 1:
        return False, "depth_gt values must lie in [0, 1]"
    if label == 0 and np.any(depth_gt != 0):
        return False, "spoof sample has a nonzero depth map"

    if parsing_gt.shape != rgb.shape[:2]:
        return False, f"parsing_gt shape {parsing_gt.shape} does not match image {rgb.shape[:2]}"
    if not np.issubdtype(parsing_gt.dtype, np.integer):
        return False, "parsing_gt must hold integer labels"
    if parsing_gt.min() < 0 or parsing_gt.max() >= N_PARSING_CLASSES:
        return False, f"parsing_gt labels must lie in 0..{N_PARSING_CLASSES - 1}"

    if int(domain_id) < 0:
        return False, f"domain_id must be non-negative, got {domain_id}"

    return True, None
