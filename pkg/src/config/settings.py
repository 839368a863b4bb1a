"""
Configuration management for Facet.

This module handles process-level settings: logging, CPU threads, default
data/output locations and progress display. Values come from environment
variables (optionally from a .env file). Run hyperparameters live in
run_config.py; the published defaults of the method are collected here
so that any resolved configuration can be audited against them.

Author: Facet Development
"""

import os
from typing import Dict, Any
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


# Hyperparameters stated for the method. Keys are flat dotted run-config keys.
PUBLISHED_DEFAULTS: Dict[str, Any] = {
    "loss.lambda_mtrn": 1.0,
    "loss.lambda_mtst": 1.0,
    "loss.lambda_cls": 1.0,
    "loss.lambda_dep": 10.0,
    "loss.lambda_seg": 1.0,
    "loss.lambda_trip": 0.5,
    "meta.lr": 1e-3,
    "meta.beta1": 0.9,
    "meta.weight_decay": 5e-5,
    "meta.batch_size": 20,
    "meta.stage1_margin": 0.1,
}

# Reference numbers for the O&C&I -> M protocol on the real datasets.
# Documentation only; the synthetic benchmark cannot reproduce them.
PUBLISHED_REFERENCE_RESULT: Dict[str, float] = {"hter_percent": 7.38, "auc_percent": 96.66}


class Settings:
    """
    Process settings and configuration.

    This class centralizes:
    - Logging level and debug mode
    - Default dataset root and output directory
    - Torch CPU thread count
    - Progress bar display

    Example:
        >>> settings = Settings()
        >>> print(settings.DATA_ROOT)
        'data/synthetic'
    """

    # Application
    APP_NAME: str = os.getenv("APP_NAME", "Facet")
    DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Filesystem
    DATA_ROOT: str = os.getenv("FACET_DATA_ROOT", "data/synthetic")
    OUTPUT_DIR: str = os.getenv("FACET_OUTPUT_DIR", "runs/default")

    # Compute
    # Desk-scale runs are CPU-only; bit-exact resume is only promised on CPU.
    NUM_THREADS: int = int(os.getenv("FACET_NUM_THREADS", "0"))  # 0 = torch default

    # Display
    SHOW_PROGRESS: bool = os.getenv("FACET_SHOW_PROGRESS", "true").lower() == "true"

    VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

    def __init__(self):
        """Initialize settings and validate configuration."""
        self._validate()

    def _validate(self) -> None:
        """
        Validate settings values.

        Raises:
            ValueError: If a setting has an unsupported value
        """
        if self.LOG_LEVEL.upper() not in self.VALID_LOG_LEVELS:
            raise ValueError(
                f"Invalid LOG_LEVEL: {self.LOG_LEVEL}. "
                f"Must be one of {', '.join(self.VALID_LOG_LEVELS)}."
            )

        if self.NUM_THREADS < 0:
            raise ValueError("FACET_NUM_THREADS must be >= 0")

    def get_published_default(self, key: str) -> Any:
        """
        Get a published hyperparameter by its dotted config key.

        Args:
            key: Flat dotted key, e.g. "loss.lambda_dep"

        Returns:
            The published value

        Raises:
            ValueError: If the method does not state a value for this key
        """
        if key not in PUBLISHED_DEFAULTS:
            raise ValueError(f"No published default for: {key}")
        return PUBLISHED_DEFAULTS[key]

    def __repr__(self) -> str:
        """String representation of settings."""
        return (
            f"Settings(\n"
            f"  APP_NAME={self.APP_NAME},\n"
            f"  LOG_LEVEL={self.LOG_LEVEL},\n"
            f"  DATA_ROOT={self.DATA_ROOT},\n"
            f"  OUTPUT_DIR={self.OUTPUT_DIR},\n"
            f"  SHOW_PROGRESS={self.SHOW_PROGRESS}\n"
            f")"
        )


# Global settings instance
settings = Settings()


if __name__ == "__main__":
    print("=" * 50)
    print("Facet Settings")
    print("=" * 50)
    print(settings)
    print("\nPublished hyperparameters:")
    for key, value in PUBLISHED_DEFAULTS.items():
        print(f"  {key} = {value}")
