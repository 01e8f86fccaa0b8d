#!/usr/bin/env python3
"""
Repository layer - File persistence
"""
from .base import BaseRepository
from .dataset_repository import DatasetRepository
from .checkpoint_repository import CheckpointRepository
from .run_repository import RunRepository
from .config_repository import ConfigRepository

__all__ = [
    "BaseRepository",
    "DatasetRepository",
    "CheckpointRepository",
    "RunRepository",
    "ConfigRepository",
]
