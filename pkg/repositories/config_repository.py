#!/usr/bin/env python3
"""
Config Repository - JSON configuration documents
"""
import json
from typing import Any, Dict

from core.errors import ConfigError
from .base import BaseRepository, PathLike


class ConfigRepository(BaseRepository):
    """Loads raw JSON config trees; validation happens in the models layer"""

    def load(self, path: PathLike) -> Dict[str, Any]:
        text = self.read_text(path)
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{self.resolve(path)}: invalid JSON ({e})") from e
        if not isinstance(tree, dict):
            raise ConfigError(f"{self.resolve(path)}: top level must be a JSON object")
        return tree

    def save(self, path: PathLike, tree: Dict[str, Any]):
        self.write_text(path, json.dumps(tree, indent=2) + "\n")
