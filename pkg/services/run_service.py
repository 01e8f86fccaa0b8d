#!/usr/bin/env python3
"""
Run Service - read access to finished run directories
"""
import logging
from typing import Any, Dict, List, Optional

from config import RUNS_DIR
from core.errors import ConfigError
from models import RunSummary
from repositories.run_repository import CONFIG_FILE, HISTORY_FILE, MANIFEST_FILE, METRICS_FILE, RunRepository

logger = logging.getLogger(__name__)


class RunService:
    """Service for browsing runs under the runs directory"""

    def __init__(self, repo: Optional[RunRepository] = None):
        self.repo = repo or RunRepository(RUNS_DIR)

    def list_runs(self) -> List[str]:
        return self.repo.list_runs()

    def _existing(self, run_id: str):
        run_dir = self.repo.run_dir(run_id)
        if not (run_dir / MANIFEST_FILE).is_file():
            raise ConfigError(f"run '{run_id}' not found")
        return run_dir

    def get_run(self, run_id: str) -> RunSummary:
        run_dir = self._existing(run_id)
        manifest = self.repo.read_json(run_dir / MANIFEST_FILE)
        config = self.repo.read_json(run_dir / CONFIG_FILE) if (run_dir / CONFIG_FILE).is_file() else None
        metrics = {}
        if (run_dir / METRICS_FILE).is_file():
            for row in self.repo.read_csv(run_dir / METRICS_FILE):
                metrics[row["metric"]] = row["value"]
        return RunSummary(run_id=run_id, files=sorted(manifest.get("files", {})), config=config, metrics=metrics)

    def _table(self, run_id: str, name: str) -> List[Dict[str, Any]]:
        run_dir = self._existing(run_id)
        if not (run_dir / name).is_file():
            raise ConfigError(f"run '{run_id}' has no {name}")
        return self.repo.read_csv(run_dir / name)

    def history(self, run_id: str) -> List[Dict[str, Any]]:
        return self._table(run_id, HISTORY_FILE)

    def metrics(self, run_id: str) -> List[Dict[str, Any]]:
        return self._table(run_id, METRICS_FILE)
