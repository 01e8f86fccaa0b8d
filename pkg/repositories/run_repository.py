#!/usr/bin/env python3
"""
Run Repository - run directories, CSV tables, manifests and reports

A run directory holds:
    config.json, manifest.json, history.csv, metrics.csv, checkpoint.dvae,
    and optional report / table files written by eval, verify and bias-study.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from core.errors import FormatError
from .base import BaseRepository, PathLike

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
MANIFEST_FILE = "manifest.json"
HISTORY_FILE = "history.csv"
METRICS_FILE = "metrics.csv"
CHECKPOINT_FILE = "checkpoint.dvae"


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def parse_cell(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


class RunRepository(BaseRepository):
    """Repository for experiment outputs"""

    # ---------- CSV ----------

    def write_csv(self, path: PathLike, header: Sequence[str], rows: Sequence[Sequence[Any]]):
        """RFC-4180 table; floats with 17 significant digits"""
        with self.open_file(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(list(header))
            for row in rows:
                if len(row) != len(header):
                    raise FormatError("row", f"{len(row)} cells for {len(header)} columns", str(self.resolve(path)))
                writer.writerow([format_cell(v) for v in row])

    def read_csv(self, path: PathLike) -> List[Dict[str, Any]]:
        """Rows as dicts; numeric cells parsed back to int/float"""
        with self.open_file(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError("header", "empty CSV file", str(self.resolve(path)))
            rows = []
            for line in reader:
                if len(line) != len(header):
                    raise FormatError("row", f"{len(line)} cells for {len(header)} columns", str(self.resolve(path)))
                rows.append({k: parse_cell(v) for k, v in zip(header, line)})
        return rows

    # ---------- JSON / text ----------

    def write_json(self, path: PathLike, payload: Any):
        self.write_text(path, json.dumps(payload, indent=2, sort_keys=False) + "\n")

    def read_json(self, path: PathLike) -> Any:
        text = self.read_text(path)
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError("json", str(e), str(self.resolve(path))) from e

    # ---------- run directories ----------

    def create_run(self, out_dir: PathLike) -> Path:
        run_dir = self.ensure_dir(out_dir)
        logger.info(f"[Run] output directory {run_dir}")
        return run_dir

    def write_manifest(self, run_dir: PathLike, files: Dict[str, Dict[str, Any]], extra: Optional[Dict] = None):
        """
        Document every output file

        Args:
            files: file name -> {"description": ..., "columns": {column: meaning}}
        """
        manifest = {"files": files}
        if extra:
            manifest.update(extra)
        self.write_json(Path(run_dir) / MANIFEST_FILE, manifest)

    def list_runs(self) -> List[str]:
        """Sub-directories of the repository root that contain a manifest"""
        root = self.resolve(".")
        if not root.is_dir():
            return []
        return sorted(p.name for p in root.iterdir() if (p / MANIFEST_FILE).is_file())

    def run_dir(self, run_id: str) -> Path:
        if not run_id or "/" in run_id or "\\" in run_id or run_id in (".", ".."):
            raise FormatError("run_id", f"invalid run id '{run_id}'")
        return self.resolve(run_id)
