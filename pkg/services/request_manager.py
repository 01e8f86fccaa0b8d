#!/usr/bin/env python3
"""
Request Manager - background jobs for heavy HTTP requests

A semaphore of capacity DVAE_THREADS bounds how many training runs,
verification sweeps or bias studies execute at once; the rest queue.
"""
import logging
import threading
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

from config import DVAE_THREADS

logger = logging.getLogger(__name__)


class JobStatus:
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


class RequestManager:
    """
    Runs submitted callables on daemon threads behind a semaphore

    Usage:
        job_id = manager.submit("train", lambda: training_service.train(config))
        manager.get_status(job_id)
    """

    def __init__(self, capacity: int = DVAE_THREADS):
        self._semaphore = threading.Semaphore(max(1, capacity))
        self._jobs: Dict[str, dict] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self.capacity = max(1, capacity)
        logger.info(f"[RequestManager] initialised with capacity {self.capacity}")

    def submit(self, kind: str, task_fn: Callable[[], Dict[str, Any]]) -> str:
        """
        Queue a job

        Args:
            kind: Job category ("train", "verify", "bias-study")
            task_fn: No-argument callable returning a JSON-serialisable dict

        Returns:
            job_id
        """
        with self._lock:
            self._counter += 1
            job_id = f"job_{self._counter}"
            self._jobs[job_id] = {
                "job_id": job_id,
                "kind": kind,
                "status": JobStatus.QUEUED,
                "created_at": datetime.now().isoformat(),
                "finished_at": None,
                "result": None,
                "error": None,
                "done": threading.Event(),
            }
        logger.info(f"[RequestManager] submitted {job_id} ({kind})")
        threading.Thread(target=self._run, args=(job_id, task_fn), daemon=True).start()
        return job_id

    def _run(self, job_id: str, task_fn: Callable[[], Dict[str, Any]]):
        job = self._jobs[job_id]
        with self._semaphore:
            job["status"] = JobStatus.RUNNING
            logger.info(f"[RequestManager] {job_id} started")
            try:
                job["result"] = task_fn()
                job["status"] = JobStatus.DONE
                logger.info(f"[RequestManager] {job_id} done")
            except Exception as e:
                job["error"] = f"{type(e).__name__}: {e}"
                job["status"] = JobStatus.FAILED
                logger.error(f"[RequestManager] {job_id} failed: {job['error']}")
            finally:
                job["finished_at"] = datetime.now().isoformat()
                job["done"].set()

    def get_status(self, job_id: str) -> Optional[dict]:
        job = self._jobs.get(job_id)
        if job is None:
            return None
        return {k: v for k, v in job.items() if k != "done"}

    def wait(self, job_id: str, timeout: Optional[float] = None) -> bool:
        """Block until the job finishes; False on timeout or unknown id"""
        job = self._jobs.get(job_id)
        return bool(job and job["done"].wait(timeout))

    def list_jobs(self) -> List[dict]:
        return [self.get_status(job_id) for job_id in list(self._jobs)]


request_manager = RequestManager()
