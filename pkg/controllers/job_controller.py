#!/usr/bin/env python3
"""
Job Controller - API routes that queue training, verification and bias-study jobs

Requests are validated synchronously (400 on a bad config); the work itself
runs in the background behind the request manager's semaphore.
"""
import os
import uuid
from typing import Any, Dict

from fastapi import APIRouter, HTTPException

from config import RUNS_DIR
from models import (
    BiasStudyConfig,
    ExperimentConfig,
    JobInfo,
    TrainJobRequest,
    VerificationConfig,
    apply_overrides,
    validate_config,
)
from services.bias_study_service import BiasStudyService
from services.request_manager import request_manager
from services.training_service import TrainingService
from services.verification_service import VerificationService

router = APIRouter(prefix="/api", tags=["Jobs"])

# Service instances
training_service = TrainingService()
verification_service = VerificationService()
bias_study_service = BiasStudyService()


def _job(job_id: str) -> JobInfo:
    return JobInfo(**request_manager.get_status(job_id))


@router.post("/jobs/train", status_code=202, response_model=JobInfo)
async def submit_training(request: TrainJobRequest):
    """
    Queue a training run

    The run directory is placed under the runs directory whatever `out` says.
    """
    try:
        tree = apply_overrides(request.config, request.overrides)
        run_id = f"{tree.get('name', 'experiment')}-{uuid.uuid4().hex[:8]}"
        tree["out"] = os.path.join(RUNS_DIR, run_id)
        config = validate_config(ExperimentConfig, tree)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    def task() -> Dict[str, Any]:
        result = training_service.train(config)
        final = result.history[-1] if result.history else {}
        return {"run_id": run_id, "run_dir": str(result.run_dir), "final": final,
                "metrics": {row["metric"]: row["value"] for row in result.metrics}}

    return _job(request_manager.submit("train", task))


@router.get("/jobs")
async def list_jobs():
    return {"jobs": request_manager.list_jobs()}


@router.get("/jobs/{job_id}", response_model=JobInfo)
async def get_job(job_id: str):
    status = request_manager.get_status(job_id)
    if status is None:
        raise HTTPException(status_code=404, detail=f"job '{job_id}' not found")
    return JobInfo(**status)


@router.post("/verify", status_code=202, response_model=JobInfo)
async def submit_verification(tree: Dict[str, Any]):
    """Queue the identity sweeps; the job result is the verification report"""
    try:
        tree = dict(tree)
        tree["out"] = os.path.join(RUNS_DIR, f"verify-{uuid.uuid4().hex[:8]}")
        config = validate_config(VerificationConfig, tree)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    def task() -> Dict[str, Any]:
        report, trials = verification_service.run(config)
        out = verification_service.write(config, report, trials)
        return {"out": str(out), **report.model_dump(mode="json")}

    return _job(request_manager.submit("verify", task))


@router.post("/bias-study", status_code=202, response_model=JobInfo)
async def submit_bias_study(tree: Dict[str, Any]):
    """Queue the minibatch-entropy bias table"""
    try:
        tree = dict(tree)
        tree["out"] = os.path.join(RUNS_DIR, f"bias-study-{uuid.uuid4().hex[:8]}")
        config = validate_config(BiasStudyConfig, tree)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    def task() -> Dict[str, Any]:
        rows = bias_study_service.run(config)
        out = bias_study_service.write(config, rows)
        return {"out": str(out), "rows": [r.to_dict() for r in rows]}

    return _job(request_manager.submit("bias-study", task))
