#!/usr/bin/env python3
"""
Run Controller - API routes for finished run directories
"""
from fastapi import APIRouter, HTTPException

from services.run_service import RunService

router = APIRouter(prefix="/api", tags=["Runs"])

# Service instance
run_service = RunService()


@router.get("/runs")
async def list_runs():
    """
    Run ids under the runs directory

    Returns:
        {"total": int, "runs": [run_id, ...]}
    """
    try:
        runs = run_service.list_runs()
        return {"total": len(runs), "runs": runs}
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/runs/{run_id}")
async def get_run(run_id: str):
    """Config, file list and final metrics of one run"""
    try:
        return run_service.get_run(run_id)
    except ValueError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/runs/{run_id}/history")
async def get_history(run_id: str):
    try:
        rows = run_service.history(run_id)
        return {"run_id": run_id, "rows": rows}
    except ValueError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/runs/{run_id}/metrics")
async def get_metrics(run_id: str):
    try:
        rows = run_service.metrics(run_id)
        return {"run_id": run_id, "rows": rows}
    except ValueError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))
