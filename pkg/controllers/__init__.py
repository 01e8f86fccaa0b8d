#!/usr/bin/env python3
"""
Controller layer - API route handlers
"""
from .run_controller import router as run_router
from .job_controller import router as job_router

__all__ = [
    "run_router",
    "job_router",
]
