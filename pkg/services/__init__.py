#!/usr/bin/env python3
"""
Service layer - Business logic
"""
from .dataset_service import DatasetService
from .evaluation_service import EvaluationService
from .training_service import TrainingService
from .verification_service import VerificationService
from .bias_study_service import BiasStudyService
from .run_service import RunService
from .request_manager import RequestManager, request_manager

__all__ = [
    "DatasetService",
    "EvaluationService",
    "TrainingService",
    "VerificationService",
    "BiasStudyService",
    "RunService",
    "RequestManager",
    "request_manager",
]
