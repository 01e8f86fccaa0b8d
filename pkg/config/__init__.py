#!/usr/bin/env python3
"""
Configuration module
"""
import os
from dotenv import load_dotenv

load_dotenv()

# Worker cap for trial-parallel sweeps (verification, bias study, API jobs)
DVAE_THREADS = max(1, int(os.getenv("DVAE_THREADS", "1")))

# Run directories
RUNS_DIR = os.getenv("DVAE_RUNS_DIR", "runs")

# Logging
LOG_LEVEL = os.getenv("DVAE_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# API settings
HOST = os.getenv("HOST", "127.0.0.1")
PORT = int(os.getenv("PORT", "8000"))
CORS_ORIGINS = [
    origin.strip()
    for origin in os.getenv("CORS_ORIGINS", "http://localhost:3000").split(",")
    if origin.strip()
]

# Numerical tolerances
CLOSED_FORM_TOL = 1e-8       # closed-form identity residuals
GRADIENT_REL_TOL = 1e-6      # gradient identity, relative
ROTATION_TOL = 1e-10         # rotation-invariance residual
QUADRATURE_TOL = 1e-8        # 1-D quadrature error estimate
MC_SIGMA = 3.0               # Monte-Carlo comparisons in standard errors

# Caps
ORACLE_MAX_COMPONENTS = 4096  # largest n for brute-force aggregate densities
BERNOULLI_CLAMP = 1e-7
