#!/usr/bin/env python3
"""
Main FastAPI application - decomposition VAE runs, jobs and verification
"""
import logging
from datetime import datetime

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from config import CORS_ORIGINS, HOST, LOG_FORMAT, LOG_LEVEL, PORT
from controllers import job_router, run_router

VERSION = "1.0.0"

app = FastAPI(
    title="Decomposition VAE API",
    description="Browse training runs and queue training, verification and bias-study jobs",
    version=VERSION,
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Register routers
app.include_router(run_router)
app.include_router(job_router)


@app.get("/")
async def root():
    """Health check endpoint"""
    return {
        "status": "online",
        "service": "Decomposition VAE API",
        "version": VERSION,
        "timestamp": datetime.now().isoformat()
    }


if __name__ == "__main__":
    import uvicorn
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
    uvicorn.run(app, host=HOST, port=PORT)
