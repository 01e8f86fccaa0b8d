#!/usr/bin/env python3
"""
Data module - recipe constants, Dataset container and generators
"""
from .constants import (
    PINWHEEL,
    MOG_PRIOR,
    SPIKE_SLAB,
    MMD_SCALES,
    FACTOR_GRID,
)

__all__ = [
    "PINWHEEL",
    "MOG_PRIOR",
    "SPIKE_SLAB",
    "MMD_SCALES",
    "FACTOR_GRID",
]
