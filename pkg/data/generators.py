#!/usr/bin/env python3
"""
Dataset generators

- gen_pinwheel: 2-D spirals, one class per arm
- gen_factor_images: every combination of (xpos, ypos, scale, shape) rendered
  as a binary glyph on a small square canvas
"""
import itertools
import math
from typing import Dict, Optional

import numpy as np

from core.errors import ConfigError
from data.constants import FACTOR_GRID, FACTOR_IMAGE_SIZE, FACTOR_SHAPES, PINWHEEL
from data.dataset import Dataset


def gen_pinwheel(rng: np.random.Generator, num_classes: int = PINWHEEL["num_classes"],
                 per_class: int = PINWHEEL["per_class"], radial_std: float = PINWHEEL["radial_std"],
                 tangential_std: float = PINWHEEL["tangential_std"], rate: float = PINWHEEL["rate"]) -> Dataset:
    """
    For class c: a ~ N(1, radial_std²), b ~ N(0, tangential_std²),
    ψ = 2πc/C + rate·exp(a), point = (a cos ψ - b sin ψ, a sin ψ + b cos ψ)
    """
    if num_classes < 1 or per_class < 1:
        raise ConfigError(f"pinwheel needs C >= 1 and per_class >= 1, got {num_classes}, {per_class}")
    if radial_std <= 0 or tangential_std <= 0:
        raise ConfigError(f"pinwheel standard deviations must be > 0, got {radial_std}, {tangential_std}")

    labels = np.repeat(np.arange(num_classes), per_class)
    noise = rng.standard_normal((labels.size, 2))
    a = 1.0 + radial_std * noise[:, 0]
    b = tangential_std * noise[:, 1]
    psi = 2.0 * math.pi * labels / num_classes + rate * np.exp(a)
    points = np.stack([a * np.cos(psi) - b * np.sin(psi), a * np.sin(psi) + b * np.cos(psi)], axis=1)
    return Dataset(points, labels[:, None], [num_classes], ["class"], "pinwheel")


def _glyph(shape: str, size: int) -> np.ndarray:
    if shape == "square":
        return np.ones((size, size))
    mask = np.zeros((size, size))
    mid = size // 2
    mask[mid, :] = 1.0
    mask[:, mid] = 1.0
    return mask


def gen_factor_images(cardinalities: Optional[Dict[str, int]] = None,
                      image_size: int = FACTOR_IMAGE_SIZE) -> Dataset:
    """
    Deterministic enumeration of all factor combinations

    Glyph side for scale index i is 3 + 2i; positions are spread evenly over
    the room left by the largest glyph.
    """
    grid = dict(FACTOR_GRID if cardinalities is None else cardinalities)
    names = ["xpos", "ypos", "scale", "shape"]
    if set(grid) != set(names):
        raise ConfigError(f"factor grid must name exactly {names}, got {sorted(grid)}")
    for name in ("xpos", "ypos", "scale"):
        if grid[name] < 2:
            raise ConfigError(f"factor '{name}' needs cardinality >= 2, got {grid[name]}")
    if not 1 <= grid["shape"] <= len(FACTOR_SHAPES):
        raise ConfigError(f"factor 'shape' needs cardinality in [1, {len(FACTOR_SHAPES)}], got {grid['shape']}")

    sizes = [3 + 2 * i for i in range(grid["scale"])]
    room = image_size - sizes[-1]
    if room < 0:
        raise ConfigError(f"glyph of side {sizes[-1]} does not fit a {image_size}x{image_size} canvas")
    xs = np.round(np.linspace(0, room, grid["xpos"])).astype(int)
    ys = np.round(np.linspace(0, room, grid["ypos"])).astype(int)

    cards = [grid[n] for n in names]
    total = int(np.prod(cards))
    images = np.zeros((total, image_size, image_size))
    factors = np.zeros((total, len(names)), dtype=np.int64)
    for row, (ix, iy, isc, ish) in enumerate(itertools.product(*(range(c) for c in cards))):
        size = sizes[isc]
        x0, y0 = xs[ix], ys[iy]
        images[row, y0:y0 + size, x0:x0 + size] = _glyph(FACTOR_SHAPES[ish], size)
        factors[row] = (ix, iy, isc, ish)
    return Dataset(images.reshape(total, -1), factors, cards, names, "factor-images")
