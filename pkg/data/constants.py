#!/usr/bin/env python3
"""
Experiment recipe constants - datasets, priors, estimators and optimiser presets
"""

# Pinwheel: 4 spirals, 100 points each
PINWHEEL = {
    "num_classes": 4,
    "per_class": 100,
    "radial_std": 0.1,
    "tangential_std": 0.30,
    "rate": 0.25,
}

# Mixture-of-Gaussians prior used with the pinwheel data (D = 2, C = 4)
MOG_PRIOR = {
    "weights": [0.25, 0.25, 0.25, 0.25],
    "means": [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
    "variance": 0.03,
}

# Sparse prior: weight gamma on the narrow "off" component
SPIKE_SLAB = {
    "gamma": 0.8,
    "slab_off_variance": 0.05,
}

# Dimension-wise Cauchy kernel length scales
MMD_SCALES = (0.2, 0.4, 1.0, 2.0, 4.0, 10.0)

# Fixed Laplace scale for image likelihoods
LAPLACE_SCALE = 0.1

# Disentanglement metric defaults
COLLAPSED_STD = 0.05
DISENTANGLEMENT_BATCH = 64
DISENTANGLEMENT_VOTES = 800

# Optimiser presets: (learning rate, beta1, beta2)
OPTIMISER_PRESETS = {
    "shapes": (1e-4, 0.9, 0.999),
    "pinwheel": (1e-3, 0.9, 0.999),
    "fashion": (5e-4, 0.5, 0.999),
}

# Synthetic factor images: per-factor cardinalities on a 16 x 16 canvas
FACTOR_GRID = {
    "xpos": 8,
    "ypos": 8,
    "scale": 4,
    "shape": 2,
}
FACTOR_IMAGE_SIZE = 16
FACTOR_SHAPES = ("square", "plus")

# Fashion-MNIST ingestion
FASHION_SOURCE_SIZE = 28
FASHION_TARGET_SIZE = 32
