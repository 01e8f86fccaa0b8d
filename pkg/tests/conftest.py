"""Shared fixtures: seeded generators, small models and throwaway run directories."""
import json

import numpy as np
import pytest

from core.distributions import GaussianFixedScale, IsotropicGaussian
from core.networks import VaeModel


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def make_model(input_dim=4, latent_dim=2, hidden=(5,), prior=None, likelihood=None, seed=0,
               activation="tanh"):
    """Small VAE with smooth activations so finite differences stay accurate."""
    prior = prior if prior is not None else IsotropicGaussian(latent_dim)
    likelihood = likelihood if likelihood is not None else GaussianFixedScale(1.0)
    return VaeModel.initialise(input_dim, latent_dim, list(hidden), likelihood, prior,
                               np.random.default_rng(seed), activation=activation)


@pytest.fixture
def small_model():
    return make_model()


def pinwheel_config(out, **changes):
    """A tiny pinwheel experiment tree that trains in well under a second."""
    tree = {
        "schema_version": 1,
        "name": "pinwheel-tiny",
        "seed": 1,
        "out": str(out),
        "dataset": {"source": "pinwheel", "per_class": 10},
        "model": {"latent_dim": 2, "hidden": [8], "activation": "tanh"},
        "likelihood": {"kind": "gaussian", "variance": 0.1},
        "prior": {"kind": "isotropic_gaussian"},
        "objective": {"variant": "elbo"},
        "optimizer": {"preset": "pinwheel"},
        "epochs": 3,
        "metrics": [],
    }
    tree.update(changes)
    return tree


@pytest.fixture
def write_config(tmp_path):
    """Write a config tree to a JSON file under tmp_path and return its path."""
    def _write(tree, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(tree))
        return path
    return _write
