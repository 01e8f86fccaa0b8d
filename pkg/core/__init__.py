#!/usr/bin/env python3
"""
Numerical core - autodiff, distributions, networks, objectives, estimators
"""
from .tensor_ad import Tape, Tensor, forward_op
from .networks import Mlp, VaeModel
from .objectives import ObjectiveSpec, ObjectiveTerms, evaluate_objective
from .optimizer import AdamState, adam_step
from .random_streams import RandomStreams

__all__ = [
    "Tape",
    "Tensor",
    "forward_op",
    "Mlp",
    "VaeModel",
    "ObjectiveSpec",
    "ObjectiveTerms",
    "evaluate_objective",
    "AdamState",
    "adam_step",
    "RandomStreams",
]
