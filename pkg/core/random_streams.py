#!/usr/bin/env python3
"""
Named random streams - one seed fans out into independent generators

Each consumer draws from its own stream, so adding a consumer never shifts
the numbers another consumer sees.
"""
import zlib
from typing import Dict

import numpy as np

INIT = "init"
SHUFFLE = "shuffle"
REPARAM = "reparam"
PRIOR_SAMPLES = "prior-samples"
METRIC = "metric"
DATA = "data"

STREAM_NAMES = (DATA, INIT, SHUFFLE, REPARAM, PRIOR_SAMPLES, METRIC)


def stream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


class RandomStreams:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: Dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = stream(self.seed, name)
        return self._streams[name]

    def trial(self, name: str, index: int) -> np.random.Generator:
        """Fresh generator for trial `index` of a sweep; independent of scheduling order"""
        key = zlib.crc32(name.encode("utf-8"))
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(key, int(index))))
