"""Flat parameter bundle handed to the simulation kernels."""

from typing import NamedTuple

import numpy as np

BETA_MIXTURE = 0
HEAVY = 1

# rejection draws for the straddling spacing before switching to tail inversion
DEFAULT_ATTEMPTS = 32


class KernelLaw(NamedTuple):
    kind: int
    cumw: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    tail_index: float
    grid_u: np.ndarray
    grid_r: np.ndarray
