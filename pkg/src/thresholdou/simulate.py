"""Euler-Maruyama simulation of the threshold OU SDE.

Randomness
----------
Each replication draws from its own Philox-4x64 stream (a counter-based
generator, Salmon et al. 2011). The 128-bit Philox key is
``seed + 2**64 * replication_index``, so distinct ``(seed, replication)``
pairs map to distinct keys and no state is shared between replications.

Raw 64-bit words are turned into uniforms on the open interval (0, 1) as
``((w >> 11) + 0.5) * 2**-53`` and then into standard normals with the
inverse normal CDF. Both steps are fixed so that a plan always produces
the same path.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import SimulationError
from .model import SamplePath, ThresholdOUModel

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def derive_substream(seed: int, replication_index: int = 0) -> np.random.Philox:
    """Fresh Philox bit generator for replication ``replication_index``."""
    seed = int(seed)
    replication_index = int(replication_index)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if not 0 <= replication_index <= _MASK64:
        raise ValueError(f"replication index out of range: {replication_index}")
    return np.random.Philox(key=seed | (replication_index << 64))


def uniforms(stream: np.random.Philox, size: int) -> np.ndarray:
    words = stream.random_raw(size)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def standard_normals(stream: np.random.Philox, size: int) -> np.ndarray:
    return ndtri(uniforms(stream, size))


@dataclass(frozen=True)
class SimulationPlan:
    model: ThresholdOUModel
    x0: float
    n: int
    h: float
    seed: int = 0
    replication_index: int = 0

    def __post_init__(self):
        if int(self.n) < 1:
            raise SimulationError(f"need at least one step, got n={self.n}")
        if not float(self.h) > 0:
            raise SimulationError(f"mesh size must be positive, got h={self.h}")
        if not math.isfinite(float(self.x0)):
            raise SimulationError("initial state must be finite")


def euler_path(model: ThresholdOUModel, x0: float, h: float, noise) -> np.ndarray:
    """Run the Euler recursion driven by the given standard normals."""
    thresholds = list(model.thresholds)
    alpha, beta = model.alpha, model.beta
    scale = [s * math.sqrt(h) for s in model.sigma]
    out = [0.0] * (len(noise) + 1)
    x = out[0] = float(x0)
    find = bisect.bisect_right
    for k, z in enumerate(noise.tolist(), start=1):
        j = find(thresholds, x)
        x = x + (beta[j] - alpha[j] * x) * h + scale[j] * z
        out[k] = x
    values = np.array(out)
    if not np.all(np.isfinite(values)):
        step = int(np.flatnonzero(~np.isfinite(values))[0])
        raise SimulationError(f"state became non-finite at step {step}")
    return values


def euler_simulate(plan: SimulationPlan) -> SamplePath:
    """Simulate ``plan.n`` Euler steps; no burn-in is discarded."""
    plan.model.check_shape()
    stream = derive_substream(plan.seed, plan.replication_index)
    noise = standard_normals(stream, int(plan.n))
    values = euler_path(plan.model, plan.x0, float(plan.h), noise)
    return SamplePath(values, float(plan.h))
