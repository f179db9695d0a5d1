"""Threshold OU model, regime partition and sample paths.

The state space is cut into ``m`` half-open intervals
``[theta_{j-1}, theta_j)`` with ``theta_0 = -inf`` and ``theta_m = +inf``.
A point sitting exactly on a threshold belongs to the regime above it.
Every other module goes through :func:`regime_index` for this convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, ModelError


def _as_float_tuple(values) -> tuple:
    if np.isscalar(values):
        return (float(values),)
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ThresholdOUModel:
    """Drift ``beta_j - alpha_j x`` and diffusion ``sigma_j`` on regime ``j``.

    ``sigma`` may be given as a scalar for the common-diffusion case; it is
    broadcast to all regimes. Construction only normalises types; use
    :func:`validate_model` (or :meth:`check_shape`) for the invariants.
    """

    thresholds: tuple
    alpha: tuple
    beta: tuple
    sigma: tuple

    def __post_init__(self):
        object.__setattr__(self, "thresholds", _as_float_tuple(self.thresholds))
        object.__setattr__(self, "alpha", _as_float_tuple(self.alpha))
        object.__setattr__(self, "beta", _as_float_tuple(self.beta))
        sigma = self.sigma
        if np.isscalar(sigma):
            sigma = [sigma] * len(self.alpha)
        object.__setattr__(self, "sigma", _as_float_tuple(sigma))

    @property
    def m(self) -> int:
        return len(self.alpha)

    @property
    def is_common_diffusion(self) -> bool:
        return len(set(self.sigma)) == 1

    def bounds(self, j: int) -> tuple:
        """Interval ``(lower, upper)`` of the 1-based regime ``j``."""
        edges = (-math.inf,) + self.thresholds + (math.inf,)
        return edges[j - 1], edges[j]

    def check_shape(self) -> None:
        problems = _shape_problems(self)
        if problems:
            raise ModelError("; ".join(problems))

    def with_sigma(self, sigma) -> "ThresholdOUModel":
        return ThresholdOUModel(self.thresholds, self.alpha, self.beta, sigma)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "thresholds": list(self.thresholds),
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "sigma": list(self.sigma),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ThresholdOUModel":
        try:
            model = cls(doc.get("thresholds", []), doc["alpha"], doc["beta"], doc["sigma"])
        except KeyError as exc:
            raise ModelError(f"model document is missing key {exc.args[0]!r}") from None
        if "m" in doc and int(doc["m"]) != model.m:
            raise ModelError(f"m={doc['m']} does not match {model.m} drift entries")
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ThresholdOUModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ModelReport:
    shape_ok: bool
    ergodic: bool
    common_diffusion: bool
    positive_diffusion: bool
    problems: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.problems


def _shape_problems(model: ThresholdOUModel) -> list:
    problems = []
    m = model.m
    if m < 1:
        problems.append("at least one regime is required")
    if len(model.thresholds) != max(m - 1, 0):
        problems.append(f"expected {m - 1} thresholds, got {len(model.thresholds)}")
    for name in ("beta", "sigma"):
        if len(getattr(model, name)) != m:
            problems.append(f"{name} has {len(getattr(model, name))} entries, expected {m}")
    for name in ("thresholds", "alpha", "beta", "sigma"):
        if not all(math.isfinite(v) for v in getattr(model, name)):
            problems.append(f"{name} contains non-finite values")
    th = model.thresholds
    if any(b <= a for a, b in zip(th, th[1:])):
        problems.append("thresholds must be strictly increasing")
    if any(s < 0 for s in model.sigma):
        problems.append("sigma must be non-negative")
    return problems


def _tail_ok(alpha: float, beta: float, side: int) -> bool:
    # lim (-alpha x^2 + 2 beta x) < 0 as x -> side * inf
    if alpha > 0:
        return True
    if alpha == 0:
        return side * beta < 0
    return False


def is_ergodic(model: ThresholdOUModel) -> bool:
    return _tail_ok(model.alpha[0], model.beta[0], -1) and _tail_ok(
        model.alpha[-1], model.beta[-1], +1
    )


def validate_model(model: ThresholdOUModel) -> ModelReport:
    """Check every model invariant and return verdicts instead of raising."""
    problems = _shape_problems(model)
    shape_ok = not problems
    ergodic = shape_ok and is_ergodic(model)
    if shape_ok and not ergodic:
        problems.append("tail condition for an invariant density fails")
    positive = shape_ok and all(s > 0 for s in model.sigma)
    if shape_ok and not positive:
        problems.append("sigma must be strictly positive")
    common = shape_ok and model.is_common_diffusion
    return ModelReport(shape_ok, ergodic, common, positive, tuple(problems))


def regime_index(x, thresholds) -> np.ndarray:
    """0-based regime index of each entry of ``x`` (vectorised)."""
    return np.searchsorted(np.asarray(thresholds, dtype=float), x, side="right")


def regime_of(x: float, model) -> int:
    """1-based regime containing ``x``; ``model`` may also be a threshold list."""
    if not math.isfinite(x):
        raise ModelError(f"state {x!r} is not finite")
    thresholds = model.thresholds if isinstance(model, ThresholdOUModel) else model
    return int(regime_index(x, thresholds)) + 1


def indicators(x: float, thresholds: Sequence[float]) -> np.ndarray:
    m = len(thresholds) + 1
    out = np.zeros(m, dtype=int)
    out[regime_of(x, thresholds) - 1] = 1
    return out


@dataclass(frozen=True)
class SamplePath:
    """Observations ``x_0..x_n`` on the grid ``t_k = k h``."""

    values: np.ndarray
    h: float
    dates: tuple = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise DataError("a sample path needs at least two observations")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DataError(f"observation {bad} is not finite")
        h = float(self.h)
        if not (h > 0 and math.isfinite(h)):
            raise DataError(f"mesh size must be positive, got {self.h!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def horizon(self) -> float:
        return self.n * self.h

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.h

    def __eq__(self, other):
        if not isinstance(other, SamplePath):
            return NotImplemented
        return self.h == other.h and np.array_equal(self.values, other.values)

    __hash__ = None
