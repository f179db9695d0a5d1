"""Monte Carlo replication harness and normality diagnostics.

Replication ``r`` always draws from substream ``(seed, r)``, so a summary
does not depend on how replications are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .errors import DegenerateRegimeError, MonteCarloError, ThresholdOUError
from .estimators import accumulate_regime_sums, drift_from_sums, qve, residual_sums
from .model import ThresholdOUModel, validate_model
from .simulate import SimulationPlan, euler_simulate
from .stationary import asymptotic_covariance, invariant_density

ESTIMATORS = ("lse", "lse0", "mqve", "qve")
MAX_DEGENERATE_FRACTION = 0.10


@dataclass(frozen=True)
class ScenarioConfig:
    """One Monte Carlo experiment.

    ``estimators`` picks from ``lse`` (alpha and beta), ``lse0`` (alpha with
    known zero intercepts), ``mqve`` and ``qve``. The model parameters serve
    as the truth for bias computations.
    """

    model: ThresholdOUModel
    n: int
    h: float
    reps: int
    seed: int = 1
    x0: float = 0.0
    burnin: int = 0
    estimators: tuple = ("lse", "mqve", "qve")
    level: float = 0.95
    name: str = "custom"

    def __post_init__(self):
        if self.reps < 1:
            raise MonteCarloError("need at least one replication")
        if self.burnin < 0:
            raise MonteCarloError("burn-in must be non-negative")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise MonteCarloError(f"unknown estimators: {sorted(unknown)}")
        if "lse" in self.estimators and "lse0" in self.estimators:
            raise MonteCarloError("choose one of 'lse' and 'lse0'")
        object.__setattr__(self, "estimators", tuple(self.estimators))
        self.model.check_shape()

    @property
    def horizon(self) -> float:
        return self.n * self.h

    # shortcuts to the model parameters
    thresholds = property(lambda self: self.model.thresholds)
    alpha = property(lambda self: self.model.alpha)
    beta = property(lambda self: self.model.beta)
    sigma = property(lambda self: self.model.sigma)

    def truth(self) -> dict:
        m = self.model
        out = {}
        if "lse" in self.estimators or "lse0" in self.estimators:
            out.update({f"alpha_{i + 1}": a for i, a in enumerate(m.alpha)})
        if "lse" in self.estimators:
            out.update({f"beta_{i + 1}": b for i, b in enumerate(m.beta)})
        if "mqve" in self.estimators:
            out.update({f"sigma_{i + 1}": s for i, s in enumerate(m.sigma)})
        if "qve" in self.estimators:
            out.update({f"sigma_qve_{i + 1}": s for i, s in enumerate(m.sigma)})
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model.to_dict(),
            "x0": self.x0,
            "n": self.n,
            "h": self.h,
            "reps": self.reps,
            "seed": self.seed,
            "burnin": self.burnin,
            "estimators": list(self.estimators),
            "level": self.level,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        return cls(
            model=ThresholdOUModel.from_dict(doc["model"]),
            n=int(doc["n"]),
            h=float(doc["h"]),
            reps=int(doc["reps"]),
            seed=int(doc.get("seed", 1)),
            x0=float(doc.get("x0", 0.0)),
            burnin=int(doc.get("burnin", 0)),
            estimators=tuple(doc.get("estimators", ("lse", "mqve", "qve"))),
            level=float(doc.get("level", 0.95)),
            name=str(doc.get("name", "custom")),
        )


_PRESET_MODELS = {
    "scenario1": (ThresholdOUModel((-0.5, 0.5), (1, 2, 3), (0.3, 0.5, 0.7), (1, 2, 3)),
                  ("lse", "mqve", "qve")),
    "scenario2": (ThresholdOUModel((0.0,), (1, 2), (0, 0), 1.0), ("lse0", "mqve")),
    "scenario3": (ThresholdOUModel((0.0,), (1, 2), (-0.3, 0.3), 1.0), ("lse", "mqve")),
}


def scenario_presets() -> dict:
    """The three simulation designs at their published scale
    (``n=5000``, ``h=0.1``, ``N=1000``)."""
    return {
        name: ScenarioConfig(model, n=5000, h=0.1, reps=1000, estimators=est, name=name)
        for name, (model, est) in _PRESET_MODELS.items()
    }


def preset(name: str, **overrides) -> ScenarioConfig:
    try:
        config = scenario_presets()[name]
    except KeyError:
        raise MonteCarloError(f"unknown scenario {name!r}") from None
    return replace(config, **overrides)


def _replicate(config: ScenarioConfig, r: int):
    """Estimates and plug-in variances (already divided by ``n h``) for
    replication ``r``; ``None`` when any requested estimate degenerates."""
    plan = SimulationPlan(config.model, config.x0, config.n + config.burnin, config.h,
                          config.seed, r)
    path = euler_simulate(plan)
    if config.burnin:
        path = type(path)(path.values[config.burnin:], path.h)
    thresholds = config.model.thresholds
    h = path.h
    sums = accumulate_regime_sums(path, thresholds)
    est, var = {}, {}
    drift = None
    if "lse" in config.estimators or "lse0" in config.estimators:
        zero = "lse0" in config.estimators
        drift = drift_from_sums(sums, h, zero)
        if drift.degenerate.any():
            return None
        rss = residual_sums(path, thresholds, drift)
        for i, s in enumerate(sums):
            s2 = rss[i] / s.L
            est[f"alpha_{i + 1}"] = float(drift.alpha[i])
            if zero:
                var[f"alpha_{i + 1}"] = s2 / (h * s.D)
            else:
                den = h * (s.count * s.D - s.J * s.J)
                est[f"beta_{i + 1}"] = float(drift.beta[i])
                var[f"alpha_{i + 1}"] = s2 * s.count / den
                var[f"beta_{i + 1}"] = s2 * s.D / den
    if "mqve" in config.estimators:
        if drift is None or drift.zero_intercept:
            drift = drift_from_sums(sums, h, False)
        if drift.degenerate.any() or any(s.L == 0 for s in sums):
            return None
        rss = residual_sums(path, thresholds, drift)
        for i, s in enumerate(sums):
            est[f"sigma_{i + 1}"] = math.sqrt(rss[i] / s.L)
    if "qve" in config.estimators:
        sig = qve(path, thresholds)
        if np.isnan(sig).any():
            return None
        for i, v in enumerate(sig):
            est[f"sigma_qve_{i + 1}"] = float(v)
    return est, var


def _replicate_chunk(args):
    config, indices = args
    return [_replicate(config, r) for r in indices]


def _analytic_variances(config: ScenarioConfig):
    """Limit variances of ``sqrt(nh)(estimate - truth)`` from the invariant
    density, or ``None`` when it is unavailable (regime-dependent sigma)."""
    report = validate_model(config.model)
    if not (report.ergodic and report.common_diffusion and report.positive_diffusion):
        return None
    try:
        density = invariant_density(config.model)
        out = {}
        for i in range(1, config.model.m + 1):
            cov = asymptotic_covariance(density, i)
            if "lse0" in config.estimators:
                out[f"alpha_{i}"] = cov.zero_intercept_variance
            else:
                out[f"alpha_{i}"] = cov.matrix[0, 0]
                out[f"beta_{i}"] = cov.matrix[1, 1]
        return out
    except ThresholdOUError:
        return None


def _mean_std(values: np.ndarray):
    # deviations from the first draw keep a constant sample exactly constant
    d = values - values[0]
    mean_d = math.fsum(d) / d.size
    mean = values[0] + mean_d
    if d.size < 2:
        return mean, None
    var = math.fsum((d - mean_d) ** 2) / (d.size - 1)
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class ParameterSummary:
    name: str
    truth: float
    bias: float
    std: float
    estimates: np.ndarray
    z: np.ndarray = None
    standardization: str = None
    ks: float = None

    def to_dict(self) -> dict:
        return {"name": self.name, "truth": self.truth, "bias": self.bias, "std": self.std,
                "standardization": self.standardization, "ks": self.ks}


@dataclass(frozen=True)
class MonteCarloSummary:
    config: ScenarioConfig
    replications: tuple
    degenerate: tuple
    params: dict = field(default_factory=dict)

    @property
    def n_valid(self) -> int:
        return len(self.replications)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "valid_replications": self.n_valid,
            "degenerate_replications": list(self.degenerate),
            "parameters": [p.to_dict() for p in self.params.values()],
        }


def run_scenario(config: ScenarioConfig, workers: int = 1) -> MonteCarloSummary:
    """Run all replications and summarise bias, spread and standardised
    estimates per parameter."""
    indices = list(range(config.reps))
    if workers > 1 and config.reps > 1:
        chunks = [indices[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replicate_chunk, [(config, c) for c in chunks]))
        results = [None] * config.reps
        for chunk, part in zip(chunks, parts):
            for r, res in zip(chunk, part):
                results[r] = res
    else:
        results = [_replicate(config, r) for r in indices]

    valid = tuple(r for r, res in zip(indices, results) if res is not None)
    degenerate = tuple(r for r, res in zip(indices, results) if res is None)
    if len(degenerate) > MAX_DEGENERATE_FRACTION * config.reps:
        raise MonteCarloError(
            f"{len(degenerate)} of {config.reps} replications were degenerate; increase n")
    kept = [results[r] for r in valid]
    analytic = _analytic_variances(config)
    T = config.horizon
    params = {}
    for name, truth in config.truth().items():
        values = np.array([est[name] for est, _ in kept])
        mean, std = _mean_std(values)
        z = standardization = ks = None
        if name in kept[0][1]:
            if analytic is not None and analytic.get(name, math.nan) > 0:
                z = math.sqrt(T) * (values - truth) / math.sqrt(analytic[name])
                standardization = "analytic"
            else:
                se = np.sqrt([v[name] for _, v in kept])
                if np.all(se > 0):
                    z = (values - truth) / se
                    standardization = "empirical"
            if z is not None and z.size >= 50:
                ks = ks_statistic(z)
        params[name] = ParameterSummary(name, truth, mean - truth, std, values, z,
                                        standardization, ks)
    return MonteCarloSummary(config, valid, degenerate, params)


def ks_statistic(z) -> float:
    return float(stats.kstest(np.asarray(z, dtype=float), "norm").statistic)


@dataclass(frozen=True)
class NormalityDiagnostics:
    name: str
    ks: float
    theoretical: np.ndarray
    empirical: np.ndarray
    standardization: str

    def qq_rows(self):
        return list(zip(self.theoretical.tolist(), self.empirical.tolist()))


def normality_diagnostics(summary: MonteCarloSummary, name: str) -> NormalityDiagnostics:
    """KS distance of the standardised estimates to N(0, 1) plus QQ pairs
    ``(Phi^{-1}((r - 0.5)/N), z_(r))``."""
    par = summary.params[name]
    if par.z is None:
        raise DegenerateRegimeError(f"{name} has no standardised estimates")
    z = np.sort(par.z)
    N = z.size
    if N < 50:
        raise MonteCarloError(f"normality diagnostics need N >= 50, got {N}")
    theoretical = ndtri((np.arange(1, N + 1) - 0.5) / N)
    return NormalityDiagnostics(name, ks_statistic(z), theoretical, z, par.standardization)
