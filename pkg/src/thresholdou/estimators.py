"""Least-squares drift estimators, (modified) quadratic-variation volatility
estimators and plug-in inference from a discretely observed path.

Every increment ``x_{k+1} - x_k`` is attributed to the regime of its left
endpoint ``x_k``. Within a regime the drift fit is the ordinary regression
of increments on ``(h, -x_k h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .model import SamplePath, regime_index

COLLINEARITY_TOL = 1e-12


@dataclass(frozen=True)
class RegimeSums:
    """Per-regime sums over the increments attributed to that regime.

    ``count`` is the number of increments and ``L = count * h`` the
    occupation time; ``Q``, ``D``, ``J``, ``H`` and ``V`` are the sums of
    ``dx``, ``x^2``, ``x``, ``x dx`` and ``dx^2``.
    """

    count: int
    L: float
    Q: float
    D: float
    J: float
    H: float
    V: float


def _regime_ids(path: SamplePath, thresholds) -> np.ndarray:
    return regime_index(path.values[:-1], thresholds)


def accumulate_regime_sums(path: SamplePath, thresholds) -> list:
    thresholds = list(thresholds)
    m = len(thresholds) + 1
    x = path.values[:-1]
    dx = np.diff(path.values)
    ids = _regime_ids(path, thresholds)

    def total(weights):
        return np.bincount(ids, weights=weights, minlength=m)

    counts = np.bincount(ids, minlength=m)
    Q, D, J, H, V = (total(w) for w in (dx, x * x, x, x * dx, dx * dx))
    return [
        RegimeSums(int(counts[i]), float(counts[i] * path.h), float(Q[i]), float(D[i]),
                   float(J[i]), float(H[i]), float(V[i]))
        for i in range(m)
    ]


@dataclass(frozen=True)
class DriftEstimate:
    """Per-regime drift estimates; degenerate regimes hold ``nan``.

    ``beta`` is ``None`` for the zero-intercept fit.
    """

    alpha: np.ndarray
    beta: np.ndarray = None
    degenerate: np.ndarray = None

    @property
    def zero_intercept(self) -> bool:
        return self.beta is None


def drift_from_sums(sums, h: float, zero_intercept: bool = False) -> DriftEstimate:
    m = len(sums)
    alpha = np.full(m, np.nan)
    beta = None if zero_intercept else np.full(m, np.nan)
    degenerate = np.ones(m, dtype=bool)
    for i, s in enumerate(sums):
        if zero_intercept:
            if s.D > 0:
                alpha[i] = -s.H / (h * s.D)
                degenerate[i] = False
            continue
        c = s.count
        den = c * s.D * h - s.J * s.J * h
        if c < 2 or den <= COLLINEARITY_TOL * c * s.D * h:
            continue
        alpha[i] = (s.Q * s.J - c * s.H) / den
        beta[i] = (s.Q * s.D - s.H * s.J) / den
        degenerate[i] = False
    return DriftEstimate(alpha, beta, degenerate)


def lse_drift_zero_intercept(path: SamplePath, thresholds) -> DriftEstimate:
    """Regime-wise ``alpha_hat = -H / (h D)`` for a model known to have
    no intercepts."""
    return drift_from_sums(accumulate_regime_sums(path, thresholds), path.h, True)


def lse_drift(path: SamplePath, thresholds) -> DriftEstimate:
    """Regime-wise least-squares ``(alpha_hat, beta_hat)``.

    A regime is flagged degenerate when it holds fewer than two increments
    or when ``count D - J^2`` is within a relative ``1e-12`` of zero.
    """
    return drift_from_sums(accumulate_regime_sums(path, thresholds), path.h, False)


def qve(path: SamplePath, thresholds) -> np.ndarray:
    """Quadratic-variation estimate ``sqrt(V / L)`` per regime (``nan`` if
    the regime was never visited)."""
    sums = accumulate_regime_sums(path, thresholds)
    return np.array([math.sqrt(s.V / s.L) if s.L > 0 else math.nan for s in sums])


@dataclass(frozen=True)
class SigmaEstimate:
    sigma: np.ndarray
    fallback: np.ndarray
    """True where drift estimation failed and zero drift was used instead."""


def residual_sums(path: SamplePath, thresholds, drift: DriftEstimate) -> np.ndarray:
    """Sum of squared drift-corrected increments per regime."""
    m = len(thresholds) + 1
    x = path.values[:-1]
    dx = np.diff(path.values)
    ids = _regime_ids(path, thresholds)
    a = np.nan_to_num(drift.alpha, nan=0.0)[ids]
    b = 0.0 if drift.beta is None else np.nan_to_num(drift.beta, nan=0.0)[ids]
    resid = dx - (b - a * x) * path.h
    return np.bincount(ids, weights=resid * resid, minlength=m)


def mqve(path: SamplePath, thresholds, drift: DriftEstimate = None) -> SigmaEstimate:
    """Modified quadratic-variation estimate of each ``sigma_i``.

    Increments are debiased by the fitted drift before squaring. Regimes
    where the drift fit is degenerate use zero drift (plain QVE) and are
    reported through ``fallback``.
    """
    thresholds = list(thresholds)
    if drift is None:
        drift = lse_drift(path, thresholds)
    sums = accumulate_regime_sums(path, thresholds)
    rss = residual_sums(path, thresholds, drift)
    sigma = np.array([math.sqrt(r / s.L) if s.L > 0 else math.nan for r, s in zip(rss, sums)])
    return SigmaEstimate(sigma, np.asarray(drift.degenerate, dtype=bool).copy())


@dataclass(frozen=True)
class ParameterEstimate:
    name: str
    value: float
    se: float = None
    ci: tuple = None

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "se": self.se,
                "ci": None if self.ci is None else list(self.ci)}


@dataclass(frozen=True)
class RegimeReport:
    regime: int
    count: int
    degenerate: bool
    alpha: ParameterEstimate = None
    beta: ParameterEstimate = None
    sigma: ParameterEstimate = None
    sigma_qve: ParameterEstimate = None
    covariance: np.ndarray = None
    flags: tuple = ()

    def to_dict(self) -> dict:
        out = {"regime": self.regime, "count": self.count, "degenerate": self.degenerate,
               "flags": list(self.flags)}
        for name in ("alpha", "beta", "sigma", "sigma_qve"):
            est = getattr(self, name)
            out[name] = None if est is None else est.to_dict()
        out["covariance"] = None if self.covariance is None else self.covariance.tolist()
        return out


@dataclass(frozen=True)
class EstimateReport:
    thresholds: tuple
    h: float
    n: int
    level: float
    zero_intercept: bool
    regimes: tuple = field(default_factory=tuple)

    @property
    def m(self) -> int:
        return len(self.regimes)

    def values(self, name: str) -> np.ndarray:
        out = []
        for r in self.regimes:
            est = getattr(r, name)
            out.append(math.nan if est is None else est.value)
        return np.array(out)

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "h": self.h,
            "n": self.n,
            "level": self.level,
            "zero_intercept": self.zero_intercept,
            "sigma_inference": "point estimate only",
            "regimes": [r.to_dict() for r in self.regimes],
        }

    def table(self) -> str:
        """Human-readable table with one row per parameter."""
        lines = [f"{'param':<10}{'value':>12}  {'CI':<28}"]
        for th_i, th in enumerate(self.thresholds, start=1):
            lines.append(f"{'theta_' + str(th_i):<10}{th:>12.6g}")
        for name in ("alpha", "beta", "sigma", "sigma_qve"):
            for r in self.regimes:
                est = getattr(r, name)
                label = f"{name}_{r.regime}"
                if est is None:
                    if r.degenerate and name in ("alpha", "beta"):
                        lines.append(f"{label:<10}{'degenerate':>12}")
                    continue
                ci = "" if est.ci is None else f"[{est.ci[0]:.6g}, {est.ci[1]:.6g}]"
                lines.append(f"{label:<10}{est.value:>12.6g}  {ci:<28}")
        return "\n".join(lines)


def plugin_inference(path: SamplePath, thresholds, level: float = 0.95,
                     zero_intercept: bool = False) -> EstimateReport:
    """Point estimates with plug-in standard errors and normal CIs.

    Empirical moments ``P = L/T``, ``K = J h/T``, ``R = D h/T`` (``T = n h``)
    and the MQVE ``sigma`` replace their stationary counterparts in the
    asymptotic covariance, which is then scaled by ``1/T``.
    """
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    thresholds = list(thresholds)
    h, n = path.h, path.n
    T = n * h
    z = float(norm.ppf(0.5 * (1.0 + level)))
    sums = accumulate_regime_sums(path, thresholds)
    drift = drift_from_sums(sums, h, zero_intercept)
    sig = mqve(path, thresholds, drift)
    sig_qve = qve(path, thresholds)

    def interval(name, value, var):
        se = math.sqrt(var / T)
        return ParameterEstimate(name, float(value), se, (value - z * se, value + z * se))

    regimes = []
    for i, s in enumerate(sums):
        flags = []
        sigma_est = sigma_q = None
        if s.L > 0:
            sigma_est = ParameterEstimate("sigma", float(sig.sigma[i]))
            sigma_q = ParameterEstimate("sigma_qve", float(sig_qve[i]))
        if drift.degenerate[i]:
            flags.append("degenerate drift fit" if s.count else "empty regime")
            if s.L > 0:
                flags.append("sigma uses zero drift")
            regimes.append(RegimeReport(i + 1, s.count, True, sigma=sigma_est,
                                        sigma_qve=sigma_q, flags=tuple(flags)))
            continue
        s2 = float(sig.sigma[i]) ** 2
        P, K, R = s.L / T, s.J * h / T, s.D * h / T
        if zero_intercept:
            var = s2 / R
            regimes.append(RegimeReport(
                i + 1, s.count, False,
                alpha=interval("alpha", drift.alpha[i], var),
                sigma=sigma_est, sigma_qve=sigma_q,
                covariance=np.array([[var / T]]), flags=tuple(flags)))
            continue
        det = P * R - K * K
        if det <= COLLINEARITY_TOL * P * R:
            regimes.append(RegimeReport(i + 1, s.count, True, sigma=sigma_est, sigma_qve=sigma_q,
                                        flags=("degenerate plug-in covariance",)))
            continue
        cov = s2 / det * np.array([[P, K], [K, R]])
        regimes.append(RegimeReport(
            i + 1, s.count, False,
            alpha=interval("alpha", drift.alpha[i], cov[0, 0]),
            beta=interval("beta", drift.beta[i], cov[1, 1]),
            sigma=sigma_est, sigma_qve=sigma_q,
            covariance=cov / T, flags=tuple(flags)))
    return EstimateReport(tuple(float(t) for t in thresholds), h, n, level, zero_intercept,
                          tuple(regimes))


def riemann_ito_integrals(path: SamplePath, thresholds) -> list:
    """Grid discretisation of the continuous-record functionals per regime.

    Returns dicts with the Riemann sums ``int I dt``, ``int x I dt``,
    ``int x^2 I dt`` and the Ito sums ``int I dX``, ``int x I dX`` and the
    bracket ``[X I]``, accumulated term by term in time order.
    """
    thresholds = list(thresholds)
    m = len(thresholds) + 1
    out = [dict(time=0.0, x_dt=0.0, x2_dt=0.0, dX=0.0, x_dX=0.0, bracket=0.0) for _ in range(m)]
    values = path.values.tolist()
    h = path.h
    for k in range(len(values) - 1):
        x = values[k]
        dx = values[k + 1] - x
        acc = out[int(regime_index(x, thresholds))]
        acc["time"] += h
        acc["x_dt"] += x * h
        acc["x2_dt"] += x * x * h
        acc["dX"] += dx
        acc["x_dX"] += x * dx
        acc["bracket"] += dx * dx
    return out


def continuous_lse_drift(integrals) -> DriftEstimate:
    """Continuous-record LSE evaluated on precomputed integrals."""
    m = len(integrals)
    alpha = np.full(m, np.nan)
    beta = np.full(m, np.nan)
    degenerate = np.ones(m, dtype=bool)
    for i, g in enumerate(integrals):
        den = g["time"] * g["x2_dt"] - g["x_dt"] ** 2
        if den <= COLLINEARITY_TOL * g["time"] * g["x2_dt"]:
            continue
        alpha[i] = (g["dX"] * g["x_dt"] - g["time"] * g["x_dX"]) / den
        beta[i] = (g["dX"] * g["x2_dt"] - g["x_dX"] * g["x_dt"]) / den
        degenerate[i] = False
    return DriftEstimate(alpha, beta, degenerate)
