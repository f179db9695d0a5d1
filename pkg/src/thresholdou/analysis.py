"""End-to-end analysis of a rate series: detection, estimation, density.

Every stage failure is re-raised as a :class:`PipelineError` tagged with
the stage name. The report carries a provenance block (input hash and
all options) from which :func:`rerun` reproduces it.
"""

from __future__ import annotations

import math
from pathlib import Path
from dataclasses import dataclass

import numpy as np

from .errors import DataError, PipelineError, ThresholdOUError
from .estimators import (EstimateReport, accumulate_regime_sums, drift_from_sums,
                         plugin_inference, residual_sums)
from .ingest import DEFAULT_DAILY_MESH, file_sha256, ingest_csv
from .model import ThresholdOUModel, is_ergodic
from .stationary import asymptotic_covariance, invariant_density, regime_moments
from .thresholds import DetectionResult, detect_thresholds, select_num_regimes

try:
    from importlib.metadata import version as _pkg_version
    TOOL_VERSION = _pkg_version("thresholdou")
except Exception:  # not installed, e.g. running from a source checkout
    TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class AnalysisReport:
    detection: DetectionResult
    estimate: EstimateReport
    density: dict
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "detection": self.detection.to_dict(),
            "estimate": self.estimate.to_dict(),
            "density": self.density,
            "table": table_rows(self.estimate),
            "provenance": self.provenance,
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (ThresholdOUError, OSError) as exc:
        raise PipelineError(name, exc) from exc


def common_sigma_density(path, estimate: EstimateReport) -> dict:
    """Refit with one pooled MQVE sigma and summarise the invariant density.

    The pooled value is ``sqrt(sum of residual squares / total time)``
    over all regimes.
    """
    thresholds = list(estimate.thresholds)
    sums = accumulate_regime_sums(path, thresholds)
    drift = drift_from_sums(sums, path.h, estimate.zero_intercept)
    if drift.degenerate.any():
        raise DataError("common-sigma refit needs every regime to be non-degenerate")
    rss = residual_sums(path, thresholds, drift)
    sigma = math.sqrt(float(rss.sum()) / sum(s.L for s in sums))
    beta = drift.beta if drift.beta is not None else np.zeros(len(sums))
    model = ThresholdOUModel(tuple(thresholds), tuple(drift.alpha.tolist()),
                             tuple(np.asarray(beta).tolist()), sigma)
    out = {"model": model.to_dict(), "ergodic": is_ergodic(model), "regimes": []}
    if not out["ergodic"]:
        return out
    density = invariant_density(model)
    out["k"] = list(density.k)
    for i in range(1, model.m + 1):
        mom = regime_moments(density, i)
        entry = {"regime": i, "P": mom.P, "K": mom.K, "R": mom.R, "M": mom.M}
        try:
            cov = asymptotic_covariance(density, i)
            entry["covariance"] = cov.matrix.tolist()
            entry["zero_intercept_variance"] = cov.zero_intercept_variance
        except ThresholdOUError:
            entry["covariance"] = None
        out["regimes"].append(entry)
    return out


def analyze_rates(file, h: float = DEFAULT_DAILY_MESH, regimes: int = None,
                  max_regimes: int = 3, min_frac: float = 0.02, level: float = 0.95,
                  density: bool = False, column: str = None) -> AnalysisReport:
    """Detect regimes, estimate every regime and optionally summarise the
    common-sigma invariant density.

    With ``regimes`` given the count is fixed, otherwise it is chosen by
    BIC over ``1..max_regimes``.
    """
    options = {"h": h, "regimes": regimes, "max_regimes": max_regimes,
               "min_frac": min_frac, "level": level, "density": density, "column": column}
    digest = _stage("ingest", file_sha256, file)
    path = _stage("ingest", ingest_csv, file, h=h, column=column)
    if regimes is not None:
        detection = _stage("detect", detect_thresholds, path, regimes, min_frac=min_frac)
    else:
        detection = _stage("detect", select_num_regimes, path, max_regimes, min_frac=min_frac)
    estimate = _stage("estimate", plugin_inference, path, detection.thresholds, level)
    summary = _stage("density", common_sigma_density, path, estimate) if density else None
    provenance = {
        "input": str(Path(file).resolve()),
        "input_sha256": digest,
        "n": path.n,
        "first_date": path.dates[0] if path.dates else None,
        "last_date": path.dates[-1] if path.dates else None,
        "options": options,
        "seed": None,
        "tool": "thresholdou",
        "tool_version": TOOL_VERSION,
    }
    return AnalysisReport(detection, estimate, summary, provenance)


def rerun(provenance: dict) -> AnalysisReport:
    """Re-execute an analysis from its provenance block.

    Raises ``PipelineError`` (stage ``provenance``) when the input file no
    longer matches the recorded hash.
    """
    file = provenance["input"]
    digest = _stage("ingest", file_sha256, file)
    if digest != provenance["input_sha256"]:
        raise PipelineError("provenance", f"{file} changed since the report was made")
    return analyze_rates(file, **provenance["options"])


def table_rows(estimate: EstimateReport) -> list:
    """Rows ``(parameter, value, CI)``: thresholds, then alpha/beta per
    regime, then the sigmas (point estimates only)."""
    rows = [(f"theta_{i}" if len(estimate.thresholds) > 1 else "theta", th, None)
            for i, th in enumerate(estimate.thresholds, start=1)]
    for r in estimate.regimes:
        for name in ("alpha", "beta"):
            est = getattr(r, name)
            if est is not None:
                rows.append((f"{name}_{r.regime}", est.value, list(est.ci)))
            elif name == "alpha" or not estimate.zero_intercept:
                rows.append((f"{name}_{r.regime}", None, None))
    for r in estimate.regimes:
        rows.append((f"sigma_{r.regime}", None if r.sigma is None else r.sigma.value, None))
    return [list(row) for row in rows]


def format_table(estimate: EstimateReport, digits: int = 3) -> str:
    lines = [f"{'':<10}{'value':>10}  CI"]
    for name, value, ci in table_rows(estimate):
        if value is None:
            lines.append(f"{name:<10}{'n/a':>10}")
            continue
        text = f"{name:<10}{value:>10.{digits}f}"
        if ci is not None:
            text += f"  [{ci[0]:.{digits}f}, {ci[1]:.{digits}f}]"
        lines.append(text)
    return "\n".join(lines)
