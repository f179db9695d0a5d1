"""Threshold detection by least-squares contrast minimisation.

Within a regime the fitted drift is the regression of increments on
``(1, x_k)``, so the contrast of a partition is the sum of per-regime
regression SSEs. The contrast only changes when a threshold crosses an
observation, which makes the sorted observations a lossless candidate
grid. Candidate partitions are scored in O(1) each from prefix sums over
the observations sorted by level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DetectionError
from .estimators import lse_drift, residual_sums
from .model import SamplePath, regime_index

_DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class DetectionResult:
    m: int
    thresholds: tuple
    contrast: float
    counts: tuple
    scores: dict = field(default_factory=dict)
    contrasts: dict = field(default_factory=dict)
    approximate: bool = False

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "thresholds": list(self.thresholds),
            "contrast": self.contrast,
            "counts": list(self.counts),
            "bic": {str(k): v for k, v in self.scores.items()},
            "contrasts": {str(k): v for k, v in self.contrasts.items()},
            "approximate": self.approximate,
        }


def min_regime_count(n: int, min_frac: float = 0.02, floor: int = 10) -> int:
    return max(floor, math.ceil(min_frac * n))


def contrast(path: SamplePath, thresholds) -> float:
    """Residual sum of squares of the regime-wise drift fit (direct route)."""
    thresholds = list(thresholds)
    drift = lse_drift(path, thresholds)
    if drift.degenerate.any():
        return math.inf
    return float(residual_sums(path, thresholds, drift).sum())


class _PrefixSSE:
    """Regression SSE of any contiguous block of level-sorted observations."""

    def __init__(self, path: SamplePath):
        x = path.values[:-1]
        y = np.diff(path.values)
        order = np.argsort(x, kind="stable")
        self.sorted_x = x[order]
        xc = self.sorted_x - x.mean()
        ys = y[order]
        cols = np.vstack([np.ones_like(xc), xc, xc * xc, ys, xc * ys, ys * ys])
        self.cum = np.concatenate([np.zeros((6, 1)), np.cumsum(cols, axis=1)], axis=1)
        self.n = x.size

    def sse(self, lo, hi):
        """SSE of the block ``[lo, hi)``; ``inf`` where the fit is degenerate."""
        return _block_sse(*(self.cum[:, hi] - self.cum[:, lo]))


def _block_sse(c, sx, sxx, sy, sxy, syy):
    det = c * sxx - sx * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        fit = (sy * sy * sxx - 2.0 * sy * sx * sxy + c * sxy * sxy) / det
        out = np.maximum(syy - fit, 0.0)
    bad = ~(det > _DEGENERACY_TOL * c * sxx)
    return np.where(bad, np.inf, out)


def candidate_grid(path: SamplePath, quantiles=(0.05, 0.95)):
    """Distinct observed levels between the given sample quantiles."""
    x = path.values[:-1]
    lo, hi = np.quantile(x, quantiles)
    levels = np.unique(x)
    return levels[(levels >= lo) & (levels <= hi)]


def _positions(pre: _PrefixSSE, levels):
    # number of observations strictly below each level => lower regime size
    return np.searchsorted(pre.sorted_x, levels, side="left")


def _best_split(pre, pos, levels, lo, hi, min_count):
    """Best single split of block ``[lo, hi)``; returns (sse, level, pos)."""
    ok = (pos - lo >= min_count) & (hi - pos >= min_count)
    if not ok.any():
        return math.inf, None, None
    p = pos[ok]
    total = pre.sse(np.full_like(p, lo), p) + pre.sse(p, np.full_like(p, hi))
    k = int(np.argmin(total))
    return float(total[k]), float(levels[ok][k]), int(p[k])


def _exhaustive(pre, pos, levels, m, min_count):
    n = pre.n
    if m == 2:
        sse, level, _ = _best_split(pre, pos, levels, 0, n, min_count)
        return sse, () if level is None else (level,)
    # m == 3: outer loop over the first threshold, vectorised over the second
    left = pre.sse(np.zeros_like(pos), pos)
    right = pre.sse(pos, np.full_like(pos, n))
    at = pre.cum[:, pos]
    best, best_tuple = math.inf, ()
    for i in np.flatnonzero((pos >= min_count) & np.isfinite(left)):
        pa = pos[i]
        pb = pos[i + 1:]
        ok = (pb - pa >= min_count) & (n - pb >= min_count)
        if not ok.any():
            continue
        middle = _block_sse(*(at[:, i + 1:] - at[:, i:i + 1]))
        total = np.where(ok, left[i] + middle + right[i + 1:], np.inf)
        k = int(np.argmin(total))
        if total[k] < best:
            best = float(total[k])
            best_tuple = (float(levels[i]), float(levels[i + 1 + k]))
    return best, best_tuple


def _greedy(pre, pos, levels, m, min_count):
    n = pre.n
    cuts = []  # sorted list of (pos, level)
    for _ in range(m - 1):
        bounds = [0] + [p for p, _ in cuts] + [n]
        best_gain, best_cut = 0.0, None
        for lo, hi in zip(bounds, bounds[1:]):
            inside = (pos > lo) & (pos < hi)
            if not inside.any():
                continue
            base = float(pre.sse(np.array([lo]), np.array([hi]))[0])
            sse, level, p = _best_split(pre, pos[inside], levels[inside], lo, hi, min_count)
            gain = base - sse if math.isfinite(base) else (math.inf if math.isfinite(sse) else 0.0)
            if level is not None and (best_cut is None or gain > best_gain):
                best_gain, best_cut = gain, (p, level)
        if best_cut is None:
            return math.inf, ()
        cuts = sorted(cuts + [best_cut])
    # one refinement sweep: move each cut with the others held fixed
    for k in range(len(cuts)):
        lo = cuts[k - 1][0] if k > 0 else 0
        hi = cuts[k + 1][0] if k + 1 < len(cuts) else n
        inside = (pos > lo) & (pos < hi)
        _, level, p = _best_split(pre, pos[inside], levels[inside], lo, hi, min_count)
        if level is not None:
            cuts[k] = (p, level)
    bounds = [0] + [p for p, _ in cuts] + [n]
    total = sum(float(pre.sse(np.array([a]), np.array([b]))[0]) for a, b in zip(bounds, bounds[1:]))
    return total, tuple(level for _, level in cuts)


def detect_thresholds(path: SamplePath, m: int, min_frac: float = 0.02,
                      min_count: int = 10, quantiles=(0.05, 0.95)) -> DetectionResult:
    """Thresholds minimising the drift-regression contrast for ``m`` regimes.

    For ``m <= 3`` the search is exhaustive over the candidate grid, with
    ties going to the lexicographically smallest tuple. For ``m >= 4`` it
    falls back to greedy binary splitting plus one refinement sweep, and
    the result is marked ``approximate``.
    """
    if m < 1:
        raise DetectionError(f"regime count must be at least 1, got {m}")
    n = path.n
    need = min_regime_count(n, min_frac, min_count)
    if m * need > n:
        raise DetectionError(
            f"{m} regimes with at least {need} observations each need n >= {m * need}, got {n}")
    if m == 1:
        value = contrast(path, ())
        if not math.isfinite(value):
            raise DetectionError("single-regime drift regression is degenerate")
        return DetectionResult(1, (), value, (n,))

    pre = _PrefixSSE(path)
    levels = candidate_grid(path, quantiles)
    pos = _positions(pre, levels)
    if m <= 3:
        best, found = _exhaustive(pre, pos, levels, m, need)
    else:
        best, found = _greedy(pre, pos, levels, m, need)
    if not math.isfinite(best) or len(found) != m - 1:
        raise DetectionError(
            f"no admissible {m}-regime partition with at least {need} observations per regime")
    counts = np.bincount(regime_index(path.values[:-1], found), minlength=m)
    return DetectionResult(m, found, contrast(path, found), tuple(int(c) for c in counts),
                           approximate=m >= 4)


def bic(sse: float, n: int, m: int) -> float:
    return n * math.log(sse / n) + (3 * m - 1) * math.log(n)


def select_num_regimes(path: SamplePath, m_max: int, **kwargs) -> DetectionResult:
    """Run detection for ``m = 1..m_max`` and keep the lowest BIC."""
    if m_max < 1:
        raise DetectionError(f"m_max must be at least 1, got {m_max}")
    results = [detect_thresholds(path, m, **kwargs) for m in range(1, m_max + 1)]
    n = path.n
    scores = {r.m: bic(r.contrast, n, r.m) for r in results}
    best = min(results, key=lambda r: (scores[r.m], r.m))
    return DetectionResult(best.m, best.thresholds, best.contrast, best.counts,
                           scores, {r.m: r.contrast for r in results}, best.approximate)
