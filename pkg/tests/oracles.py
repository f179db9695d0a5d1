"""Brute-force reference computations shared by the tests."""

import math

import numpy as np

from thresholdou.model import ThresholdOUModel, is_ergodic


def _romberg_trapezoid(y, x):
    # trapezoid at steps h and 2h on the same grid, one Richardson step
    fine = np.trapezoid(y, x)
    coarse = np.trapezoid(y[::2], x[::2])
    return (4.0 * fine - coarse) / 3.0


def trapezoid_moments(model: ThresholdOUModel, step=1e-4, extent=80.0):
    """Trapezoid-rule ``k_j`` and regime moments ``(P, K, R)`` of the
    stationary density, integrating each regime on its own grid.

    Plain trapezoid at ``step`` is only accurate to about ``step**2`` times
    the jump of the density slope at a threshold, so the rule is combined
    with its half-resolution version (one Romberg step).
    """
    s2 = model.sigma[0] ** 2
    th = model.thresholds
    c = [0.0]
    for j, t in enumerate(th):
        f_left = (-model.alpha[j] * t * t + 2 * model.beta[j] * t) / s2
        f_right = (-model.alpha[j + 1] * t * t + 2 * model.beta[j + 1] * t) / s2
        c.append(c[-1] + f_left - f_right)
    edges = [min(-extent, th[0] - extent) if th else -extent] + list(th)
    edges.append(max(extent, th[-1] + extent) if th else extent)
    pieces = []
    for j in range(model.m):
        a, b = edges[j], edges[j + 1]
        num = 2 * max(1, int(math.ceil((b - a) / (2 * step)))) + 1
        x = np.linspace(a, b, num)
        pieces.append((x, (-model.alpha[j] * x * x + 2 * model.beta[j] * x) / s2 + c[j]))
    shift = max(f.max() for _, f in pieces)
    raw = []
    for x, f in pieces:
        g = np.exp(f - shift)
        raw.append([_romberg_trapezoid(g * x**p, x) for p in range(3)])
    total = sum(r[0] for r in raw)
    k = [math.exp(cj - shift) / total for cj in c]
    moments = [tuple(v / total for v in r) for r in raw]
    return k, moments


def zeroed_second_moments(model: ThresholdOUModel, **kw):
    zeroed = ThresholdOUModel(model.thresholds, model.alpha, [0.0] * model.m, model.sigma)
    if not is_ergodic(zeroed):
        return [math.nan] * model.m
    return [r for _, _, r in trapezoid_moments(zeroed, **kw)[1]]


def random_ergodic_model(rng) -> ThresholdOUModel:
    """Common-sigma ergodic model with 1 to 4 regimes; outer regimes are
    sometimes drift-only (alpha = 0) with an inward-pointing intercept."""
    m = int(rng.integers(1, 5))
    while True:
        th = np.sort(rng.uniform(-2, 2, m - 1))
        if m < 3 or np.min(np.diff(th)) > 0.2:
            break
    alpha = rng.uniform(-1.0, 3.0, m)
    beta = rng.uniform(-1.0, 1.0, m)
    for j, side in ((0, -1), (m - 1, 1)):
        if m > 1 and rng.random() < 0.2:
            alpha[j] = 0.0
            beta[j] = -side * rng.uniform(0.5, 1.5)
        else:
            alpha[j] = rng.uniform(0.3, 3.0)
    if m == 1:
        alpha[0] = rng.uniform(0.3, 3.0)
    return ThresholdOUModel(tuple(th), tuple(alpha), tuple(beta), float(rng.uniform(0.5, 1.5)))


def regression_oracle(x, h):
    """Least squares of the increments on ``(-x h, h)`` via lstsq."""
    x = np.asarray(x, dtype=float)
    design = np.column_stack([-x[:-1] * h, np.full(x.size - 1, h)])
    coef, *_ = np.linalg.lstsq(design, np.diff(x), rcond=None)
    return coef  # (alpha, beta)
