"""Invariant density, regime moments and asymptotic covariances.

For a common diffusion ``sigma`` the stationary density is
``pi(x) = k_j exp((-alpha_j x^2 + 2 beta_j x) / sigma^2)`` on regime ``j``,
with the ``k_j`` fixed by continuity at every threshold and unit mass.
Everything here works with ``log k_j`` internally so that large exponents
do not overflow before normalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .errors import DegenerateRegimeError, ModelError, NoInvariantDensityError
from .model import ThresholdOUModel, is_ergodic

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_TAIL_CUTOFF = math.log(1e-16)
_QUAD_EPSABS = 1e-12


def _log_kernel(alpha, beta, sigma, x):
    return (-alpha * x * x + 2.0 * beta * x) / (sigma * sigma)


def _phi(u):
    if math.isinf(u):
        return 0.0
    return math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def _u_phi(u):
    if math.isinf(u):
        return 0.0
    return u * _phi(u)


def _gaussian_segment(alpha, beta, sigma, a, b):
    """Closed-form ``int_a^b x^p exp(f(x)) dx`` for ``p = 0, 1, 2``, alpha > 0.

    Returns ``(log_scale, (I0, I1, I2))`` with the true integrals equal to
    ``exp(log_scale) * Ip``.
    """
    mu = beta / alpha
    s2 = sigma * sigma / (2.0 * alpha)
    s = math.sqrt(s2)
    log_scale = beta * beta / (alpha * sigma * sigma) + math.log(s) + _LOG_SQRT_2PI
    ua = (a - mu) / s
    ub = (b - mu) / s
    if ua > 0:
        mass = ndtr(-ua) - ndtr(-ub)
    else:
        mass = ndtr(ub) - ndtr(ua)
    g1 = _phi(ua) - _phi(ub)
    g2 = mass + _u_phi(ua) - _u_phi(ub)
    i1 = mu * mass + s * g1
    i2 = mu * mu * mass + 2.0 * mu * s * g1 + s2 * g2
    return log_scale, (float(mass), float(i1), float(i2))


def _truncate_tail(alpha, beta, sigma, a, b):
    # Only reached for alpha == 0 on an unbounded side (alpha < 0 there is
    # excluded by the ergodicity check): f is linear and decays away from
    # the finite endpoint.
    if alpha != 0 or beta == 0:
        raise NoInvariantDensityError("unbounded regime with non-decaying density")
    span = _TAIL_CUTOFF * sigma * sigma / (2.0 * abs(beta))
    if math.isinf(a):
        a = b + span
    if math.isinf(b):
        b = a - span
    return a, b


def _quadrature_segment(alpha, beta, sigma, a, b):
    if math.isinf(a) or math.isinf(b):
        a, b = _truncate_tail(alpha, beta, sigma, a, b)
    fa = _log_kernel(alpha, beta, sigma, a)
    fb = _log_kernel(alpha, beta, sigma, b)
    fmax = max(fa, fb)
    if alpha > 0:
        vertex = beta / alpha
        if a < vertex < b:
            fmax = _log_kernel(alpha, beta, sigma, vertex)
    out = []
    for p in range(3):
        val, _ = integrate.quad(
            lambda x: x**p * math.exp(_log_kernel(alpha, beta, sigma, x) - fmax),
            a,
            b,
            epsabs=_QUAD_EPSABS,
            epsrel=1e-12,
            limit=200,
        )
        out.append(val)
    return fmax, tuple(out)


def segment_integrals(alpha, beta, sigma, a, b):
    if alpha > 0:
        return _gaussian_segment(alpha, beta, sigma, a, b)
    return _quadrature_segment(alpha, beta, sigma, a, b)


@dataclass(frozen=True)
class RegimeMoments:
    """Stationary mass ``P``, first moment ``K``, second moment ``R`` of one
    regime and ``M``, the second moment of the same regime when every
    intercept is set to zero (``nan`` if that model has no invariant law)."""

    P: float
    K: float
    R: float
    M: float


@dataclass(frozen=True)
class AsymptoticCovariance:
    """Limit covariance of ``sqrt(nh) (alpha_hat - alpha, beta_hat - beta)``."""

    matrix: np.ndarray
    zero_intercept_variance: float


@dataclass(frozen=True)
class PiecewiseDensity:
    model: ThresholdOUModel
    k: tuple
    log_k: tuple
    moments: tuple

    @property
    def sigma(self) -> float:
        return self.model.sigma[0]

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        th = np.asarray(self.model.thresholds)
        j = np.searchsorted(th, x, side="right")
        a = np.asarray(self.model.alpha)[j]
        b = np.asarray(self.model.beta)[j]
        logk = np.asarray(self.log_k)[j]
        return np.exp(logk + _log_kernel(a, b, self.sigma, x))

    def one_sided(self, j: int, x: float) -> float:
        """Density formula of the 1-based regime ``j`` evaluated at ``x``."""
        m = self.model
        return math.exp(self.log_k[j - 1] + _log_kernel(m.alpha[j - 1], m.beta[j - 1], self.sigma, x))

    @cached_property
    def zero_intercept_second_moments(self) -> tuple:
        m = self.model
        zeroed = ThresholdOUModel(m.thresholds, m.alpha, [0.0] * m.m, m.sigma)
        if not is_ergodic(zeroed):
            return (math.nan,) * m.m
        return tuple(r for _, _, r in _solve(zeroed)[2])

    def mean(self) -> float:
        return sum(mom.K for mom in self.moments)


def _solve(model: ThresholdOUModel):
    sigma = model.sigma[0]
    m = model.m
    log_k = [0.0]
    for j in range(m - 1):
        th = model.thresholds[j]
        left = _log_kernel(model.alpha[j], model.beta[j], sigma, th)
        right = _log_kernel(model.alpha[j + 1], model.beta[j + 1], sigma, th)
        log_k.append(log_k[j] + left - right)

    log_w = []
    raw = []
    for j in range(m):
        a, b = model.bounds(j + 1)
        log_scale, ints = segment_integrals(model.alpha[j], model.beta[j], sigma, a, b)
        log_w.append(log_k[j] + log_scale)
        raw.append(ints)
    shift = max(lw for lw, ints in zip(log_w, raw) if ints[0] > 0)
    total = sum(math.exp(lw - shift) * ints[0] for lw, ints in zip(log_w, raw))
    log_norm = shift + math.log(total)

    log_k = [lk - log_norm for lk in log_k]
    moments = []
    for lw, (i0, i1, i2) in zip(log_w, raw):
        w = math.exp(lw - log_norm)
        moments.append((w * i0, w * i1, w * i2))
    return log_k, tuple(math.exp(lk) for lk in log_k), moments


def invariant_density(model: ThresholdOUModel) -> PiecewiseDensity:
    """Stationary density of an ergodic common-diffusion model."""
    model.check_shape()
    if not is_ergodic(model):
        raise NoInvariantDensityError("no invariant density: tail condition fails")
    if not model.is_common_diffusion:
        raise ModelError("invariant density requires a common diffusion coefficient")
    if model.sigma[0] <= 0:
        raise ModelError("sigma must be strictly positive")
    log_k, k, raw = _solve(model)
    moments = tuple(RegimeMoments(p, kk, r, math.nan) for p, kk, r in raw)
    return PiecewiseDensity(model, k, tuple(log_k), moments)


def _checked_index(density: PiecewiseDensity, i: int) -> int:
    if not 1 <= i <= density.model.m:
        raise IndexError(f"regime index {i} outside 1..{density.model.m}")
    return i - 1


def regime_moments(density: PiecewiseDensity, i: int) -> RegimeMoments:
    j = _checked_index(density, i)
    mom = density.moments[j]
    return RegimeMoments(mom.P, mom.K, mom.R, density.zero_intercept_second_moments[j])


def asymptotic_covariance(density: PiecewiseDensity, i: int) -> AsymptoticCovariance:
    mom = regime_moments(density, i)
    det = mom.P * mom.R - mom.K * mom.K
    if det <= 1e-12 * (1.0 + mom.R):
        raise DegenerateRegimeError(f"regime {i}: P R - K^2 = {det:.3e} is degenerate")
    s2 = density.sigma**2
    matrix = s2 / det * np.array([[mom.P, mom.K], [mom.K, mom.R]])
    return AsymptoticCovariance(matrix, s2 / mom.M if mom.M > 0 else math.nan)
