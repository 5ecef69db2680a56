"""One-parameter Mittag-Leffler function on the real axis.

Used as an analytic oracle: ``x(t) = E_alpha(-lam t^alpha)`` solves the
scalar Caputo problem ``D^alpha x = -lam x, x(0) = 1``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .exceptions import DomainError, RangeError

__all__ = ["mittag_leffler"]

_SERIES_RADIUS = 10.0
_MAX_TERMS = 2000
# Largest term magnitude the double-precision alternating series tolerates
# before cancellation eats the 1e-10 relative target.
_CANCELLATION_LIMIT = 1e2


def _series(alpha: float, z: float) -> float:
    total = 0.0
    comp = 0.0
    for k in range(_MAX_TERMS):
        log_mag = k * math.log(abs(z)) - special.gammaln(alpha * k + 1) if z != 0 else (
            0.0 if k == 0 else -math.inf)
        if log_mag > 709:
            raise RangeError(f"E_{alpha}({z}) overflows a double")
        term = math.copysign(math.exp(log_mag), z) if k % 2 else math.exp(log_mag)
        if z > 0:
            term = abs(term)
        # Kahan summation keeps the alternating tail honest.
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if k > 2 and abs(term) < 1e-17 * max(abs(total), 1e-300) and k > abs(z) ** (1 / alpha):
            break
    return total


def _max_term_log(alpha: float, x: float) -> float:
    # log of the largest |x|^k / Gamma(alpha k + 1).
    ks = np.arange(0, int(2 * x ** (1 / alpha)) + 5)
    return float(np.max(ks * math.log(x) - special.gammaln(alpha * ks + 1)))


def _integral(alpha: float, x: float) -> float:
    # Complete monotonicity of E_a(-x) for 0 < a < 1, after substituting t = r^a:
    # E_a(-x) = sin(a pi) / (a pi) * int_0^inf exp(-x^(1/a) t^(1/a)) / (t^2 + 2 t cos(a pi) + 1) dt.
    # The substitution removes the r^(a-1) endpoint singularity; the split at
    # t = 1 isolates the near-pole peak that sharpens as a -> 1.
    s = x ** (1.0 / alpha)
    inv = 1.0 / alpha
    cos_ap = math.cos(alpha * math.pi)

    def kernel(t):
        return math.exp(-s * t**inv) / (t * t + 2.0 * t * cos_ap + 1.0)

    head, _ = integrate.quad(kernel, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=500)
    tail, _ = integrate.quad(kernel, 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=500)
    return math.sin(alpha * math.pi) / (alpha * math.pi) * (head + tail)


def _asymptotic(alpha: float, z: float) -> float | None:
    # E_a(z) ~ -sum_{k>=1} z^-k / Gamma(1 - a k); optimal truncation.
    total, prev = 0.0, math.inf
    for k in range(1, 60):
        arg = 1 - alpha * k
        if arg <= 0 and float(arg).is_integer():
            continue
        term = -(z ** -k) * special.rgamma(arg)
        if abs(term) > prev:
            break
        total += term
        prev = abs(term) if term != 0 else prev
        if abs(term) < 1e-16 * abs(total):
            return total
    return total if prev < 1e-11 * abs(total) else None


def mittag_leffler(alpha: float, z: float) -> float:
    """``E_alpha(z) = sum_k z^k / Gamma(alpha k + 1)`` for real ``z``, ``0 < alpha <= 1``."""
    alpha = float(alpha)
    z = float(z)
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not math.isfinite(z):
        raise DomainError(f"argument must be finite, got {z}")
    if alpha == 1.0:
        try:
            return math.exp(z)
        except OverflowError:
            raise RangeError(f"exp({z}) overflows a double") from None
    if z == 0.0:
        return 1.0
    if z > 0:
        return _series(alpha, z)
    x = -z
    if x > _SERIES_RADIUS:
        value = _asymptotic(alpha, z)
        if value is not None:
            return value
        return _integral(alpha, x)
    if _max_term_log(alpha, x) < math.log(_CANCELLATION_LIMIT):
        return _series(alpha, z)
    return _integral(alpha, x)
