"""Internet hop-count model built from the Taylor series of 1/Gamma."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import zeta

EULER_GAMMA = 0.57721566490153286061


def reciprocal_gamma_coeffs(count: int) -> list[float]:
    """Coefficients ``c_1..c_count`` of ``1/Gamma(z) = sum_k c_k z**k``.

    Uses ``1/Gamma(z) = z * exp(gamma*z - sum_{k>=2} (-1)**k zeta(k) z**k / k)``
    and the power-series exponential recurrence.
    """
    if not 1 <= count <= 30:
        raise ValueError("count must be in [1, 30]")
    n = count - 1
    a = [0.0] * (n + 1)
    if n >= 1:
        a[1] = EULER_GAMMA
    for k in range(2, n + 1):
        a[k] = -((-1) ** k) * float(zeta(k)) / k
    b = [1.0] + [0.0] * n
    for j in range(1, n + 1):
        b[j] = sum(k * a[k] * b[j - k] for k in range(1, j + 1)) / j
    return b  # b[j] multiplies z**(j+1), so b[j] == c_{j+1}


def hop_count_distribution(N: float, k_max: int = 40) -> np.ndarray:
    """``P[k hops]`` for ``k = 0..k_max`` in a network of ``N`` nodes.

    The truncated series is clamped at zero and renormalised, which absorbs
    the model's ``1 + o(1)`` factor.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    c = reciprocal_gamma_coeffs(min(30, k_max + 1))
    c += [0.0] * (k_max + 1 - len(c))
    L = math.log(N)
    probs = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        s = sum(c[m] * L ** (k - m) / math.factorial(k - m) for m in range(k + 1))
        probs[k] = max(0.0, s / N)
    return probs / probs.sum()


def median(probs: np.ndarray) -> int:
    """Smallest ``k`` with ``P[X <= k] >= 1/2``."""
    return int(np.searchsorted(np.cumsum(probs), 0.5 - 1e-12))


def mean(probs: np.ndarray) -> float:
    return float(np.dot(np.arange(len(probs)), probs))
