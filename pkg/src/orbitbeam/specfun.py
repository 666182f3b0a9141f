"""Special functions and Gaussian quadrature rules.

Everything here is scalar/vector numpy code with no dependency on scipy, so
the analytic engine can be checked against scipy/mpmath as independent
oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ArgumentError, NumericFailure

_SERIES_RTOL = 1e-15
_SERIES_MAX_TERMS = 1000


class QuadratureKind(Enum):
    GAUSS_LEGENDRE = "gauss-legendre"
    GAUSS_LAGUERRE = "gauss-laguerre"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights; ``sum(w * f(x))`` approximates the integral."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: QuadratureKind

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Contract the last axis of ``values`` against the weights."""
        return np.asarray(values) @ self.weights

    def __len__(self) -> int:
        return len(self.nodes)


def kummer_1f1(a: float, b: float, x: float) -> float:
    """Confluent hypergeometric function 1F1(a; b; x) by its ascending series.

    Terms follow ``t[k+1] = t[k] (a+k) x / ((b+k)(k+1))`` and are accumulated
    with Neumaier compensation. Intended for x >= 0 and moderate a (the fading
    models use a = m <= ~20, b = 1).
    """
    if b <= 0 and float(b).is_integer():
        raise ArgumentError(f"b must not be a non-positive integer, got {b}")
    if x < 0:
        raise ArgumentError(f"x must be >= 0, got {x}")
    total = 1.0
    comp = 0.0
    term = 1.0
    for k in range(_SERIES_MAX_TERMS):
        term *= (a + k) * x / ((b + k) * (k + 1))
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if abs(term) < _SERIES_RTOL * abs(total + comp):
            return total + comp
    raise NumericFailure(
        f"1F1({a}, {b}, {x}) did not converge in {_SERIES_MAX_TERMS} terms",
        partial=total + comp,
    )


def _bessel_series(order: int, x: float) -> float:
    half = 0.5 * x
    term = half**order / math.factorial(order)
    total = term
    q = -half * half
    for k in range(1, 200):
        term *= q / (k * (k + order))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300):
            break
    return total


def _bessel_miller(order: int, x: float) -> float:
    # Backward recurrence from well above max(order, x), normalised with
    # J0 + 2 * sum(J_2k) = 1.
    start = 2 * ((int(x) + 40 + int(math.sqrt(40.0 * (x + 40.0)))) // 2)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    wanted = 0.0
    for k in range(start, 0, -1):
        j_prev = 2.0 * k / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            wanted *= 1e-250
        if k - 1 == order:
            wanted = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur  # J0
    return wanted / norm


def bessel_j(order: int, x: float) -> float:
    """First-kind Bessel function J_1 or J_3 for x >= 0."""
    if order not in (1, 3):
        raise ArgumentError(f"only orders 1 and 3 are supported, got {order}")
    if x < 0:
        raise ArgumentError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < 12.0:
        return _bessel_series(order, x)
    return _bessel_miller(order, x)


def gauss_laguerre(n: int) -> QuadratureRule:
    """Rule for ``int_0^inf f(t) exp(-t) dt`` with n nodes (1 <= n <= 128)."""
    if not 1 <= n <= 128:
        raise ArgumentError(f"Gauss-Laguerre order must be in [1, 128], got {n}")
    nodes = np.empty(n)
    weights = np.empty(n)
    z = 0.0
    for i in range(n):
        # asymptotic starting guesses (Stroud & Secrest)
        if i == 0:
            z = 3.0 / (1.0 + 2.4 * n)
        elif i == 1:
            z += 15.0 / (1.0 + 2.5 * n)
        else:
            ai = i - 1
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
        for _ in range(200):
            p1, p2 = 1.0, 0.0
            for j in range(n):
                p3 = p2
                p2 = p1
                p1 = ((2 * j + 1 - z) * p2 - j * p3) / (j + 1)
            dp = n * (p1 - p2) / z
            dz = p1 / dp
            z -= dz
            if abs(dz) <= 1e-13 * max(1.0, z):
                break
        else:
            raise NumericFailure(f"Laguerre root {i} of order {n} did not converge")
        nodes[i] = z
        # w = z / ((n+1)^2 L_{n+1}(z)^2), evaluated in log space
        p1, p2 = 1.0, 0.0
        for j in range(n + 1):
            p3 = p2
            p2 = p1
            p1 = ((2 * j + 1 - z) * p2 - j * p3) / (j + 1)
        weights[i] = math.exp(math.log(z) - 2.0 * math.log((n + 1) * abs(p1)))
    return QuadratureRule(nodes, weights, QuadratureKind.GAUSS_LAGUERRE)


def _legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p1 = np.ones_like(x)
        p2 = np.zeros_like(x)
        for j in range(1, n + 1):
            p3 = p2
            p2 = p1
            p1 = ((2 * j - 1) * x * p2 - (j - 1) * p3) / j
        dp = n * (x * p1 - p2) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p1 = np.ones_like(x)
    p2 = np.zeros_like(x)
    for j in range(1, n + 1):
        p3 = p2
        p2 = p1
        p1 = ((2 * j - 1) * x * p2 - (j - 1) * p3) / j
    dp = n * (x * p1 - p2) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


_LEGENDRE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    """n-point Gauss-Legendre rule mapped affinely onto [a, b]."""
    if not 1 <= n <= 256:
        raise ArgumentError(f"Gauss-Legendre order must be in [1, 256], got {n}")
    if not a < b:
        raise ArgumentError(f"need a < b, got [{a}, {b}]")
    if n not in _LEGENDRE_CACHE:
        _LEGENDRE_CACHE[n] = _legendre_unit(n)
    x, w = _LEGENDRE_CACHE[n]
    half = 0.5 * (b - a)
    return QuadratureRule(
        half * x + 0.5 * (a + b), half * w, QuadratureKind.GAUSS_LEGENDRE
    )


def legendre_panels(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights over consecutive breakpoints."""
    x0, w0 = gauss_legendre(n).nodes, gauss_legendre(n).weights
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = half * x0 + 0.5 * (hi + lo)
    weights = half * w0
    return nodes.ravel(), weights.ravel()
