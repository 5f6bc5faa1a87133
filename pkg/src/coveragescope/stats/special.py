"""Regularized incomplete beta and the t / F tail probabilities built on it."""
from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_tail(x: float) -> float:
    """lgamma(x) minus its Stirling leading terms, for x >= 10."""
    r = 1.0 / (x * x)
    return (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / x


def log_beta(a: float, b: float) -> float:
    """log B(a, b), arranged so the large lgamma terms never cancel against each other."""
    small, big = min(a, b), max(a, b)
    if big < 10.0:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    total = small + big
    tail = _stirling_tail(big) - _stirling_tail(total)
    if small < 10.0:
        return (math.lgamma(small) - (big - 0.5) * math.log1p(small / big)
                - small * math.log(total) + small + tail)
    return (_HALF_LOG_2PI + (small - 0.5) * math.log(small / total) + (big - 0.5) * math.log(big / total)
            - 0.5 * math.log(total) + _stirling_tail(small) + tail)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_reg(a: float, b: float, x: float, xc: float | None = None) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1.

    ``xc`` may carry 1 - x when the caller knows it more accurately than the subtraction would.
    """
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if xc is None:
        xc = 1.0 - x
    if x == 0.0 or xc == 0.0:
        return 0.0 if x == 0.0 else 1.0
    # take each log from whichever of x, 1 - x is the small one
    log_x = math.log(x) if x < 0.5 else math.log1p(-xc)
    log_xc = math.log(xc) if xc < 0.5 else math.log1p(-x)
    log_front = a * log_x + b * log_xc - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, xc) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t), t * t / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_two_sided_p(t, df)
    return 1.0 - tail if t >= 0 else tail


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail P(F >= f) of the F(d1, d2) distribution."""
    if math.isnan(f):
        return math.nan
    if math.isinf(f):
        return 0.0
    if f <= 0:
        return 1.0
    return betainc_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f), d1 * f / (d2 + d1 * f))
