"""Unit conversions and the incomplete-gamma family used by every closed form.

All engine internals work in SI linear units (watts, meters, points per m^2).
dB/dBm/per-km2 conversion happens once, at scenario parse time, through the
helpers here.

The gamma-family functions follow the usual conventions

    gamma_fn(s)                  = integral_0^inf  x^(s-1) e^(-x) dx
    upper_incomplete_gamma(s, a) = integral_a^inf  x^(s-1) e^(-x) dx
    lower_incomplete_gamma(s, b) = integral_0^b    x^(s-1) e^(-x) dx
    generalized_gamma(s, a, b)   = integral_a^b    x^(s-1) e^(-x) dx

with negative non-integer orders supported for the upper incomplete gamma
(needed by the interference constants when a path-loss exponent sits between
2 and 4). Negative orders are evaluated by walking the recurrence

    Gamma[s, a] = (Gamma[s+1, a] - a^s e^(-a)) / s

down from a positive-order scipy evaluation; raw quadrature is kept out of
the hot path and lives in the test oracles instead.
"""

from __future__ import annotations

import math

from scipy import special

__all__ = [
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "gamma_fn",
    "upper_incomplete_gamma",
    "lower_incomplete_gamma",
    "generalized_gamma",
]


def dbm_to_watts(x_dbm: float) -> float:
    """Convert a power in dBm to watts: 10^((x - 30)/10)."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """Convert a power in watts to dBm. Requires a positive power."""
    if watts <= 0.0:
        raise ValueError(f"power must be positive to express in dBm, got {watts}")
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(x_db: float) -> float:
    """Convert a dB quantity to its linear ratio: 10^(x/10)."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(ratio: float) -> float:
    """Convert a positive linear ratio to dB."""
    if ratio <= 0.0:
        raise ValueError(f"ratio must be positive to express in dB, got {ratio}")
    return 10.0 * math.log10(ratio)


def gamma_fn(s: float) -> float:
    """Euler gamma function for real non-pole orders."""
    if s <= 0.0 and s == math.floor(s):
        raise ValueError(f"gamma function pole at non-positive integer s={s}")
    return float(special.gamma(s))


def upper_incomplete_gamma(s: float, a: float) -> float:
    """Upper incomplete gamma Gamma[s, a], a >= 0.

    Supports negative non-integer orders for a > 0 (and exact non-positive
    integer orders, which reduce to exponential integrals through the same
    recurrence). For a = 0 the integral only converges for s > 0, where it
    equals gamma_fn(s). Orders within about 1e-6 of a pole of the gamma
    function lose accuracy in this representation (and the prefactor
    overflows for subnormal s); the engine's exponents stay well away.
    """
    if a < 0.0:
        raise ValueError(f"lower limit must be nonnegative, got a={a}")
    if a == 0.0:
        if s <= 0.0:
            raise ValueError(f"Gamma[s, 0] diverges for s={s} <= 0")
        return gamma_fn(s)
    if math.isinf(a):
        return 0.0
    if s > 0.0:
        return float(special.gammaincc(s, a) * special.gamma(s))
    # Walk down from the smallest order s + n in (0, 1]. Each step divides by
    # the current (negative) order; for small a the a^t term dominates and for
    # large a both terms underflow together, so the subtraction stays accurate
    # to roughly a/|t| ulp.
    n = int(math.ceil(-s))
    if s + n <= 0.0:
        n += 1
    value = float(special.gammaincc(s + n, a) * special.gamma(s + n))
    exp_a = math.exp(-a)
    for k in range(n - 1, -1, -1):
        t = s + k
        if t == 0.0:
            # Gamma[0, a] is the exponential integral E1(a); using it directly
            # avoids dividing by zero in the recurrence.
            value = float(special.exp1(a))
        else:
            value = (value - a**t * exp_a) / t
    return value


def lower_incomplete_gamma(s: float, b: float) -> float:
    """Lower incomplete gamma gamma[s, b] for s > 0, b >= 0."""
    if s <= 0.0:
        raise ValueError(f"lower incomplete gamma requires s > 0, got s={s}")
    if b < 0.0:
        raise ValueError(f"upper limit must be nonnegative, got b={b}")
    if math.isinf(b):
        return gamma_fn(s)
    return float(special.gammainc(s, b) * special.gamma(s))


def generalized_gamma(s: float, a: float, b: float) -> float:
    """Generalized incomplete gamma Gamma[s, a, b] over [a, b], b may be inf.

    Equals upper_incomplete_gamma(s, a) - upper_incomplete_gamma(s, b)
    wherever both are defined; requires s > 0 when a = 0.
    """
    if a < 0.0:
        raise ValueError(f"lower limit must be nonnegative, got a={a}")
    if b < a:
        raise ValueError(f"interval is inverted: a={a} > b={b}")
    if a == b:
        return 0.0
    if math.isinf(b):
        return upper_incomplete_gamma(s, a)
    if a == 0.0:
        return lower_incomplete_gamma(s, b)
    return upper_incomplete_gamma(s, a) - upper_incomplete_gamma(s, b)
