"""Association probabilities and serving-distance/transmit-power statistics.

The network drops one homogeneous PPP of base stations per tier. A user at
the origin picks its DL server by minimizing D_i * distance^alpha over all
BSs and its UL server by minimizing U_i * distance^alpha, so the two choices
can land in different tiers. Everything here is closed form and requires the
scenario in normalized order (tiers sorted by mu_k = U_k/D_k ascending; see
`scenario.normalize_tier_order`). In that order the UL tier index never
exceeds the DL tier index, which makes the joint-association matrix lower
triangular.

The joint law of (DL tier j, UL tier k, serving distances) reduces, after
polar integration, to integrals of powers of a piecewise-linear normalizer

    S(u) = sum_i lambda_i * max((D_j/D_i)^(2/alpha), (U_k/U_i)^(2/alpha) u)

over u = (r_ul/r_dl)^2 between the weight-ratio breakpoints; each segment
then integrates in elementary closed form. Probabilities use exponent 2,
distance moments of order n use exponent (n+4)/2.

Transmit power follows fractional channel inversion capped at p_max:
Gamma_k = min(rho_k G^eps R^(eps*alpha), p_max) with R the UL serving
distance. Its moments split into a below-cap part and a point mass at the
cap; `tx_power_moment` returns their sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mathkit import gamma_fn, lower_incomplete_gamma
from .scenario import Scenario

__all__ = [
    "EffectiveDensity",
    "effective_densities",
    "per_tier_probability",
    "joint_association_matrix",
    "marginal_distance_cdf",
    "marginal_distance_moment",
    "joint_distance_pdf",
    "joint_distance_moment",
    "tx_power_cdf",
    "tx_power_moment",
    "tx_power_moment_split",
]

_LINKS = ("DL", "UL")


@dataclass(frozen=True)
class EffectiveDensity:
    """Weight-deflated competitor densities seen by one tier's servers."""

    lambda_dl: float
    lambda_ul: float


@lru_cache(maxsize=1024)
def require_normalized(s: Scenario) -> None:
    """Reject scenarios whose tiers are not sorted by mu ascending."""
    mus = s.mu_values()
    if any(a > b for a, b in zip(mus, mus[1:])):
        raise ValueError(
            "tiers must be sorted by U_k/D_k ascending; "
            "apply scenario.normalize_tier_order first"
        )


def _check_link(link: str) -> None:
    if link not in _LINKS:
        raise ValueError(f"link must be one of {_LINKS}, got {link!r}")


def _check_tier(s: Scenario, index: int, name: str) -> None:
    if not 0 <= index < s.num_tiers:
        raise ValueError(f"{name} must lie in [0, {s.num_tiers - 1}], got {index}")


def _link_weight(s: Scenario, link: str, i: int) -> float:
    return s.tiers[i].dl_weight if link == "DL" else s.tiers[i].ul_weight


@lru_cache(maxsize=1024)
def effective_densities(s: Scenario) -> tuple[EffectiveDensity, ...]:
    """Per-tier effective densities sum_i (W_j/W_i)^(2/alpha) lambda_i.

    The DL entry uses the D weights, the UL entry the U weights. The serving
    distance of a tier-j user on link m is Rayleigh with this density.
    Results are memoized per scenario; `Scenario` is frozen and hashable.
    """
    require_normalized(s)
    p = 2.0 / s.channel.alpha
    out = []
    for j in range(s.num_tiers):
        dl = sum(
            (s.tiers[j].dl_weight / t.dl_weight) ** p * t.density for t in s.tiers
        )
        ul = sum(
            (s.tiers[j].ul_weight / t.ul_weight) ** p * t.density for t in s.tiers
        )
        out.append(EffectiveDensity(lambda_dl=dl, lambda_ul=ul))
    return tuple(out)


def per_tier_probability(s: Scenario) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Marginal association probabilities (A^DL, A^UL), each summing to 1."""
    eff = effective_densities(s)
    a_dl = tuple(t.density / e.lambda_dl for t, e in zip(s.tiers, eff))
    a_ul = tuple(t.density / e.lambda_ul for t, e in zip(s.tiers, eff))
    return a_dl, a_ul


def _max_normalizer(s: Scenario, j: int) -> float:
    """sum_i max(D_j/D_i, U_j/U_i)^(2/alpha) lambda_i, the density whose
    Rayleigh law governs the shared serving distance when both links pick
    the same tier-j BS."""
    p = 2.0 / s.channel.alpha
    return sum(
        max(s.tiers[j].dl_weight / t.dl_weight, s.tiers[j].ul_weight / t.ul_weight) ** p
        * t.density
        for t in s.tiers
    )


def _wedge_segments(
    s: Scenario, j: int, k: int
) -> list[tuple[float, float, float, float]]:
    """Linear pieces of the normalizer S(u) between association breakpoints.

    Returns (u_lo, u_hi, intercept, slope) per piece, covering exactly
    u in [(D_j/D_k)^(2/alpha), (U_j/U_k)^(2/alpha)] for UL tier k < DL
    tier j. Tier i switches from its DL-driven exclusion disc to its
    UL-driven one at u_i = (mu_i D_j/U_k)^(2/alpha), so in mu-sorted order
    the pieces run between consecutive tiers' breakpoints.
    """
    p = 2.0 / s.channel.alpha
    lam = [t.density for t in s.tiers]
    scale = s.tiers[j].dl_weight / s.tiers[k].ul_weight
    breaks = [(t.mu * scale) ** p for t in s.tiers]
    dl_part = [(s.tiers[j].dl_weight / t.dl_weight) ** p for t in s.tiers]
    ul_part = [(s.tiers[k].ul_weight / t.ul_weight) ** p for t in s.tiers]
    segments = []
    for l in range(k, j):
        slope = sum(lam[i] * ul_part[i] for i in range(l + 1))
        intercept = sum(lam[i] * dl_part[i] for i in range(l + 1, s.num_tiers))
        segments.append((breaks[l], breaks[l + 1], intercept, slope))
    return segments


def _power_segment(intercept: float, slope: float, u_lo: float, u_hi: float, c: float) -> float:
    """integral over [u_lo, u_hi] of (intercept + slope*u)^(-c) du."""
    if u_hi <= u_lo:
        return 0.0
    lo = intercept + slope * u_lo
    hi = intercept + slope * u_hi
    if slope == 0.0:
        return (u_hi - u_lo) * lo ** (-c)
    if c == 1.0:
        return math.log(hi / lo) / slope
    return (lo ** (1.0 - c) - hi ** (1.0 - c)) / (slope * (c - 1.0))


def _joint_moment_unnormalized(s: Scenario, j: int, k: int, order: float, link: str) -> float:
    """E[R^order ; DL tier j, UL tier k] for k < j, where R is the serving
    distance of the requested link. Order 0 gives the pair probability."""
    c = (order + 4.0) / 2.0
    total = 0.0
    for u_lo, u_hi, intercept, slope in _wedge_segments(s, j, k):
        if link == "DL":
            total += _power_segment(intercept, slope, u_lo, u_hi, c)
        else:
            # same pieces in the reciprocal variable w = 1/u, where the
            # roles of intercept and slope swap
            total += _power_segment(slope, intercept, 1.0 / u_hi, 1.0 / u_lo, c)
    lam_j = s.tiers[j].density
    lam_k = s.tiers[k].density
    return lam_j * lam_k * gamma_fn(c) * math.pi ** (-order / 2.0) * total


def joint_association_matrix(s: Scenario) -> np.ndarray:
    """Probabilities psi[j, k] of being served by tier j in DL and tier k
    in UL. Lower triangular in normalized order; entries sum to 1."""
    require_normalized(s)
    n = s.num_tiers
    psi = np.zeros((n, n))
    for j in range(n):
        psi[j, j] = s.tiers[j].density / _max_normalizer(s, j)
        for k in range(j):
            psi[j, k] = _joint_moment_unnormalized(s, j, k, 0.0, "DL")
    return psi


def _effective_density_for(s: Scenario, j: int, link: str) -> float:
    p = 2.0 / s.channel.alpha
    w_j = _link_weight(s, link, j)
    return sum((w_j / _link_weight(s, link, i)) ** p * t.density for i, t in enumerate(s.tiers))


def marginal_distance_cdf(s: Scenario, j: int, link: str, r: float) -> float:
    """CDF 1 - exp(-pi Lambda_j^m r^2) of the serving distance on link m,
    conditioned on tier-j association."""
    require_normalized(s)
    _check_tier(s, j, "tier")
    _check_link(link)
    if r < 0.0:
        raise ValueError(f"distance must be nonnegative, got {r}")
    return -math.expm1(-math.pi * _effective_density_for(s, j, link) * r * r)


def _rayleigh_moment(effective_density: float, order: float) -> float:
    """E[R^order] when P(R > r) = exp(-pi * density * r^2)."""
    return gamma_fn((2.0 + order) / 2.0) * (math.pi * effective_density) ** (-order / 2.0)


def marginal_distance_moment(s: Scenario, j: int, link: str, n: int) -> float:
    """n-th raw moment of the tier-j serving distance on the given link."""
    require_normalized(s)
    _check_tier(s, j, "tier")
    _check_link(link)
    if n != int(n) or n < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {n}")
    return _rayleigh_moment(_effective_density_for(s, j, link), float(n))


def joint_distance_pdf(s: Scenario, j: int, k: int, r_j: float, r_k: float) -> float:
    """Unnormalized joint density of the serving distances and the event
    (DL tier j, UL tier k); it integrates to psi[j, k] over its support.

    For k < j this is a planar density over the wedge
    (D_j/D_k)^(1/alpha) r_j < r_k < (U_j/U_k)^(1/alpha) r_j and zero
    elsewhere. For j == k both links share one BS, the support collapses
    to the diagonal, and the value is the one-dimensional density in r_j
    (r_k is ignored).
    """
    require_normalized(s)
    _check_tier(s, j, "dl tier")
    _check_tier(s, k, "ul tier")
    if k > j:
        raise ValueError(
            "UL tier index above DL tier index has zero probability in mu-sorted order"
        )
    if r_j < 0.0 or r_k < 0.0:
        raise ValueError("distances must be nonnegative")
    p = 2.0 / s.channel.alpha
    if j == k:
        m = _max_normalizer(s, j)
        return 2.0 * math.pi * s.tiers[j].density * r_j * math.exp(-math.pi * m * r_j * r_j)
    lo = (s.tiers[j].dl_weight / s.tiers[k].dl_weight) ** (1.0 / s.channel.alpha) * r_j
    hi = (s.tiers[j].ul_weight / s.tiers[k].ul_weight) ** (1.0 / s.channel.alpha) * r_j
    if not lo < r_k < hi:
        return 0.0
    acc = 0.0
    for i, t in enumerate(s.tiers):
        dl_disc = (s.tiers[j].dl_weight / t.dl_weight) ** p * r_j * r_j
        ul_disc = (s.tiers[k].ul_weight / t.ul_weight) ** p * r_k * r_k
        acc += t.density * max(dl_disc, ul_disc)
    return (
        4.0
        * math.pi**2
        * s.tiers[j].density
        * s.tiers[k].density
        * r_j
        * r_k
        * math.exp(-math.pi * acc)
    )


def joint_distance_moment(s: Scenario, j: int, k: int, link: str, order: int) -> float:
    """Conditional moment E[R^order | DL tier j, UL tier k] of the serving
    distance on the given link."""
    require_normalized(s)
    _check_tier(s, j, "dl tier")
    _check_tier(s, k, "ul tier")
    _check_link(link)
    if order != int(order) or order < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {order}")
    return _joint_distance_moment_real(s, j, k, link, float(order))


def _joint_distance_moment_real(s: Scenario, j: int, k: int, link: str, order: float) -> float:
    """Real-order core of `joint_distance_moment`; needed with order alpha."""
    if k > j:
        raise ValueError(
            "UL tier index above DL tier index has zero probability in mu-sorted order"
        )
    if j == k:
        return _rayleigh_moment(_max_normalizer(s, j), order)
    mass = _joint_moment_unnormalized(s, j, k, 0.0, "DL")
    if mass <= 0.0:
        raise ValueError(
            f"pair (dl_tier={j}, ul_tier={k}) has zero probability; no conditional moment"
        )
    return _joint_moment_unnormalized(s, j, k, order, link) / mass


def _inversion_cap_radius(s: Scenario, k: int) -> float:
    """Serving distance at which the capped channel inversion saturates."""
    eps = s.power_control.epsilon
    target = s.tiers[k].sensitivity * s.channel.gain**eps
    return (s.power_control.p_max / target) ** (1.0 / (eps * s.channel.alpha))


def tx_power_cdf(s: Scenario, k: int, t: float) -> float:
    """CDF of the UL transmit power of a UE served by tier k.

    With the power-control factor at zero the power is the constant
    min(rho_k, p_max) and the CDF is the matching unit step.
    """
    require_normalized(s)
    _check_tier(s, k, "tier")
    if t < 0.0:
        raise ValueError(f"power must be nonnegative, got {t}")
    pc = s.power_control
    if pc.epsilon == 0.0:
        return 1.0 if t >= min(s.tiers[k].sensitivity, pc.p_max) else 0.0
    if t >= pc.p_max:
        return 1.0
    if t == 0.0:
        return 0.0
    lam_ul = _effective_density_for(s, k, "UL")
    scale = s.tiers[k].sensitivity * s.channel.gain**pc.epsilon
    exponent = 2.0 / (pc.epsilon * s.channel.alpha)
    return -math.expm1(-math.pi * lam_ul * (t / scale) ** exponent)


def tx_power_moment_split(s: Scenario, k: int, n: int) -> tuple[float, float]:
    """(below-cap part, cap point mass) of the n-th transmit-power moment."""
    require_normalized(s)
    _check_tier(s, k, "tier")
    if n != int(n) or n < 1:
        raise ValueError(f"moment order must be a positive integer, got {n}")
    pc = s.power_control
    rho = s.tiers[k].sensitivity
    if pc.epsilon == 0.0:
        if rho <= pc.p_max:
            return rho**n, 0.0
        return 0.0, pc.p_max**n
    lam_ul = _effective_density_for(s, k, "UL")
    scale = rho * s.channel.gain**pc.epsilon
    s_exp = n * pc.epsilon * s.channel.alpha / 2.0
    prefactor = scale**n * (math.pi * lam_ul) ** (-s_exp)
    if math.isinf(pc.p_max):
        return prefactor * gamma_fn(1.0 + s_exp), 0.0
    v_cap = math.pi * lam_ul * _inversion_cap_radius(s, k) ** 2
    below = prefactor * lower_incomplete_gamma(1.0 + s_exp, v_cap)
    atom = pc.p_max**n * math.exp(-v_cap)
    return below, atom


def tx_power_moment(s: Scenario, k: int, n: int) -> float:
    """n-th raw moment of the capped UL transmit power of a tier-k UE."""
    below, atom = tx_power_moment_split(s, k, n)
    return below + atom
