"""Mean rate utilities of the full-duplex network across operating modes.

The network mean rate utility is ln ln(1 + tau) per active link direction
minus nonnegative penalty terms built from association probabilities,
serving-distance moments, and mean interference. Seven modes are supported:

- ``FD_DUA``: full duplex with decoupled UL/DL association,
- ``FD_CUA``: full duplex with a single coupled association rule,
- ``FD_3NT``: FD base stations serving one half-duplex UE per direction,
- ``LEGACY_DL`` / ``LEGACY_UL``: a half-duplex user or tier embedded in an
  otherwise full-duplex network,
- ``HD_DL`` / ``HD_UL``: pure half-duplex networks, one direction active.

Every penalty is assembled from closed forms; `rate_coverage_log` provides
an independent raw-moment route to the same quantities for verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.integrate import quad

from .assoc import (
    _joint_distance_moment_real,
    _max_normalizer,
    _wedge_segments,
    effective_densities,
    joint_association_matrix,
    require_normalized,
    tx_power_moment,
)
from .interference import (
    _truncated_rayleigh_moment,
    k1,
    mean_ul_interference,
    mean_ul_self_interference,
)
from .mathkit import gamma_fn, lower_incomplete_gamma, upper_incomplete_gamma
from .scenario import Scenario

__all__ = [
    "MODES",
    "RateReport",
    "CoverageEstimate",
    "a1",
    "a2",
    "a3",
    "k3",
    "k4",
    "mean_rate_utility",
    "rate_coverage_log",
    "coverage_estimate",
]

MODES = ("FD_DUA", "FD_CUA", "FD_3NT", "LEGACY_DL", "LEGACY_UL", "HD_DL", "HD_UL")

# exp underflows to zero a little below this exponent.
_LOG_UNDERFLOW = -745.0


@dataclass(frozen=True)
class RateReport:
    """Mean rate utility with its per-cell penalties and audit constants.

    ``total_utility = dl_utility + ul_utility``; a direction a mode does not
    operate contributes zero utility and zero penalty. ``dl_cells[j][k]`` and
    ``ul_cells[j][k]`` hold the weighted penalty contributions; modes indexed
    by a single tier store that tier's contribution on the diagonal. The
    audit constants are the values the assembly actually used, so for
    ``FD_CUA`` they are evaluated under the coupled weights. ``k3`` holds
    NaN at pairs with zero association probability.
    """

    mode: str
    total_utility: float
    dl_utility: float
    ul_utility: float
    dl_penalty: float
    ul_penalty: float
    dl_cells: tuple[tuple[float, ...], ...]
    ul_cells: tuple[tuple[float, ...], ...]
    a1: tuple[float, ...]
    a2: float
    a3: tuple[float, ...]
    k3: tuple[tuple[float, ...], ...]
    k4: tuple[float, ...]


@dataclass(frozen=True)
class CoverageEstimate:
    """Geometric-mean coverage probability for plotting.

    ``probability`` is exp of the mean log coverage, clamped to [0, 1];
    ``underflowed`` flags cells whose penalty is so large that the
    exponential is numerically zero and the clamp is meaningless.
    """

    probability: float
    underflowed: bool


def _log_rate_target(tau: float) -> float:
    """ln of the per-link rate target ln(1 + tau), in ln-nats."""
    return math.log(math.log1p(tau))


def a1(s: Scenario, j: int) -> float:
    """DL interference-to-signal aggregate: sum_i 2 pi lam_i (D_j/D_i)^((2-a)/a) P_i / (G (a-2))."""
    require_normalized(s)
    _check_tier(s, j)
    ch = s.channel
    total = 0.0
    for t in s.tiers:
        ratio = s.tiers[j].dl_weight / t.dl_weight
        total += (
            2.0
            * math.pi
            * t.density
            * ratio ** ((2.0 - ch.alpha) / ch.alpha)
            * t.bs_power
            / (ch.gain * (ch.alpha - 2.0))
        )
    return total


def a2(s: Scenario) -> float:
    """Noise plus mean UE-to-UE field at a DL receiver: sigma^2 + sum_i 2 pi lam_i k1(...) E[Gamma_i] / G_u."""
    require_normalized(s)
    eff = effective_densities(s)
    total = s.channel.noise
    for i, t in enumerate(s.tiers):
        total += (
            2.0
            * math.pi
            * t.density
            * tx_power_moment(s, i, 1)
            * k1(s.pair_corr.d_u, s.channel.alpha_u, eff[i].lambda_ul)
            / s.channel.gain_u
        )
    return total


def a3(s: Scenario, k: int) -> float:
    """Noise plus the mean UL interference (BS and UE fields) at a tier-k BS."""
    require_normalized(s)
    _check_tier(s, k)
    return s.channel.noise + mean_ul_interference(s, k).total


def k3(s: Scenario, j: int, k: int) -> float:
    """Reciprocal of the conditional DL distance moment E[R_j^alpha | (j, k)].

    Raises:
        ValueError: when the (j, k) association cell has zero probability.
    """
    require_normalized(s)
    _check_tier(s, j)
    _check_tier(s, k)
    alpha = s.channel.alpha
    if j == k:
        m = _max_normalizer(s, j)
        return (math.pi * m) ** (alpha / 2.0) / gamma_fn((2.0 + alpha) / 2.0)
    return 1.0 / _joint_distance_moment_real(s, j, k, "DL", alpha)


def k4(s: Scenario, k: int) -> float:
    """Normalized mean inverse UL signal power, (pi Lam_k^UL)^(a/2) E[R^a / min{R^(eps a), P_max/(rho_k G^eps)}].

    Splits into a channel-inverting part (lower incomplete gamma up to the
    cap radius) and a power-capped part (upper incomplete gamma beyond it).
    """
    require_normalized(s)
    _check_tier(s, k)
    alpha = s.channel.alpha
    pc = s.power_control
    rho = s.tiers[k].sensitivity
    lam_ul = effective_densities(s)[k].lambda_ul
    if pc.epsilon == 0.0:
        return gamma_fn((2.0 + alpha) / 2.0) * rho / min(rho, pc.p_max)
    residual = alpha * (1.0 - pc.epsilon)
    if math.isinf(pc.p_max):
        return (math.pi * lam_ul) ** (pc.epsilon * alpha / 2.0) * gamma_fn(
            (2.0 + residual) / 2.0
        )
    cap = pc.p_max / (rho * s.channel.gain**pc.epsilon)
    v = math.pi * lam_ul * cap ** (2.0 / (pc.epsilon * alpha))
    inverting = (math.pi * lam_ul) ** (pc.epsilon * alpha / 2.0) * lower_incomplete_gamma(
        (2.0 + residual) / 2.0, v
    )
    capped = upper_incomplete_gamma((2.0 + alpha) / 2.0, v) / cap
    return inverting + capped


def _check_tier(s: Scenario, idx: int) -> None:
    if not 0 <= idx < s.num_tiers:
        raise ValueError(f"tier must lie in [0, {s.num_tiers - 1}], got {idx}")


def _check_link(link: str) -> None:
    if link not in ("DL", "UL"):
        raise ValueError(f"link must be 'DL' or 'UL', got {link!r}")


def _conditional_inverse_signal_moment(s: Scenario, j: int, k: int) -> float:
    """E[R_k^alpha / min{R_k^(eps alpha), P_max/(rho_k G^eps)} | (j, k)].

    The diagonal cell has a closed form; off-diagonal cells integrate the
    incomplete-gamma radial factor over the association wedge numerically.
    """
    alpha = s.channel.alpha
    pc = s.power_control
    rho = s.tiers[k].sensitivity
    if pc.epsilon == 0.0:
        moment = _joint_distance_moment_real(s, j, k, "UL", alpha)
        return moment / min(1.0, pc.p_max / rho)
    if math.isinf(pc.p_max):
        return _joint_distance_moment_real(s, j, k, "UL", alpha * (1.0 - pc.epsilon))
    cap = pc.p_max / (rho * s.channel.gain**pc.epsilon)
    r_cap = cap ** (1.0 / (pc.epsilon * alpha))
    low_order = alpha * (1.0 - pc.epsilon)
    if j == k:
        m = _max_normalizer(s, j)
        inverting = _truncated_rayleigh_moment(m, low_order, 0.0, r_cap)
        capped = _truncated_rayleigh_moment(m, alpha, r_cap) / cap
        return inverting + capped
    c_low = (low_order + 4.0) / 2.0
    c_high = (alpha + 4.0) / 2.0

    def radial_factor(w: float, intercept: float, slope: float) -> float:
        b = math.pi * (slope + intercept * w)
        v = b * r_cap * r_cap
        inverting = lower_incomplete_gamma(c_low, v) / (2.0 * b**c_low)
        capped = upper_incomplete_gamma(c_high, v) / (2.0 * b**c_high * cap)
        return inverting + capped

    total = 0.0
    for u_lo, u_hi, intercept, slope in _wedge_segments(s, j, k):
        if u_hi <= u_lo:
            continue
        piece, _ = quad(
            radial_factor,
            1.0 / u_hi,
            1.0 / u_lo,
            args=(intercept, slope),
            limit=200,
            epsabs=0.0,
            epsrel=1e-12,
        )
        total += piece
    lam_j = s.tiers[j].density
    lam_k = s.tiers[k].density
    mass = joint_association_matrix(s)[j, k]
    return 2.0 * math.pi**2 * lam_j * lam_k * total / mass


def rate_coverage_log(s: Scenario, j: int, k: int, link: str) -> float:
    """Mean log coverage of one association cell, from raw conditional moments.

    This is the per-(j, k, link) summand of the utility before weighting by
    the association probability, computed independently of the closed-form
    assembly in `mean_rate_utility` (conditional joint moments instead of
    the aggregate constants).

    Raises:
        ValueError: when the (j, k) cell has zero association probability.
    """
    require_normalized(s)
    _check_tier(s, j)
    _check_tier(s, k)
    _check_link(link)
    psi = joint_association_matrix(s)[j, k]
    if psi <= 0.0:
        raise ValueError(f"pair (dl_tier={j}, ul_tier={k}) has zero probability")
    ch = s.channel
    if link == "DL":
        second = _joint_distance_moment_real(s, j, k, "DL", 2.0)
        alpha_moment = _joint_distance_moment_real(s, j, k, "DL", ch.alpha)
        si = s.power_control.si_mean_ue * tx_power_moment(s, k, 1)
        return float(
            -s.thresholds.tau_dl
            * ch.gain
            / s.tiers[j].bs_power
            * (a1(s, j) * second + (si + a2(s)) * alpha_moment)
        )
    inverse_signal = _conditional_inverse_signal_moment(s, j, k)
    coeff = mean_ul_self_interference(s, k) + a3(s, k)
    return float(
        -s.thresholds.tau_ul
        * ch.gain ** (1.0 - s.power_control.epsilon)
        / s.tiers[k].sensitivity
        * coeff
        * inverse_signal
    )


def coverage_estimate(s: Scenario, j: int, k: int, link: str) -> CoverageEstimate:
    """Exponentiate the mean log coverage of one cell for plotting."""
    log_cov = rate_coverage_log(s, j, k, link)
    probability = min(math.exp(min(log_cov, 0.0)), 1.0)
    return CoverageEstimate(probability=probability, underflowed=bool(log_cov < _LOG_UNDERFLOW))


def _audit_constants(s: Scenario):
    """A1/A2/A3/K3/K4 on the given scenario, with NaN at zero-mass K3 cells."""
    n = s.num_tiers
    psi = joint_association_matrix(s)
    a1_values = tuple(a1(s, j) for j in range(n))
    a3_values = tuple(a3(s, k) for k in range(n))
    k4_values = tuple(k4(s, k) for k in range(n))
    k3_rows = []
    for j in range(n):
        row = []
        for k in range(n):
            row.append(k3(s, j, k) if psi[j, k] > 0.0 else math.nan)
        k3_rows.append(tuple(row))
    return psi, a1_values, a2(s), a3_values, tuple(k3_rows), k4_values


def _zero_cells(n: int) -> list[list[float]]:
    return [[0.0] * n for _ in range(n)]


def _ul_tier_penalty(s: Scenario, k: int, coeff: float, k4_k: float) -> float:
    """UL penalty of a serving tier given its interference-plus-noise coefficient."""
    lam_ul = effective_densities(s)[k].lambda_ul
    return (
        s.thresholds.tau_ul
        * s.channel.gain ** (1.0 - s.power_control.epsilon)
        / s.tiers[k].sensitivity
        * coeff
        * k4_k
        / (math.pi * lam_ul) ** (s.channel.alpha / 2.0)
    )


def _dl_tier_penalty(s: Scenario, j: int, noise_like: float, a1_j: float) -> float:
    """DL penalty of a serving tier given its distance-free interference term."""
    ch = s.channel
    lam_dl = effective_densities(s)[j].lambda_dl
    gamma_a = gamma_fn((2.0 + ch.alpha) / 2.0)
    return (
        s.thresholds.tau_dl
        * ch.gain
        / s.tiers[j].bs_power
        * (
            a1_j / (math.pi * lam_dl)
            + gamma_a * noise_like / (math.pi * lam_dl) ** (ch.alpha / 2.0)
        )
    )


def _assemble_fd_dua(s: Scenario, mode: str) -> RateReport:
    n = s.num_tiers
    ch = s.channel
    psi, a1_values, a2_value, a3_values, k3_values, k4_values = _audit_constants(s)
    eff = effective_densities(s)
    gamma_a = gamma_fn((2.0 + ch.alpha) / 2.0)
    tx_means = [tx_power_moment(s, k, 1) for k in range(n)]
    si_ue = s.power_control.si_mean_ue
    dl_cells = _zero_cells(n)
    ul_cells = _zero_cells(n)
    ul_terms = [
        _ul_tier_penalty(
            s, k, mean_ul_self_interference(s, k) + a3_values[k], k4_values[k]
        )
        for k in range(n)
    ]
    for j in range(n):
        lam_dl = math.pi * eff[j].lambda_dl
        for k in range(n):
            weight = psi[j, k]
            if weight <= 0.0:
                continue
            dl_term = (
                s.thresholds.tau_dl
                * ch.gain
                / s.tiers[j].bs_power
                * (
                    a1_values[j] / lam_dl
                    + gamma_a * a2_value / lam_dl ** (ch.alpha / 2.0)
                    + si_ue * tx_means[k] / k3_values[j][k]
                )
            )
            dl_cells[j][k] = weight * dl_term
            ul_cells[j][k] = weight * ul_terms[k]
    return _finish_report(
        s, mode, dl_cells, ul_cells,
        (a1_values, a2_value, a3_values, k3_values, k4_values),
        dl_active=True, ul_active=True,
    )


def _assemble_tierwise(
    s: Scenario,
    mode: str,
    dl_weights: tuple[float, ...] | None,
    dl_terms: tuple[float, ...] | None,
    ul_weights: tuple[float, ...] | None,
    ul_terms: tuple[float, ...] | None,
) -> RateReport:
    n = s.num_tiers
    dl_cells = _zero_cells(n)
    ul_cells = _zero_cells(n)
    if dl_terms is not None:
        for j in range(n):
            dl_cells[j][j] = dl_weights[j] * dl_terms[j]
    if ul_terms is not None:
        for k in range(n):
            ul_cells[k][k] = ul_weights[k] * ul_terms[k]
    return _finish_report(
        s, mode, dl_cells, ul_cells, _audit_constants(s)[1:],
        dl_active=dl_terms is not None, ul_active=ul_terms is not None,
    )


def _finish_report(
    s: Scenario,
    mode: str,
    dl_cells: list[list[float]],
    ul_cells: list[list[float]],
    constants,
    dl_active: bool,
    ul_active: bool,
) -> RateReport:
    a1_values, a2_value, a3_values, k3_values, k4_values = constants
    dl_penalty = math.fsum(value for row in dl_cells for value in row)
    ul_penalty = math.fsum(value for row in ul_cells for value in row)
    dl_utility = _log_rate_target(s.thresholds.tau_dl) - dl_penalty if dl_active else 0.0
    ul_utility = _log_rate_target(s.thresholds.tau_ul) - ul_penalty if ul_active else 0.0
    return RateReport(
        mode=mode,
        total_utility=dl_utility + ul_utility,
        dl_utility=dl_utility,
        ul_utility=ul_utility,
        dl_penalty=dl_penalty,
        ul_penalty=ul_penalty,
        dl_cells=tuple(tuple(row) for row in dl_cells),
        ul_cells=tuple(tuple(row) for row in ul_cells),
        a1=a1_values,
        a2=a2_value,
        a3=a3_values,
        k3=k3_values,
        k4=k4_values,
    )


def _coupled_twin(s: Scenario) -> Scenario:
    """The scenario with UL association forced to follow the DL rule."""
    tiers = tuple(replace(t, ul_weight=t.dl_weight) for t in s.tiers)
    return replace(s, tiers=tiers)


def mean_rate_utility(s: Scenario, mode: str) -> RateReport:
    """Mean rate utility of the network under one of the seven modes.

    DL and UL tier weights for the aggregated per-tier modes are the
    corresponding association probabilities; the decoupled FD mode weights
    each (DL tier, UL tier) cell by its joint probability.

    Raises:
        ValueError: unknown mode or non-normalized scenario.
    """
    require_normalized(s)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "FD_DUA":
        return _assemble_fd_dua(s, mode)
    if mode == "FD_CUA":
        return _assemble_fd_dua(_coupled_twin(s), mode)
    n = s.num_tiers
    eff = effective_densities(s)
    dl_probs = tuple(s.tiers[j].density / eff[j].lambda_dl for j in range(n))
    ul_probs = tuple(s.tiers[k].density / eff[k].lambda_ul for k in range(n))
    if mode == "LEGACY_DL":
        a2_value = a2(s)
        terms = tuple(_dl_tier_penalty(s, j, a2_value, a1(s, j)) for j in range(n))
        return _assemble_tierwise(s, mode, dl_probs, terms, None, None)
    if mode == "HD_DL":
        terms = tuple(
            _dl_tier_penalty(s, j, s.channel.noise, a1(s, j)) for j in range(n)
        )
        return _assemble_tierwise(s, mode, dl_probs, terms, None, None)
    if mode == "LEGACY_UL":
        terms = []
        for k in range(n):
            parts = mean_ul_interference(s, k)
            coeff = s.channel.noise + parts.total - parts.bs_parts[k]
            terms.append(_ul_tier_penalty(s, k, coeff, k4(s, k)))
        return _assemble_tierwise(s, mode, None, None, ul_probs, tuple(terms))
    if mode == "HD_UL":
        terms = []
        for k in range(n):
            coeff = s.channel.noise + math.fsum(mean_ul_interference(s, k).ue_parts)
            terms.append(_ul_tier_penalty(s, k, coeff, k4(s, k)))
        return _assemble_tierwise(s, mode, None, None, ul_probs, tuple(terms))
    # FD_3NT: the served UE is half duplex (legacy DL penalty) while the FD
    # BS adds self-interference on top of the full UL field.
    a2_value = a2(s)
    dl_terms = tuple(_dl_tier_penalty(s, j, a2_value, a1(s, j)) for j in range(n))
    ul_terms = tuple(
        _ul_tier_penalty(s, k, a3(s, k) + mean_ul_self_interference(s, k), k4(s, k))
        for k in range(n)
    )
    return _assemble_tierwise(s, mode, dl_probs, dl_terms, ul_probs, ul_terms)
