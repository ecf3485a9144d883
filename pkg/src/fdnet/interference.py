"""Mean interference at a typical receiver, in-band full duplex.

Both link directions see two interferer populations at once: every other BS
transmitting DL and every active UE transmitting UL. Means follow from
Campbell's theorem with pair-correlation factors that carve out the holes
the association and minimum-distance rules create:

  - interfering BSs around a served UE are excluded inside the weighted
    serving disc (no BS may beat the server's weighted path loss),
  - interfering UEs around a BS are excluded inside their own weighted
    serving disc (no interfering UE would associate with that BS),
  - BS-to-BS repulsion is a soft hole of density lambda_i/beta_b beyond the
    hard minimum d_b,
  - UE-to-UE repulsion is a soft hole of the interfering tier's UL
    effective density beyond d_u.

Soft holes integrate to `k1`; interfering-UE transmit powers couple to
their serving distances, which `k2` captures as a capped-inversion moment.
Self-interference contributes its mean residual gain times the mean
transmit power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .assoc import effective_densities, require_normalized, tx_power_moment
from .mathkit import gamma_fn, generalized_gamma, upper_incomplete_gamma
from .scenario import Scenario

__all__ = [
    "MeanInterference",
    "k1",
    "k2",
    "mean_ul_interference",
    "mean_ul_self_interference",
    "mean_dl_interference",
    "mean_dl_interference_unconditional",
    "mean_dl_self_interference",
]

_BS_REPULSION_MODES = ("beta_b", "dl_effective")


@dataclass(frozen=True)
class MeanInterference:
    """Mean received interference power, split by interfering tier and kind."""

    total: float
    bs_parts: tuple[float, ...]
    ue_parts: tuple[float, ...]


def k1(d: float, alpha: float, lam: float) -> float:
    """Soft-hole field integral: int_d^inf (1 - exp(-pi lam r^2)) r^(1-alpha) dr.

    Closed form d^(2-alpha)/(alpha-2) minus an upper-incomplete-gamma tail.
    At d = 0 the integral only converges for 2 < alpha < 4, where it equals
    -(1/2) (pi lam)^((alpha-2)/2) Gamma[(2-alpha)/2].
    """
    if alpha <= 2.0:
        raise ValueError(f"exponent must exceed 2 for a finite field integral, got {alpha}")
    if lam < 0.0:
        raise ValueError(f"hole density must be nonnegative, got {lam}")
    if d < 0.0:
        raise ValueError(f"minimum distance must be nonnegative, got {d}")
    if lam == 0.0:
        return 0.0
    c = math.pi * lam
    if d == 0.0:
        if alpha >= 4.0:
            raise ValueError(
                "field integral diverges at zero minimum distance when the exponent is 4 or more"
            )
        return -0.5 * c ** ((alpha - 2.0) / 2.0) * gamma_fn((2.0 - alpha) / 2.0)
    free = d ** (2.0 - alpha) / (alpha - 2.0)
    tail = 0.5 * c ** ((alpha - 2.0) / 2.0) * upper_incomplete_gamma(
        (2.0 - alpha) / 2.0, c * d * d
    )
    return free - tail


def _truncated_rayleigh_moment(
    effective_density: float, order: float, r_lo: float, r_hi: float = math.inf
) -> float:
    """E[R^order ; r_lo < R <= r_hi] for the Rayleigh nearest-point law."""
    c = math.pi * effective_density
    s = (2.0 + order) / 2.0
    return c ** (-order / 2.0) * generalized_gamma(s, c * r_lo * r_lo, c * r_hi * r_hi)


@lru_cache(maxsize=4096)
def k2(s: Scenario, i: int) -> float:
    """Capped-inversion distance coupling of an interfering tier-i UE.

    E[min(rho_i G^eps R^(eps alpha), p_max) R^(2-alpha) ; R > d_o] divided
    by rho_i G^eps, with R the UE's UL serving distance. Splits at the cap
    radius into an inverting part and a saturated part. Memoized per
    (scenario, tier); the value does not depend on the receiving tier.
    """
    require_normalized(s)
    alpha = s.channel.alpha
    pc = s.power_control
    d_o = s.pair_corr.d_o
    lam_ul = effective_densities(s)[i].lambda_ul
    rho = s.tiers[i].sensitivity
    if d_o == 0.0 and alpha * (1.0 - pc.epsilon) >= 4.0:
        raise ValueError(
            "interfering-UE coupling diverges at zero minimum serving distance "
            "when alpha (1 - epsilon) >= 4"
        )
    if pc.epsilon == 0.0:
        constant = min(rho, pc.p_max) / rho
        return constant * _truncated_rayleigh_moment(lam_ul, 2.0 - alpha, d_o)
    if math.isinf(pc.p_max):
        return _truncated_rayleigh_moment(lam_ul, 2.0 - alpha * (1.0 - pc.epsilon), d_o)
    scale = rho * s.channel.gain**pc.epsilon
    cap_r = max((pc.p_max / scale) ** (1.0 / (pc.epsilon * alpha)), d_o)
    inverting = _truncated_rayleigh_moment(lam_ul, 2.0 - alpha * (1.0 - pc.epsilon), d_o, cap_r)
    saturated = (pc.p_max / scale) * _truncated_rayleigh_moment(lam_ul, 2.0 - alpha, cap_r)
    return inverting + saturated


@lru_cache(maxsize=1024)
def mean_ul_interference(
    s: Scenario, k: int, bs_repulsion: str = "beta_b"
) -> MeanInterference:
    """Mean interference power at a typical tier-k BS receiving UL.

    Per interfering tier i the BS part is 2 pi lambda_i P_i
    k1(d_b, alpha_b, hole density)/G_b and the UE part is
    2 pi lambda_i (U_i/U_k)^((2-alpha)/alpha) rho_i G^eps k2(i) / (G (alpha-2)),
    the UE exclusion radius being (U_i/U_k)^(1/alpha) times the interferer's
    own serving distance. `bs_repulsion` picks the BS hole density:
    "beta_b" uses lambda_i/beta_b, "dl_effective" the tier's DL effective
    density.
    """
    require_normalized(s)
    if not 0 <= k < s.num_tiers:
        raise ValueError(f"tier must lie in [0, {s.num_tiers - 1}], got {k}")
    if bs_repulsion not in _BS_REPULSION_MODES:
        raise ValueError(f"bs_repulsion must be one of {_BS_REPULSION_MODES}, got {bs_repulsion!r}")
    ch = s.channel
    eff = effective_densities(s)
    gain_eps = ch.gain**s.power_control.epsilon
    bs_parts = []
    ue_parts = []
    for i, t in enumerate(s.tiers):
        if bs_repulsion == "beta_b":
            hole = t.density / s.pair_corr.beta_b
        else:
            hole = eff[i].lambda_dl
        bs_parts.append(
            2.0 * math.pi * t.density * t.bs_power * k1(s.pair_corr.d_b, ch.alpha_b, hole) / ch.gain_b
        )
        u_ratio = t.ul_weight / s.tiers[k].ul_weight
        ue_parts.append(
            2.0
            * math.pi
            * t.density
            * u_ratio ** ((2.0 - ch.alpha) / ch.alpha)
            * t.sensitivity
            * gain_eps
            * k2(s, i)
            / (ch.gain * (ch.alpha - 2.0))
        )
    return MeanInterference(
        total=sum(bs_parts) + sum(ue_parts),
        bs_parts=tuple(bs_parts),
        ue_parts=tuple(ue_parts),
    )


def mean_ul_self_interference(s: Scenario, k: int) -> float:
    """Mean residual self-interference at a tier-k FD BS: sigma_bk P_k."""
    if not 0 <= k < s.num_tiers:
        raise ValueError(f"tier must lie in [0, {s.num_tiers - 1}], got {k}")
    return s.tiers[k].si_mean_bs * s.tiers[k].bs_power


def mean_dl_interference(s: Scenario, j: int, r_j: float) -> MeanInterference:
    """Mean interference power at a typical UE served in DL by tier j at
    distance r_j.

    The BS part conditions on r_j because the exclusion discs scale with
    the serving distance: tier i contributes
    2 pi lambda_i P_i (D_j/D_i)^((2-alpha)/alpha) r_j^(2-alpha)/(G (alpha-2)).
    The UE part is distance free: 2 pi lambda_i E[Gamma_i]
    k1(d_u, alpha_u, Lambda_i^UL)/G_u.
    """
    require_normalized(s)
    if not 0 <= j < s.num_tiers:
        raise ValueError(f"tier must lie in [0, {s.num_tiers - 1}], got {j}")
    if r_j <= 0.0:
        raise ValueError(
            f"serving distance must be positive (the conditioned BS part diverges), got {r_j}"
        )
    return _dl_interference_with_moment(s, j, r_j ** (2.0 - s.channel.alpha))


def mean_dl_interference_unconditional(s: Scenario, j: int) -> MeanInterference:
    """Mean DL interference with the serving distance integrated out.

    The BS part needs E[R^(2-alpha)], which only exists because the serving
    distance respects the minimum d_o; the moment is taken over the law
    conditioned on R > d_o.
    """
    require_normalized(s)
    if not 0 <= j < s.num_tiers:
        raise ValueError(f"tier must lie in [0, {s.num_tiers - 1}], got {j}")
    d_o = s.pair_corr.d_o
    if d_o <= 0.0 and s.channel.alpha >= 4.0:
        raise ValueError(
            "unconditional DL interference diverges at zero minimum serving "
            "distance when alpha >= 4"
        )
    lam_dl = effective_densities(s)[j].lambda_dl
    moment = _truncated_rayleigh_moment(lam_dl, 2.0 - s.channel.alpha, d_o)
    moment /= math.exp(-math.pi * lam_dl * d_o * d_o)
    return _dl_interference_with_moment(s, j, moment)


def _dl_interference_with_moment(s: Scenario, j: int, r_moment: float) -> MeanInterference:
    ch = s.channel
    eff = effective_densities(s)
    bs_parts = []
    ue_parts = []
    for i, t in enumerate(s.tiers):
        d_ratio = s.tiers[j].dl_weight / t.dl_weight
        bs_parts.append(
            2.0
            * math.pi
            * t.density
            * t.bs_power
            * d_ratio ** ((2.0 - ch.alpha) / ch.alpha)
            * r_moment
            / (ch.gain * (ch.alpha - 2.0))
        )
        ue_parts.append(
            2.0
            * math.pi
            * t.density
            * tx_power_moment(s, i, 1)
            * k1(s.pair_corr.d_u, ch.alpha_u, eff[i].lambda_ul)
            / ch.gain_u
        )
    return MeanInterference(
        total=sum(bs_parts) + sum(ue_parts),
        bs_parts=tuple(bs_parts),
        ue_parts=tuple(ue_parts),
    )


def mean_dl_self_interference(s: Scenario, k: int) -> float:
    """Mean residual self-interference at an FD UE transmitting UL to tier
    k: sigma_u E[Gamma_k]."""
    require_normalized(s)
    if not 0 <= k < s.num_tiers:
        raise ValueError(f"tier must lie in [0, {s.num_tiers - 1}], got {k}")
    return s.power_control.si_mean_ue * tx_power_moment(s, k, 1)
