"""Optimal user-association weights and their numerical verification.

The closed form assigns DL weights inversely proportional to BS transmit
power and equal UL weights for every tier. Two verifiers back the claim:
an evaluator for the pair of concave penalty sub-problems whose joint
minimizer yields that closed form, and an exhaustive grid search over
weight ratios that also demonstrates the dominance of decoupled over
coupled association.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .interference import k1
from .rate import mean_rate_utility
from .scenario import Scenario, normalize_tier_order

_CONSTRAINT_TOL = 1e-9


@dataclass(frozen=True)
class WeightAssignment:
    """Per-tier association weights, normalized to a unit first entry."""

    ul_weights: tuple[float, ...]
    dl_weights: tuple[float, ...]

    def __post_init__(self) -> None:
        for name, seq in (("ul_weights", self.ul_weights), ("dl_weights", self.dl_weights)):
            if not seq or any(w <= 0.0 or not math.isfinite(w) for w in seq):
                raise ValueError(f"{name} must be positive and finite, got {seq}")
        if len(self.ul_weights) != len(self.dl_weights):
            raise ValueError("ul_weights and dl_weights must have equal length")


@dataclass(frozen=True)
class OptimizationResult:
    """A weight assignment with its utility and search diagnostics.

    For grid searches the coupled-association fields hold the best point
    of the sub-grid constrained to equal UL and DL weights; the closed
    form carries no such comparison and leaves them None.
    """

    assignment: WeightAssignment
    utility: float
    method: str
    evaluations: int
    runner_up_gap: float
    cua_assignment: Optional[WeightAssignment] = None
    cua_utility: Optional[float] = None


def _normalized(seq: Sequence[float]) -> tuple[float, ...]:
    return tuple(w / seq[0] for w in seq)


def scenario_with_weights(
    s: Scenario, ul_weights: Sequence[float], dl_weights: Sequence[float]
) -> Scenario:
    """Copy of the scenario with new association weights, re-sorted into
    the normalized tier order the analytic engine requires."""
    if len(ul_weights) != s.num_tiers or len(dl_weights) != s.num_tiers:
        raise ValueError(
            f"expected {s.num_tiers} weights per link, "
            f"got {len(ul_weights)} UL and {len(dl_weights)} DL"
        )
    tiers = tuple(
        replace(t, ul_weight=float(u), dl_weight=float(d))
        for t, u, d in zip(s.tiers, ul_weights, dl_weights)
    )
    ordered, _ = normalize_tier_order(replace(s, tiers=tiers))
    return ordered


def optimal_weights_closed_form(s: Scenario) -> WeightAssignment:
    """Utility-maximizing weights: DL inverse to BS power, UL all equal.

    The optimality claim rests on three modeling assumptions; when the
    scenario violates one, the closed form is still returned but a warning
    flags that its optimality is unverified there.
    """
    violations = []
    rhos = [t.sensitivity for t in s.tiers]
    if any(not math.isclose(r, rhos[0], rel_tol=1e-9) for r in rhos):
        violations.append("receiver sensitivities differ across tiers")
    if math.isfinite(s.power_control.p_max):
        violations.append("UE transmit power is capped")
    residuals = [t.si_mean_bs * t.bs_power for t in s.tiers]
    if any(not math.isclose(r, residuals[0], rel_tol=1e-9) for r in residuals):
        violations.append("BS self-interference residuals are not power-balanced")
    if violations:
        warnings.warn(
            "closed-form weights are optimal only under assumptions this "
            "scenario violates (" + "; ".join(violations) + "); "
            "grid search can verify the actual optimum",
            UserWarning,
            stacklevel=2,
        )
    p_first = s.tiers[0].bs_power
    return WeightAssignment(
        ul_weights=(1.0,) * s.num_tiers,
        dl_weights=tuple(p_first / t.bs_power for t in s.tiers),
    )


def optimal_effective_densities(s: Scenario) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Effective densities induced by the closed-form weights.

    DL: Lambda_j = P_j^(-2/alpha) sum_i P_i^(2/alpha) lambda_i. UL: the
    total density for every tier. Both satisfy the unit-probability
    constraints by construction.
    """
    alpha = s.channel.alpha
    dl_sum = math.fsum(t.bs_power ** (2.0 / alpha) * t.density for t in s.tiers)
    total = math.fsum(t.density for t in s.tiers)
    dl = tuple(t.bs_power ** (-2.0 / alpha) * dl_sum for t in s.tiers)
    return dl, (total,) * s.num_tiers


def evaluate_p1_p2_objectives(
    s: Scenario,
    dl_densities: Sequence[float],
    ul_densities: Sequence[float],
    c1: float = 1.0,
    c2: float = 1.0,
    c3: float = 1.0,
    c4: float = 1.0,
) -> tuple[float, float]:
    """Values of the two penalty sub-problems at candidate effective
    densities.

    Both problems are minimized; the arbitrary positive constants only
    rescale the terms and leave the minimizer unchanged. Candidates must
    satisfy the unit-probability constraints sum_j lambda_j / Lambda_j = 1.

    Raises:
        ValueError: when a candidate violates a constraint beyond 1e-9.
    """
    n = s.num_tiers
    for name, cand in (("DL", dl_densities), ("UL", ul_densities)):
        if len(cand) != n:
            raise ValueError(f"expected {n} {name} densities, got {len(cand)}")
        if any(v <= 0.0 or not math.isfinite(v) for v in cand):
            raise ValueError(f"{name} densities must be positive and finite, got {cand}")
        total = math.fsum(t.density / v for t, v in zip(s.tiers, cand))
        if abs(total - 1.0) > _CONSTRAINT_TOL:
            raise ValueError(
                f"candidate {name} densities violate the unit-probability "
                f"constraint: sum lambda_j/Lambda_j = {total!r}"
            )
    alpha = s.channel.alpha
    eps = s.power_control.epsilon
    ch = s.channel
    dl_core = math.fsum(
        t.density / (t.bs_power * dl ** ((2.0 + alpha) / 2.0))
        for t, dl in zip(s.tiers, dl_densities)
    )
    ul_core = math.fsum(
        t.density / (t.sensitivity * ul ** ((2.0 + alpha) / 2.0))
        for t, ul in zip(s.tiers, ul_densities)
    )
    bs_field = math.fsum(
        t.bs_power * t.density * dl ** ((alpha - 2.0) / 2.0)
        for t, dl in zip(s.tiers, dl_densities)
    )
    ue_field = math.fsum(
        t.sensitivity
        * t.density
        * k1(s.pair_corr.d_u, ch.alpha_u, ul)
        / ul ** (eps * alpha / 2.0)
        for t, ul in zip(s.tiers, ul_densities)
    )
    inversion_field = math.fsum(
        t.sensitivity * t.density * ul ** (eps * alpha / 2.0)
        for t, ul in zip(s.tiers, ul_densities)
    )
    coupling_field = math.fsum(
        t.sensitivity * t.density / ul ** ((2.0 + eps * alpha) / 2.0)
        for t, ul in zip(s.tiers, ul_densities)
    )
    p1 = c1 * dl_core * bs_field + c2 * dl_core * ue_field
    p2 = c3 * ul_core * inversion_field + c4 * dl_core * coupling_field
    return p1, p2


def ratio_grid(span_db: float = 20.0, points: int = 9) -> tuple[float, ...]:
    """Log-spaced weight ratios spanning +-span_db around unity."""
    if points < 1 or span_db < 0.0:
        raise ValueError(f"need points >= 1 and span_db >= 0, got {points}, {span_db}")
    if points == 1:
        return (1.0,)
    step = 2.0 * span_db / (points - 1)
    return tuple(10.0 ** ((-span_db + i * step) / 10.0) for i in range(points))


def _utility(s: Scenario, ul: tuple[float, ...], dl: tuple[float, ...], mode: str) -> float:
    return mean_rate_utility(scenario_with_weights(s, ul, dl), mode).total_utility


def closed_form_result(s: Scenario) -> OptimizationResult:
    """The closed-form assignment evaluated on the decoupled utility."""
    assignment = optimal_weights_closed_form(s)
    utility = _utility(s, assignment.ul_weights, assignment.dl_weights, "FD_DUA")
    return OptimizationResult(
        assignment=assignment,
        utility=utility,
        method="closed_form",
        evaluations=1,
        runner_up_gap=0.0,
    )


def grid_search_weights(
    s: Scenario,
    grid: Optional[Sequence[float]] = None,
    center: Optional[WeightAssignment] = None,
) -> OptimizationResult:
    """Exhaustive search over per-tier weight-ratio grids.

    The first tier's weights are pinned at one (only ratios matter) and
    every remaining tier draws its UL and DL ratios from `grid`, optionally
    re-centered on `center`'s ratios. The best decoupled assignment is
    returned along with the best coupled one, found on the same DL axes
    under the constraint that UL and DL weights coincide. Evaluation order
    is lexicographic in the grid indices and ties keep the earliest point,
    so results do not depend on scheduling.
    """
    base = tuple(ratio_grid() if grid is None else tuple(float(g) for g in grid))
    if not base or any(g <= 0.0 or not math.isfinite(g) for g in base):
        raise ValueError(f"grid ratios must be positive and finite, got {base}")
    n = s.num_tiers
    if center is None:
        center = WeightAssignment((1.0,) * n, (1.0,) * n)
    ul_axes = [tuple(g * center.ul_weights[t] for g in base) for t in range(1, n)]
    dl_axes = [tuple(g * center.dl_weights[t] for g in base) for t in range(1, n)]

    best = None
    runner_up = -math.inf
    evaluations = 0
    for dl_tail in itertools.product(*dl_axes):
        dl = (1.0,) + dl_tail
        for ul_tail in itertools.product(*ul_axes):
            value = _utility(s, (1.0,) + ul_tail, dl, "FD_DUA")
            evaluations += 1
            if best is None or value > best[0]:
                if best is not None:
                    runner_up = best[0]
                best = (value, (1.0,) + ul_tail, dl)
            elif value > runner_up:
                runner_up = value

    cua_best = None
    for dl_tail in itertools.product(*dl_axes):
        weights = (1.0,) + dl_tail
        value = _utility(s, weights, weights, "FD_CUA")
        evaluations += 1
        if cua_best is None or value > cua_best[0]:
            cua_best = (value, weights)

    gap = best[0] - runner_up if math.isfinite(runner_up) else 0.0
    return OptimizationResult(
        assignment=WeightAssignment(_normalized(best[1]), _normalized(best[2])),
        utility=best[0],
        method="grid_search",
        evaluations=evaluations,
        runner_up_gap=gap,
        cua_assignment=WeightAssignment(_normalized(cua_best[1]), _normalized(cua_best[1])),
        cua_utility=cua_best[0],
    )
