"""Scenario configuration: tiers, channel, power control, pairwise distances.

A scenario file is a single JSON document with dB/dBm/per-km2 user units:

    {
      "tiers": [{"density_per_km2": ..., "bs_power_dbm": ...,
                 "sensitivity_dbm": ..., "sic_bs_db": ...,
                 "ul_weight": ..., "dl_weight": ...}, ...],
      "channel": {"alpha": ..., "alpha_b": ..., "alpha_u": ...,
                  "gain_db": ..., "gain_b_db": ..., "gain_u_db": ...,
                  "noise_dbm": ...},
      "power_control": {"epsilon": ..., "p_max_dbm": ..., "sic_ue_db": ...},
      "pair_corr": {"d_o_m": ..., "d_b_m": ..., "d_u_m": ..., "beta_b": ...},
      "thresholds": {"tau_dl_db": ..., "tau_ul_db": ...}
    }

`validate` converts everything to SI linear units once (watts, meters,
points per m^2, dimensionless ratios) and checks every model invariant with
an error naming the offending field. SIC entries are capabilities in dB and
are stored as mean residual gains sigma = 10^(-x/10). Two sentinels are
accepted: `p_max_dbm` may be the string "inf" (no transmit-power cap) and
`noise_dbm` may be the string "-inf" (noise-free analysis).

Association weights are scale free, so the validator divides them through by
the first tier's values; only the ratios survive into the engine. Tier order
in the file is the user's reporting order. The closed forms additionally
require tiers sorted by mu_k = U_k/D_k ascending, which `normalize_tier_order`
produces together with the permutation needed to map results back.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

from .mathkit import db_to_linear, dbm_to_watts

__all__ = [
    "TierParams",
    "ChannelParams",
    "PowerControlParams",
    "PairCorrelationParams",
    "Thresholds",
    "Scenario",
    "validate",
    "load_scenario",
    "bundled_scenario_path",
    "list_bundled_scenarios",
    "normalize_tier_order",
    "restore_user_order",
    "scenario_to_dict",
    "scenario_from_dict",
]


@dataclass(frozen=True)
class TierParams:
    """Per-tier constants, all SI linear.

    density is in points per m^2, bs_power and sensitivity in watts,
    si_mean_bs is the mean residual self-interference gain of this tier's
    BSs (dimensionless), and ul_weight/dl_weight are the association scale
    factors U_k and D_k.
    """

    density: float
    bs_power: float
    sensitivity: float
    si_mean_bs: float
    ul_weight: float
    dl_weight: float

    @property
    def mu(self) -> float:
        """Association ratio mu_k = U_k / D_k used to order tiers."""
        return self.ul_weight / self.dl_weight


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss exponents and gains per link type, plus noise power.

    alpha/gain cover BS-UE links, alpha_b/gain_b BS-BS links and
    alpha_u/gain_u UE-UE links. Gains are dimensionless linear, noise is
    in watts.
    """

    alpha: float
    alpha_b: float
    alpha_u: float
    gain: float
    gain_b: float
    gain_u: float
    noise: float


@dataclass(frozen=True)
class PowerControlParams:
    """Uplink fractional power control: factor epsilon, cap p_max in watts
    (math.inf for no cap), and mean residual UE self-interference gain."""

    epsilon: float
    p_max: float
    si_mean_ue: float


@dataclass(frozen=True)
class PairCorrelationParams:
    """Minimum pairwise distances in meters (serving UE-BS d_o, BS-BS d_b,
    UE-UE d_u) and the BS repulsion parameter beta_b."""

    d_o: float
    d_b: float
    d_u: float
    beta_b: float


@dataclass(frozen=True)
class Thresholds:
    """Linear SINR thresholds; the matching rate targets are ln(1 + tau)."""

    tau_dl: float
    tau_ul: float


@dataclass(frozen=True)
class Scenario:
    """A validated, immutable network configuration in SI linear units."""

    tiers: tuple[TierParams, ...]
    channel: ChannelParams
    power_control: PowerControlParams
    pair_corr: PairCorrelationParams
    thresholds: Thresholds

    def __hash__(self) -> int:
        # Scenarios key several memoized closed forms, so the recursive
        # field hash is computed once and stashed on the instance.
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash(
                (self.tiers, self.channel, self.power_control, self.pair_corr, self.thresholds)
            )
            object.__setattr__(self, "_hash", cached)
        return cached

    @property
    def num_tiers(self) -> int:
        return len(self.tiers)

    def mu_values(self) -> tuple[float, ...]:
        """Association ratios mu_k = U_k/D_k in the scenario's tier order."""
        return tuple(t.mu for t in self.tiers)


def _require(condition: bool, field: str, constraint: str) -> None:
    if not condition:
        raise ValueError(f"{field}: {constraint}")


def _number(raw: Mapping[str, Any], section: str, key: str) -> float:
    if key not in raw:
        raise ValueError(f"{section}.{key}: missing required field")
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{section}.{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{section}.{key}: must be finite, got {value!r}")
    return value


def _section(raw: Mapping[str, Any], key: str, allowed: Sequence[str]) -> Mapping[str, Any]:
    if key not in raw:
        raise ValueError(f"{key}: missing required section")
    section = raw[key]
    if not isinstance(section, Mapping):
        raise ValueError(f"{key}: expected an object")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ValueError(f"{key}.{unknown[0]}: unknown field")
    return section


_TIER_KEYS = (
    "density_per_km2",
    "bs_power_dbm",
    "sensitivity_dbm",
    "sic_bs_db",
    "ul_weight",
    "dl_weight",
)
_TOP_KEYS = ("tiers", "channel", "power_control", "pair_corr", "thresholds")


def _parse_tier(raw: Mapping[str, Any], label: str) -> TierParams:
    if not isinstance(raw, Mapping):
        raise ValueError(f"{label}: expected an object")
    unknown = sorted(set(raw) - set(_TIER_KEYS))
    if unknown:
        raise ValueError(f"{label}.{unknown[0]}: unknown field")
    density_km2 = _number(raw, label, "density_per_km2")
    _require(density_km2 > 0.0, f"{label}.density_per_km2", "density must be positive")
    sic_db = _number(raw, label, "sic_bs_db")
    ul_weight = _number(raw, label, "ul_weight")
    _require(ul_weight > 0.0, f"{label}.ul_weight", "association weight must be positive")
    dl_weight = _number(raw, label, "dl_weight")
    _require(dl_weight > 0.0, f"{label}.dl_weight", "association weight must be positive")
    return TierParams(
        density=density_km2 * 1e-6,
        bs_power=dbm_to_watts(_number(raw, label, "bs_power_dbm")),
        sensitivity=dbm_to_watts(_number(raw, label, "sensitivity_dbm")),
        si_mean_bs=db_to_linear(-sic_db),
        ul_weight=ul_weight,
        dl_weight=dl_weight,
    )


def _parse_channel(raw: Mapping[str, Any]) -> ChannelParams:
    section = _section(
        raw,
        "channel",
        ("alpha", "alpha_b", "alpha_u", "gain_db", "gain_b_db", "gain_u_db", "noise_dbm"),
    )
    exponents = {}
    for key in ("alpha", "alpha_b", "alpha_u"):
        value = _number(section, "channel", key)
        _require(value > 2.0, f"channel.{key}", "path-loss exponent must exceed 2")
        exponents[key] = value
    noise_raw = section.get("noise_dbm")
    if noise_raw == "-inf":
        noise = 0.0
    else:
        noise = dbm_to_watts(_number(section, "channel", "noise_dbm"))
    return ChannelParams(
        alpha=exponents["alpha"],
        alpha_b=exponents["alpha_b"],
        alpha_u=exponents["alpha_u"],
        gain=db_to_linear(_number(section, "channel", "gain_db")),
        gain_b=db_to_linear(_number(section, "channel", "gain_b_db")),
        gain_u=db_to_linear(_number(section, "channel", "gain_u_db")),
        noise=noise,
    )


def _parse_power_control(raw: Mapping[str, Any]) -> PowerControlParams:
    section = _section(raw, "power_control", ("epsilon", "p_max_dbm", "sic_ue_db"))
    epsilon = _number(section, "power_control", "epsilon")
    _require(0.0 <= epsilon <= 1.0, "power_control.epsilon", "power control factor must lie in [0, 1]")
    p_max_raw = section.get("p_max_dbm")
    if p_max_raw == "inf":
        p_max = math.inf
    else:
        p_max = dbm_to_watts(_number(section, "power_control", "p_max_dbm"))
    sic_ue_db = _number(section, "power_control", "sic_ue_db")
    return PowerControlParams(
        epsilon=epsilon,
        p_max=p_max,
        si_mean_ue=db_to_linear(-sic_ue_db),
    )


def _parse_pair_corr(raw: Mapping[str, Any]) -> PairCorrelationParams:
    section = _section(raw, "pair_corr", ("d_o_m", "d_b_m", "d_u_m", "beta_b"))
    distances = {}
    for key in ("d_o_m", "d_b_m", "d_u_m"):
        value = _number(section, "pair_corr", key)
        _require(value >= 0.0, f"pair_corr.{key}", "minimum distance must be nonnegative")
        distances[key] = value
    beta_b = _number(section, "pair_corr", "beta_b")
    _require(beta_b > 0.0, "pair_corr.beta_b", "repulsion parameter must be positive")
    return PairCorrelationParams(
        d_o=distances["d_o_m"],
        d_b=distances["d_b_m"],
        d_u=distances["d_u_m"],
        beta_b=beta_b,
    )


def _parse_thresholds(raw: Mapping[str, Any]) -> Thresholds:
    section = _section(raw, "thresholds", ("tau_dl_db", "tau_ul_db"))
    return Thresholds(
        tau_dl=db_to_linear(_number(section, "thresholds", "tau_dl_db")),
        tau_ul=db_to_linear(_number(section, "thresholds", "tau_ul_db")),
    )


def validate(raw: Mapping[str, Any]) -> Scenario:
    """Build a Scenario from a parsed scenario document.

    Converts user units to SI linear, checks every invariant, and rescales
    the association weights so the first tier has U_1 = D_1 = 1.

    Raises:
        ValueError: naming the offending field and the violated constraint.
    """
    if not isinstance(raw, Mapping):
        raise ValueError("scenario: expected a JSON object at the top level")
    unknown = sorted(set(raw) - set(_TOP_KEYS))
    if unknown:
        raise ValueError(f"{unknown[0]}: unknown section")
    if "tiers" not in raw:
        raise ValueError("tiers: missing required section")
    tiers_raw = raw["tiers"]
    if not isinstance(tiers_raw, Sequence) or isinstance(tiers_raw, (str, bytes)):
        raise ValueError("tiers: expected an array of tier objects")
    if len(tiers_raw) == 0:
        raise ValueError("tiers: at least one tier is required")
    tiers = [_parse_tier(entry, f"tiers[{idx}]") for idx, entry in enumerate(tiers_raw)]
    u_base = tiers[0].ul_weight
    d_base = tiers[0].dl_weight
    tiers = [
        replace(t, ul_weight=t.ul_weight / u_base, dl_weight=t.dl_weight / d_base)
        for t in tiers
    ]
    scenario = Scenario(
        tiers=tuple(tiers),
        channel=_parse_channel(raw),
        power_control=_parse_power_control(raw),
        pair_corr=_parse_pair_corr(raw),
        thresholds=_parse_thresholds(raw),
    )
    residual = scenario.channel.alpha * (1.0 - scenario.power_control.epsilon)
    if residual >= 4.0:
        warnings.warn(
            "alpha * (1 - epsilon) >= 4: interference moments need a positive "
            "UE pairwise minimum distance d_o to stay finite",
            stacklevel=2,
        )
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario JSON file."""
    with open(path, "r", encoding="utf-8") as handle:
        raw = json.load(handle)
    return validate(raw)


def bundled_scenario_path(name: str) -> Path:
    """Resolve the path of a scenario file shipped with the package."""
    candidate = Path(str(resources.files("fdnet").joinpath("scenarios", f"{name}.json")))
    if not candidate.is_file():
        known = ", ".join(list_bundled_scenarios())
        raise ValueError(f"unknown bundled scenario {name!r}; available: {known}")
    return candidate


def list_bundled_scenarios() -> list[str]:
    """Names of the scenario files shipped with the package."""
    folder = Path(str(resources.files("fdnet").joinpath("scenarios")))
    return sorted(p.stem for p in folder.glob("*.json"))


def normalize_tier_order(s: Scenario) -> tuple[Scenario, tuple[int, ...]]:
    """Sort tiers by mu_k = U_k/D_k ascending, stably.

    Returns the reordered scenario and the permutation `perm` such that
    reordered.tiers[i] == s.tiers[perm[i]]. Per-tier results computed in
    the normalized order can be mapped back with `restore_user_order`.
    """
    perm = tuple(sorted(range(s.num_tiers), key=lambda k: s.tiers[k].mu))
    reordered = replace(s, tiers=tuple(s.tiers[k] for k in perm))
    return reordered, perm


def restore_user_order(values: Sequence[Any], perm: Sequence[int]) -> list[Any]:
    """Invert `normalize_tier_order`: values[i] belongs to user tier perm[i]."""
    restored: list[Any] = [None] * len(perm)
    for position, user_index in enumerate(perm):
        restored[user_index] = values[position]
    return restored


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    """Serialize a Scenario to a plain dict of its SI-linear fields."""
    return asdict(s)


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    """Rebuild a Scenario from `scenario_to_dict` output, re-checking
    invariants. Field values round-trip bit exactly."""
    try:
        tiers = tuple(TierParams(**entry) for entry in data["tiers"])
        s = Scenario(
            tiers=tiers,
            channel=ChannelParams(**data["channel"]),
            power_control=PowerControlParams(**data["power_control"]),
            pair_corr=PairCorrelationParams(**data["pair_corr"]),
            thresholds=Thresholds(**data["thresholds"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"scenario dict is malformed: {exc}") from exc
    _check_linear_invariants(s)
    return s


def _check_linear_invariants(s: Scenario) -> None:
    if s.num_tiers < 1:
        raise ValueError("tiers: at least one tier is required")
    for idx, t in enumerate(s.tiers):
        label = f"tiers[{idx}]"
        _require(t.density > 0.0, f"{label}.density", "density must be positive")
        _require(t.bs_power > 0.0, f"{label}.bs_power", "power must be positive")
        _require(t.sensitivity > 0.0, f"{label}.sensitivity", "received power target must be positive")
        _require(t.si_mean_bs >= 0.0, f"{label}.si_mean_bs", "mean SI gain must be nonnegative")
        _require(t.ul_weight > 0.0, f"{label}.ul_weight", "association weight must be positive")
        _require(t.dl_weight > 0.0, f"{label}.dl_weight", "association weight must be positive")
    for key in ("alpha", "alpha_b", "alpha_u"):
        _require(getattr(s.channel, key) > 2.0, f"channel.{key}", "path-loss exponent must exceed 2")
    for key in ("gain", "gain_b", "gain_u"):
        _require(getattr(s.channel, key) > 0.0, f"channel.{key}", "gain must be positive")
    _require(s.channel.noise >= 0.0, "channel.noise", "noise power must be nonnegative")
    _require(
        0.0 <= s.power_control.epsilon <= 1.0,
        "power_control.epsilon",
        "power control factor must lie in [0, 1]",
    )
    _require(s.power_control.p_max > 0.0, "power_control.p_max", "power cap must be positive")
    _require(s.power_control.si_mean_ue >= 0.0, "power_control.si_mean_ue", "mean SI gain must be nonnegative")
    for key in ("d_o", "d_b", "d_u"):
        _require(getattr(s.pair_corr, key) >= 0.0, f"pair_corr.{key}", "minimum distance must be nonnegative")
    _require(s.pair_corr.beta_b > 0.0, "pair_corr.beta_b", "repulsion parameter must be positive")
    _require(s.thresholds.tau_dl > 0.0, "thresholds.tau_dl", "SINR threshold must be positive")
    _require(s.thresholds.tau_ul > 0.0, "thresholds.tau_ul", "SINR threshold must be positive")
