"""Plant economics: reward of a halt decision and its closed-form quantities.

A plant emits M tons of CO2 per trading day and earns P currency units per
ton emitted.  Halting production at day tau keeps the profit earned so far
and sells the unused allowance at the horizon price, giving the reward
M*P*tau + M*Y_T*(T - tau).  An optional upgrade switches (M, P) to new
values from a given trading day on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .gbm import GbmParams


@dataclass(frozen=True)
class Upgrade:
    """A one-off technical upgrade changing the plant's (M, P)."""

    effective_day: float
    new_unit_profit: float  # P after the upgrade
    new_emission_rate: float  # M after the upgrade

    def __post_init__(self):
        if not (self.new_unit_profit > 0):
            raise ConfigError("upgraded unit profit must be positive")
        if not (self.new_emission_rate > 0):
            raise ConfigError("upgraded emission rate must be positive")


@dataclass(frozen=True)
class PlantParams:
    """Emission rate M, unit-carbon profit P, horizon T, optional upgrade."""

    emission_rate: float  # M, tons CO2 per trading day
    unit_profit: float  # P, currency per ton CO2
    horizon: float  # T, trading days
    upgrade: Upgrade | None = None

    def __post_init__(self):
        if not (self.emission_rate > 0):
            raise ConfigError("emission rate M must be positive")
        if not (self.unit_profit > 0):
            raise ConfigError("unit profit P must be positive")
        if not (self.horizon >= 1):
            raise ConfigError("horizon T must be >= 1 trading day")
        if self.upgrade is not None:
            if not (0 <= self.upgrade.effective_day <= self.horizon):
                raise ConfigError("upgrade effective day must lie in [0, T]")

    def effective_params(self, t: float) -> tuple[float, float]:
        """(M, P) in force at day t, honoring the upgrade if one applies."""
        if self.upgrade is not None and t >= self.upgrade.effective_day:
            return self.upgrade.new_emission_rate, self.upgrade.new_unit_profit
        return self.emission_rate, self.unit_profit

    def max_unit_profit(self) -> float:
        """Largest P in force anywhere on the horizon (used for scaling)."""
        if self.upgrade is not None:
            return max(self.unit_profit, self.upgrade.new_unit_profit)
        return self.unit_profit

    def to_dict(self) -> dict:
        out = {"M": self.emission_rate, "P": self.unit_profit, "T": self.horizon}
        if self.upgrade is not None:
            out["upgrade"] = {
                "day": self.upgrade.effective_day,
                "P_new": self.upgrade.new_unit_profit,
                "M_new": self.upgrade.new_emission_rate,
            }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PlantParams":
        try:
            upgrade = None
            if "upgrade" in data and data["upgrade"] is not None:
                u = data["upgrade"]
                upgrade = Upgrade(
                    effective_day=float(u["day"]),
                    new_unit_profit=float(u["P_new"]),
                    new_emission_rate=float(u["M_new"]),
                )
            return cls(
                emission_rate=float(data["M"]),
                unit_profit=float(data["P"]),
                horizon=float(data["T"]),
                upgrade=upgrade,
            )
        except KeyError as exc:
            raise ConfigError(f"plant config missing field {exc}") from exc


def reward(plant: PlantParams, tau: float, y_terminal: float) -> float:
    """Total profit of halting at day tau given terminal price y_terminal."""
    if not (0 <= tau <= plant.horizon):
        raise ConfigError(f"tau={tau} outside [0, {plant.horizon}]")
    m, p = plant.emission_rate, plant.unit_profit
    return m * p * tau + m * y_terminal * (plant.horizon - tau)


def immediate_value(plant: PlantParams, gbm: GbmParams, t: float, y: float) -> float:
    """Expected reward of halting right now at (t, y).

    Closed form: M*P*t + M*y*exp(mu*(T - t))*(T - t), with (M, P) the
    parameters in force at t.
    """
    if not (0 <= t <= plant.horizon):
        raise ConfigError(f"t={t} outside [0, {plant.horizon}]")
    m, p = plant.effective_params(t)
    remaining = plant.horizon - t
    return m * p * t + m * y * math.exp(gbm.mu * remaining) * remaining


def lower_bound(plant: PlantParams, gbm: GbmParams, t: float) -> float:
    """Price level P*exp(-mu*(T - t)) below which continuing is always optimal.

    Every stopping price, and hence the free boundary, lies at or above it.
    """
    _, p = plant.effective_params(t)
    return p * math.exp(-gbm.mu * (plant.horizon - t))
