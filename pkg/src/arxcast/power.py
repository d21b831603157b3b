"""Linear weather-to-power map for a PV array.

    P = eta * S * I * (1 - c * (T - t_ref))

The default thermal coefficient ``c = 0.05 1/K`` is kept as published even
though typical crystalline modules derate by about 0.005 1/K; pass
``temp_coeff=0.005`` for the conventional value.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PlantConfig:
    eta: float = 0.16
    area_m2: float = 1660.0
    temp_coeff: float = 0.05
    t_ref: float = 298.15
    floor_at_zero: bool = True

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if not self.area_m2 > 0:
            raise ValueError(f"area_m2 must be positive, got {self.area_m2}")
        if not self.t_ref > 0:
            raise ValueError(f"t_ref must be positive, got {self.t_ref}")

    @classmethod
    def from_dict(cls, d: dict | None) -> PlantConfig:
        d = dict(d or {})
        unknown = set(d) - {"eta", "area_m2", "temp_coeff", "t_ref", "floor_at_zero"}
        if unknown:
            raise ValueError(f"unknown plant key(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {"eta": self.eta, "area_m2": self.area_m2, "temp_coeff": self.temp_coeff,
                "t_ref": self.t_ref, "floor_at_zero": self.floor_at_zero}

    @property
    def rated_w(self) -> float:
        """Output at 1000 W/m2 and the reference temperature."""
        return self.eta * self.area_m2 * 1000.0


def power(plant: PlantConfig, irradiance: float, temperature: float) -> float:
    """Array output in W for one (irradiance W/m2, temperature K) pair."""
    p = plant.eta * plant.area_m2 * irradiance * (1.0 - plant.temp_coeff * (temperature - plant.t_ref))
    if plant.floor_at_zero and p < 0:
        return 0.0
    return float(p)


def power_array(plant: PlantConfig, irradiance, temperature) -> np.ndarray:
    I = np.asarray(irradiance, dtype=float)
    T = np.asarray(temperature, dtype=float)
    p = plant.eta * plant.area_m2 * I * (1.0 - plant.temp_coeff * (T - plant.t_ref))
    if plant.floor_at_zero:
        p = np.maximum(p, 0.0)
    return p


def power_series(plant: PlantConfig, weather: Iterable[tuple[float, float]]) -> list[float]:
    return [power(plant, i, t) for i, t in weather]
