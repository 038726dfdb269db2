"""Physically grounded reference intensity and two-way optical attenuation.

The reference model for a clear-weather return is

    intensity = reflectance * cos(incidence) / range

clamped into the normalized [0, 1] band, and adverse weather multiplies it
by the two-way Beer-Lambert factor exp(-2 * alpha * range).  Range is
metric (meters) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .errors import NonPositiveRangeError, RealityGenError
from .projection import RangeImage

ArrayLike = Union[float, np.ndarray]


class Weather(Enum):
    CLEAR = "clear"
    RAIN = "rain"
    SNOW = "snow"


@dataclass(frozen=True)
class AttenuationParams:
    """Extinction coefficient (1/m) of the medium for a weather condition."""

    alpha: float = 0.0
    weather: Weather = Weather.CLEAR

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.weather is Weather.CLEAR and self.alpha != 0.0:
            raise ValueError("clear weather implies alpha == 0")


@dataclass
class MaterialTable:
    """Semantic class id -> material reflectance in (0, 1]."""

    reflectance: Mapping[int, float] = field(default_factory=dict)
    default_reflectance: float = 0.3

    def __post_init__(self) -> None:
        values = list(self.reflectance.values()) + [self.default_reflectance]
        for v in values:
            if not (0.0 < v <= 1.0):
                raise ValueError(f"reflectance {v} outside (0, 1]")

    def lookup(self, class_ids: np.ndarray) -> np.ndarray:
        """Vectorized reflectance lookup with default fallback."""
        ids = np.asarray(class_ids)
        out = np.full(ids.shape, self.default_reflectance, dtype=np.float64)
        for cid, refl in self.reflectance.items():
            out[ids == cid] = refl
        return out

    def get(self, class_id: int) -> float:
        return self.reflectance.get(int(class_id), self.default_reflectance)


def load_material_table(path) -> MaterialTable:
    """Parse a plain-text ``class_id = reflectance`` config.

    Blank lines and ``#`` comments are skipped; the key ``default`` sets
    the fallback reflectance.
    """
    table: dict[int, float] = {}
    default = 0.3
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise RealityGenError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        try:
            refl = float(value)
        except ValueError:
            raise RealityGenError(f"{path}:{lineno}: bad reflectance {value!r}") from None
        if key == "default":
            default = refl
        else:
            table[int(key)] = refl
    return MaterialTable(reflectance=table, default_reflectance=default)


def default_material_table() -> MaterialTable:
    """The SemanticKITTI reflectance table shipped with the package."""
    ref = resources.files("realitygen").joinpath("data/semantickitti_reflectance.cfg")
    with resources.as_file(ref) as path:
        return load_material_table(path)


def physics_intensity(range_m: ArrayLike, cos_incidence: ArrayLike,
                      reflectance: ArrayLike) -> ArrayLike:
    """Reference return intensity reflectance * cos(theta) / range, clamped to [0, 1].

    Raises NonPositiveRangeError when any range is <= 0.
    """
    r = np.asarray(range_m, dtype=np.float64)
    if np.any(r <= 0):
        raise NonPositiveRangeError("range must be > 0")
    raw = np.asarray(reflectance, dtype=np.float64) * np.asarray(
        cos_incidence, dtype=np.float64
    ) / r
    out = np.clip(raw, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def attenuate(intensity: ArrayLike, range_m: ArrayLike,
              params: AttenuationParams) -> ArrayLike:
    """Two-way Beer-Lambert attenuation: intensity * exp(-2 * alpha * range)."""
    out = np.asarray(intensity, dtype=np.float64) * np.exp(
        -2.0 * params.alpha * np.asarray(range_m, dtype=np.float64)
    )
    return float(out) if out.ndim == 0 else out


def reference_image(image: RangeImage, table: MaterialTable | None,
                    params: AttenuationParams) -> RangeImage:
    """Replace the intensity channel with the attenuated physics reference.

    Reflectance comes from the image's reflectance channel (fill it with
    ``projection.compute_reflectance``; ``table`` is accepted for callers
    that carry one alongside the image but the channel is authoritative).
    Unmasked pixels stay 0.
    """
    image.require("range", "incidence", "reflectance", "mask")
    occ = image.occupancy
    plane = np.zeros((image.height, image.width), dtype=np.float32)
    metric_range = image.range[occ].astype(np.float64) * image.profile.max_range
    ref = physics_intensity(
        metric_range,
        image.incidence[occ].astype(np.float64),
        image.reflectance[occ].astype(np.float64),
    )
    plane[occ] = attenuate(ref, metric_range, params).astype(np.float32)
    return image.replace_channels(intensity=plane)
