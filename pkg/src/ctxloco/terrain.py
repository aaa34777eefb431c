"""Terrain physical properties, domain-randomized sampling, and the
qualitative five-grade scale used by the language side of the system.

The five physical properties live in fixed ranges; four of them
(restitution, lateral friction, stiffness, damping) additionally carry a
qualitative grade from VERY_LOW to VERY_HIGH. Rolling friction has no
grade of its own: when converting grades back to physics it is coupled to
the friction grade.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields

from .rng import RandomStream

# (lo, hi) per property, in the fixed sampling order.
RANGES: dict[str, tuple[float, float]] = {
    "restitution": (0.0, 0.2),
    "lateral_friction": (0.0, 1.0),
    "rolling_friction": (2.0e4, 1.6e5),
    "stiffness": (0.0, 1.0),
    "damping": (0.0, 0.5),
}

N_LEVELS = 5


@dataclass(frozen=True)
class TerrainParams:
    """Physical surface properties, each constrained to its known range."""

    restitution: float
    lateral_friction: float
    rolling_friction: float
    stiffness: float
    damping: float

    def __post_init__(self):
        for f in fields(self):
            lo, hi = RANGES[f.name]
            v = getattr(self, f.name)
            if not (lo <= v <= hi):
                raise ValueError(f"{f.name}={v!r} outside [{lo}, {hi}]")

    def to_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "TerrainParams":
        return cls(**{f.name: float(data[f.name]) for f in fields(cls)})

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (
            self.restitution,
            self.lateral_friction,
            self.rolling_friction,
            self.stiffness,
            self.damping,
        )


class PropertyLevel(enum.IntEnum):
    """Ordered qualitative grade of one terrain property."""

    VERY_LOW = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3
    VERY_HIGH = 4

    @property
    def token(self) -> str:
        """Serialization token, e.g. ``VERY_LOW``."""
        return self.name

    @property
    def phrase(self) -> str:
        """Lowercase English phrase, e.g. ``very low``."""
        return self.name.replace("_", " ").lower()

    def shifted(self, delta: int) -> "PropertyLevel":
        """Move up/down the scale, saturating at the extremes."""
        return PropertyLevel(min(N_LEVELS - 1, max(0, int(self) + delta)))

    @classmethod
    def from_token(cls, token: str) -> "PropertyLevel":
        return cls[token.strip().upper()]


# Properties that carry a qualitative grade, in canonical block order.
GRADED_PROPERTIES = ("restitution", "friction", "stiffness", "damping")

# Graded name -> physical field whose range defines the bins.
_GRADED_FIELD = {
    "restitution": "restitution",
    "friction": "lateral_friction",
    "stiffness": "stiffness",
    "damping": "damping",
}


@dataclass(frozen=True)
class PropertyLevels:
    """Qualitative grades of the four described properties."""

    restitution: PropertyLevel
    friction: PropertyLevel
    stiffness: PropertyLevel
    damping: PropertyLevel

    def as_tuple(self) -> tuple[PropertyLevel, ...]:
        return (self.restitution, self.friction, self.stiffness, self.damping)

    def to_dict(self) -> dict[str, str]:
        return {name: getattr(self, name).token for name in GRADED_PROPERTIES}

    @classmethod
    def from_dict(cls, data: dict) -> "PropertyLevels":
        return cls(**{n: PropertyLevel.from_token(data[n]) for n in GRADED_PROPERTIES})

    @classmethod
    def uniform(cls, level: PropertyLevel) -> "PropertyLevels":
        return cls(level, level, level, level)


def sample_terrain(stream: RandomStream) -> TerrainParams:
    """Draw one terrain uniformly, consuming the stream in fixed field order."""
    values = {}
    for name in ("restitution", "lateral_friction", "rolling_friction", "stiffness", "damping"):
        lo, hi = RANGES[name]
        values[name] = stream.uniform(lo, hi)
    return TerrainParams(**values)


def _bin_index(value: float, lo: float, hi: float) -> int:
    # Equal-width bins, half-open except the top bin which absorbs hi.
    width = (hi - lo) / N_LEVELS
    idx = int((value - lo) / width)
    return min(idx, N_LEVELS - 1)


def quantize(params: TerrainParams) -> PropertyLevels:
    """Grade the four described properties by equal-width binning."""
    graded = {}
    for name, field in _GRADED_FIELD.items():
        lo, hi = RANGES[field]
        graded[name] = PropertyLevel(_bin_index(getattr(params, field), lo, hi))
    return PropertyLevels(**graded)


def _bin_midpoint(level: PropertyLevel, lo: float, hi: float) -> float:
    width = (hi - lo) / N_LEVELS
    return lo + (int(level) + 0.5) * width


def levels_to_params(levels: PropertyLevels) -> TerrainParams:
    """Invert grades to physics: bin midpoints, rolling friction coupled to
    the friction grade."""
    values = {}
    for name, field in _GRADED_FIELD.items():
        lo, hi = RANGES[field]
        values[field] = _bin_midpoint(getattr(levels, name), lo, hi)
    lo, hi = RANGES["rolling_friction"]
    values["rolling_friction"] = _bin_midpoint(levels.friction, lo, hi)
    return TerrainParams(**values)


_DESCRIPTION_TEMPLATE = (
    "This environment has {restitution} restitution when collision, "
    "{friction} friction, {stiffness} stiffness level, and {damping} damping."
)


def describe_low_level(levels: PropertyLevels) -> str:
    """Render the canonical one-sentence description of graded terrain."""
    return _DESCRIPTION_TEMPLATE.format(
        restitution=levels.restitution.phrase,
        friction=levels.friction.phrase,
        stiffness=levels.stiffness.phrase,
        damping=levels.damping.phrase,
    )


def all_level_combinations():
    """Iterate all 5^4 = 625 PropertyLevels combinations."""
    for r in PropertyLevel:
        for f in PropertyLevel:
            for s in PropertyLevel:
                for d in PropertyLevel:
                    yield PropertyLevels(r, f, s, d)
