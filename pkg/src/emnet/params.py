"""Parameter and node-source definitions shared by the whole simulator.

All tunables live in :class:`SimulationParams`. Defaults follow the base
configuration used throughout: 200x200 lattice, 5% population, 15-degree
sensor angle, sensor offset 15 cells, 45-degree rotation, deposit 5,
damping 0.1, periodic boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration value; message carries the offending field path."""


Boundary = Literal["periodic", "fixed"]

# Short names accepted by steering commands and schedule actions.
PARAM_SHORT_NAMES = {
    "SA": "sensor_angle_deg",
    "RA": "rotation_angle_deg",
    "SO": "sensor_offset",
    "SW": "sensor_width",
    "SS": "step_size",
    "depT": "deposit",
    "damp": "damp",
}


@dataclass(frozen=True)
class SimulationParams:
    """Knobs of the agent/trail engine.

    Angles are degrees; heading 0 points along +x and positive angles turn
    counter-clockwise ("turn right" subtracts the rotation angle). Lengths
    are lattice cells and trail quantities are arbitrary trail units.
    """

    width: int = 200
    height: int = 200
    population_pct: float = 5.0
    sensor_angle_deg: float = 15.0
    sensor_offset: float = 15.0
    rotation_angle_deg: float = 45.0
    sensor_width: int = 1
    step_size: float = 1.0
    deposit: float = 5.0
    damp: float = 0.1
    boundary: Boundary = "periodic"
    # On a fixed boundary, agents whose sensors poke outside the lattice turn
    # right unconditionally; disable to reproduce corner adhesion.
    edge_turn_right: bool = True
    # Multiplier turning node-source weights into trail units injected per step.
    node_stimulus_scale: float = 100.0
    # Trail value mapped to white in exported frames (display only).
    trail_display_cap: float = 20.0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        def check(cond: bool, name: str, msg: str) -> None:
            if not cond:
                raise ConfigError(f"params.{name}: {msg}")

        check(int(self.width) == self.width and self.width >= 3, "width", "must be an integer >= 3")
        check(int(self.height) == self.height and self.height >= 3, "height", "must be an integer >= 3")
        check(0 < self.population_pct <= 100, "population_pct", "must be in (0, 100]")
        check(0 <= self.sensor_angle_deg < 180, "sensor_angle_deg", "must be in [0, 180)")
        check(0 <= self.rotation_angle_deg < 360, "rotation_angle_deg", "must be in [0, 360)")
        check(self.sensor_offset > 0, "sensor_offset", "must be > 0")
        check(
            int(self.sensor_width) == self.sensor_width
            and self.sensor_width >= 1
            and self.sensor_width % 2 == 1,
            "sensor_width",
            "must be an odd integer >= 1",
        )
        check(self.step_size > 0, "step_size", "must be > 0")
        check(self.deposit > 0, "deposit", "must be > 0")
        check(0 <= self.damp < 1, "damp", "must be in [0, 1)")
        check(self.boundary in ("periodic", "fixed"), "boundary", "must be 'periodic' or 'fixed'")
        check(self.node_stimulus_scale > 0, "node_stimulus_scale", "must be > 0")
        check(self.trail_display_cap > 0, "trail_display_cap", "must be > 0")

    def with_updates(self, **changes) -> "SimulationParams":
        """Return a validated copy with the given fields replaced."""
        return replace(self, **changes)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def target_population(self) -> int:
        return int(round(self.population_pct / 100.0 * self.width * self.height))


def set_short_param(params: SimulationParams, name: str, value) -> SimulationParams:
    """Apply a short-named parameter update (SA, RA, SO, SW, SS, depT, damp)."""
    if name not in PARAM_SHORT_NAMES:
        raise ConfigError(f"params.{name}: unknown parameter name")
    fname = PARAM_SHORT_NAMES[name]
    if fname == "sensor_width":
        if not float(value).is_integer():
            raise ConfigError("params.sensor_width: must be an odd integer >= 1")
        value = int(value)
    return params.with_updates(**{fname: value})


@dataclass
class NodeSource:
    """A small disc that feeds trail into the field every step."""

    id: int
    cx: int
    cy: int
    radius: int = 2
    weight: float = 0.05
    enabled: bool = True

    def validate(self, params: SimulationParams | None = None) -> None:
        if self.radius < 1:
            raise ConfigError(f"nodes[{self.id}].radius: must be >= 1")
        if self.weight <= 0:
            raise ConfigError(f"nodes[{self.id}].weight: must be > 0")
        if params is not None:
            if not (
                0 <= self.cx - self.radius
                and self.cx + self.radius < params.width
                and 0 <= self.cy - self.radius
                and self.cy + self.radius < params.height
            ):
                raise ConfigError(f"nodes[{self.id}]: disc does not fit inside the lattice")

    def disc_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer (xs, ys) of the disc: offsets with dx^2 + dy^2 <= radius^2.

        Cells are listed row-major (y then x), the order spawn placement uses.
        """
        r = self.radius
        ys, xs = [], []
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if dx * dx + dy * dy <= r * r:
                    xs.append(self.cx + dx)
                    ys.append(self.cy + dy)
        return np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64)
