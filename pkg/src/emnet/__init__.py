"""emnet: a deterministic multi-agent simulator of emergent transport networks.

Particle agents with offset chemosensors deposit and follow a diffusing
trail field. The emergent lanes minimise their own surface; small disc
"node sources" pin the network to a problem's terminals so it settles into
short connecting networks. Analysis tools turn trail fields into masks,
skeletons and length/cycle measures, with exact small-instance baselines
for comparison.
"""

from .params import ConfigError, NodeSource, SimulationParams
from .engine import (
    SimulationState,
    attempt_move,
    diffuse,
    init_population,
    inject_nodes,
    place_agents,
    sense,
    system_step,
    trail_checksum,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NodeSource",
    "SimulationParams",
    "SimulationState",
    "attempt_move",
    "diffuse",
    "init_population",
    "inject_nodes",
    "place_agents",
    "sense",
    "system_step",
    "trail_checksum",
    "__version__",
]
