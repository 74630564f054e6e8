"""Agent/trail stepping engine.

One system step is: shuffle the living agents into a random visitation
order, let each agent sense and then attempt a forward move (effects are
immediately visible to agents later in the order), add the node-source
stimuli to the trail field, diffuse the field, and advance the step counter.

Determinism contract
--------------------
All randomness flows through the single ``numpy.random.Generator`` held by
the state, in this fixed draw order:

* ``init_population``: one permutation over candidate cells, then one
  uniform heading in [0, 360) per agent in placement order.
* each ``system_step``: one permutation over the living agent ids, then per
  agent in visitation order at most two draws: a fair draw deciding the
  rotation sign when both lateral sensors exceed the front one, and a
  uniform re-orientation draw when the move is blocked.
* scenario-level draws (spawn headings, random removal) are documented in
  :mod:`emnet.scenarios`.

Identical (params, nodes, seed, command log) therefore reproduce the state
trajectory bit for bit. The numba kernels consume the same PCG64 stream as
the Python-side calls.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .params import ConfigError, NodeSource, SimulationParams

__all__ = [
    "SimulationState",
    "init_population",
    "place_agents",
    "sense",
    "attempt_move",
    "diffuse",
    "inject_nodes",
    "system_step",
    "spawn_agent",
    "remove_agent",
    "trail_checksum",
]

_DEG = math.pi / 180.0


@njit(cache=True)
def _sample_sensor(trail, px, py, sw, periodic, W, H):
    """Mean trail over the sw x sw block centred on the cell containing (px, py).

    Out-of-lattice cells read 0 on a fixed boundary; the divisor stays sw^2.
    """
    cx = int(math.floor(px))
    cy = int(math.floor(py))
    half = sw // 2
    acc = 0.0
    for by in range(cy - half, cy + half + 1):
        for bx in range(cx - half, cx + half + 1):
            if periodic:
                acc += trail[by % H, bx % W]
            elif 0 <= by < H and 0 <= bx < W:
                acc += trail[by, bx]
    return acc / (sw * sw)


@njit(cache=True)
def _sense_one(x, y, h, trail, sa, so, ra, sw, periodic, edge_turn_right, W, H, rng):
    """Return the agent's new heading after reading its three sensors.

    Sensors sit at offset ``so`` ahead of (x, y): left at h+sa, front at h,
    right at h-sa. On a fixed boundary with the edge rule active, any sensor
    point outside the lattice forces an unconditional right turn (no draw).
    """
    oob = False
    fl = 0.0
    f = 0.0
    fr = 0.0
    for s in range(3):
        if s == 0:
            ang = (h + sa) * _DEG
        elif s == 1:
            ang = h * _DEG
        else:
            ang = (h - sa) * _DEG
        px = x + so * math.cos(ang)
        py = y + so * math.sin(ang)
        if not periodic and (px < 0 or px >= W or py < 0 or py >= H):
            oob = True
            v = 0.0
        else:
            v = _sample_sensor(trail, px, py, sw, periodic, W, H)
        if s == 0:
            fl = v
        elif s == 1:
            f = v
        else:
            fr = v
    if not periodic and edge_turn_right and oob:
        return (h - ra) % 360.0
    if f > fl and f > fr:
        return h
    if f < fl and f < fr:
        if rng.random() < 0.5:
            return (h + ra) % 360.0
        return (h - ra) % 360.0
    if fl > fr:
        return (h + ra) % 360.0
    if fr > fl:
        return (h - ra) % 360.0
    return h


@njit(cache=True)
def _move_one(i, x, y, heading, occupancy, trail, ss, dep, periodic, W, H, rng):
    """Attempt one forward step; deposit on success, reorient on failure."""
    h = heading[i] * _DEG
    nx = x[i] + ss * math.cos(h)
    ny = y[i] + ss * math.sin(h)
    if periodic:
        nx = nx % W
        ny = ny % H
    elif nx < 0 or nx >= W or ny < 0 or ny >= H:
        heading[i] = rng.random() * 360.0
        return False
    ncx = int(math.floor(nx))
    ncy = int(math.floor(ny))
    ocx = int(math.floor(x[i]))
    ocy = int(math.floor(y[i]))
    if (ncx != ocx or ncy != ocy) and occupancy[ncy, ncx]:
        heading[i] = rng.random() * 360.0
        return False
    occupancy[ocy, ocx] = False
    occupancy[ncy, ncx] = True
    x[i] = nx
    y[i] = ny
    trail[ncy, ncx] += dep
    return True


@njit(cache=True)
def _agent_pass(order, x, y, heading, occupancy, trail,
                sa, so, ra, sw, ss, dep, periodic, edge_turn_right, W, H, rng):
    for k in range(order.shape[0]):
        i = order[k]
        heading[i] = _sense_one(
            x[i], y[i], heading[i], trail, sa, so, ra, sw,
            periodic, edge_turn_right, W, H, rng,
        )
        _move_one(i, x, y, heading, occupancy, trail, ss, dep, periodic, W, H, rng)


@njit(cache=True)
def _diffuse_into(src, tmp, dst, damp, periodic):
    """3x3 mean filter with damping; all reads come from ``src``.

    Separable two-pass form: row sums into ``tmp``, then column sums of the
    row sums. A fixed boundary treats outside cells as 0 but keeps the /9.
    """
    H, W = src.shape
    for yy in range(H):
        for xx in range(W):
            s = src[yy, xx]
            if periodic:
                s += src[yy, (xx - 1) % W] + src[yy, (xx + 1) % W]
            else:
                if xx > 0:
                    s += src[yy, xx - 1]
                if xx < W - 1:
                    s += src[yy, xx + 1]
            tmp[yy, xx] = s
    f = (1.0 - damp) / 9.0
    for yy in range(H):
        for xx in range(W):
            s = tmp[yy, xx]
            if periodic:
                s += tmp[(yy - 1) % H, xx] + tmp[(yy + 1) % H, xx]
            else:
                if yy > 0:
                    s += tmp[yy - 1, xx]
                if yy < H - 1:
                    s += tmp[yy + 1, xx]
            dst[yy, xx] = s * f


@dataclass
class SimulationState:
    """Everything one run mutates: agents, occupancy, trail, nodes, step, RNG.

    Agent arrays are slot-indexed; dead slots keep their last position but
    are excluded from occupancy and stepping. ``spawn_queue`` counts agents
    waiting for room at node sources.
    """

    params: SimulationParams
    nodes: list[NodeSource]
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    alive: np.ndarray
    occupancy: np.ndarray
    trail: np.ndarray
    rng: np.random.Generator
    step: int = 0
    spawn_queue: int = 0
    _tmp: np.ndarray = field(default=None, repr=False)
    _out: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self._tmp is None:
            self._tmp = np.zeros_like(self.trail)
        if self._out is None:
            self._out = np.zeros_like(self.trail)

    @property
    def population(self) -> int:
        return int(self.alive.sum())

    def alive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    def agent_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """(cx, cy) occupancy cells of the living agents, in slot order."""
        idx = self.alive_indices()
        return (np.floor(self.x[idx]).astype(np.int64),
                np.floor(self.y[idx]).astype(np.int64))


def make_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _empty_state(params: SimulationParams, nodes, rng, capacity: int) -> SimulationState:
    H, W = params.height, params.width
    return SimulationState(
        params=params,
        nodes=list(nodes),
        x=np.zeros(capacity),
        y=np.zeros(capacity),
        heading=np.zeros(capacity),
        alive=np.zeros(capacity, dtype=np.bool_),
        occupancy=np.zeros((H, W), dtype=np.bool_),
        trail=np.zeros((H, W)),
        rng=rng,
    )


def _place(state: SimulationState, slots: np.ndarray, cells_x: np.ndarray, cells_y: np.ndarray) -> None:
    """Drop agents at cell centres with fresh uniform headings (one draw each)."""
    state.x[slots] = cells_x + 0.5
    state.y[slots] = cells_y + 0.5
    state.heading[slots] = state.rng.uniform(0.0, 360.0, size=len(slots))
    state.alive[slots] = True
    state.occupancy[cells_y, cells_x] = True


def node_disc_cells(nodes, enabled_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """All disc cells of the given nodes in id order, duplicates removed."""
    seen = set()
    xs_all, ys_all = [], []
    for node in nodes:
        if enabled_only and not node.enabled:
            continue
        xs, ys = node.disc_cells()
        for xx, yy in zip(xs, ys):
            if (xx, yy) not in seen:
                seen.add((xx, yy))
                xs_all.append(xx)
                ys_all.append(yy)
    return np.asarray(xs_all, dtype=np.int64), np.asarray(ys_all, dtype=np.int64)


def init_population(
    params: SimulationParams,
    mode: str = "uniform_random",
    nodes: list[NodeSource] | None = None,
    rng: int | np.random.Generator = 0,
) -> SimulationState:
    """Create a fresh state with agents placed according to ``mode``.

    ``uniform_random`` and ``full_coverage`` scatter the whole target
    population over distinct random free cells. ``node_restricted`` fills
    (at most) the node disc cells and queues the remainder for gradual
    spawn-in by the foraging scenario.
    """
    if mode not in ("uniform_random", "node_restricted", "full_coverage"):
        raise ConfigError(f"init mode: unknown mode {mode!r}")
    nodes = list(nodes) if nodes else []
    for node in nodes:
        node.validate(params)
    generator = make_rng(rng)
    W, H = params.width, params.height
    target = params.target_population()
    if target <= 0:
        raise ConfigError("params.population_pct: target population is zero")
    if target > W * H:
        raise ConfigError("params.population_pct: target population exceeds lattice size")
    state = _empty_state(params, nodes, generator, target)

    if mode in ("uniform_random", "full_coverage"):
        cells = generator.permutation(W * H)[:target]
        _place(state, np.arange(target), cells % W, cells // W)
    else:
        if not nodes:
            raise ConfigError("nodes: node_restricted init needs at least one node")
        xs, ys = node_disc_cells(nodes)
        if target >= len(xs):
            placed = len(xs)
        else:
            placed = target
            pick = generator.permutation(len(xs))[:target]
            xs, ys = xs[pick], ys[pick]
        _place(state, np.arange(placed), xs[:placed], ys[:placed])
        state.spawn_queue = target - placed
    return state


def place_agents(
    params: SimulationParams,
    cells: np.ndarray,
    nodes: list[NodeSource] | None = None,
    rng: int | np.random.Generator = 0,
    headings: np.ndarray | None = None,
) -> SimulationState:
    """Hand-seeded state: agents at the given (n, 2) array of (cx, cy) cells.

    Headings default to one uniform draw per agent in the given order.
    """
    cells = np.asarray(cells, dtype=np.int64)
    generator = make_rng(rng)
    W, H = params.width, params.height
    cx, cy = cells[:, 0], cells[:, 1]
    if np.any((cx < 0) | (cx >= W) | (cy < 0) | (cy >= H)):
        raise ConfigError("cells: placement outside the lattice")
    if len({(a, b) for a, b in zip(cx.tolist(), cy.tolist())}) != len(cells):
        raise ConfigError("cells: duplicate placement cells")
    nodes = list(nodes) if nodes else []
    for node in nodes:
        node.validate(params)
    state = _empty_state(params, nodes, generator, len(cells))
    if headings is None:
        _place(state, np.arange(len(cells)), cx, cy)
    else:
        state.x[:] = cx + 0.5
        state.y[:] = cy + 0.5
        state.heading[:] = np.asarray(headings, dtype=float) % 360.0
        state.alive[:] = True
        state.occupancy[cy, cx] = True
    return state


def sense(state: SimulationState, agent: int) -> float:
    """New heading for one agent from its current sensor readings.

    Pure apart from the possible tie-break draw; the caller stores the result.
    """
    p = state.params
    return float(_sense_one(
        state.x[agent], state.y[agent], state.heading[agent], state.trail,
        float(p.sensor_angle_deg), float(p.sensor_offset), float(p.rotation_angle_deg),
        int(p.sensor_width), p.periodic, p.edge_turn_right,
        p.width, p.height, state.rng,
    ))


def attempt_move(state: SimulationState, agent: int) -> bool:
    """Move the agent one step forward if its target cell is free.

    On success the agent occupies the new cell and deposits trail there; on
    failure it keeps its cell, deposits nothing and draws a fresh heading.
    """
    p = state.params
    return bool(_move_one(
        agent, state.x, state.y, state.heading, state.occupancy, state.trail,
        float(p.step_size), float(p.deposit), p.periodic,
        p.width, p.height, state.rng,
    ))


def diffuse(trail: np.ndarray, damp: float, boundary: str = "periodic") -> np.ndarray:
    """Damped 3x3 mean filter of the field (pure; returns a new array)."""
    if not 0 <= damp < 1:
        raise ConfigError("params.damp: must be in [0, 1)")
    src = np.asarray(trail, dtype=float)
    tmp = np.empty_like(src)
    dst = np.empty_like(src)
    _diffuse_into(src, tmp, dst, float(damp), boundary == "periodic")
    return dst


def inject_nodes(trail: np.ndarray, nodes, params: SimulationParams) -> np.ndarray:
    """Add each enabled node's stimulus to its disc (pure; returns a new array)."""
    out = np.array(trail, dtype=float, copy=True)
    _inject_inplace(out, nodes, params)
    return out


def _inject_inplace(trail: np.ndarray, nodes, params: SimulationParams) -> None:
    for node in nodes:
        if not node.enabled:
            continue
        xs, ys = node.disc_cells()
        trail[ys, xs] += node.weight * params.node_stimulus_scale


def system_step(state: SimulationState) -> SimulationState:
    """Advance the whole simulation by one step (mutates and returns state)."""
    p = state.params
    order = state.rng.permutation(state.alive_indices())
    _agent_pass(
        order, state.x, state.y, state.heading, state.occupancy, state.trail,
        float(p.sensor_angle_deg), float(p.sensor_offset), float(p.rotation_angle_deg),
        int(p.sensor_width), float(p.step_size), float(p.deposit),
        p.periodic, p.edge_turn_right, p.width, p.height, state.rng,
    )
    _inject_inplace(state.trail, state.nodes, p)
    _diffuse_into(state.trail, state._tmp, state._out, float(p.damp), p.periodic)
    state.trail, state._out = state._out, state.trail
    state.step += 1
    return state


def spawn_agent(state: SimulationState, cx: int, cy: int) -> int:
    """Bring one queued agent to life at a free cell (lowest free slot).

    Consumes one uniform heading draw. Returns the slot index.
    """
    if state.occupancy[cy, cx]:
        raise ValueError(f"cell ({cx}, {cy}) is occupied")
    dead = np.flatnonzero(~state.alive)
    if len(dead) == 0:
        raise ValueError("no free agent slot")
    slot = int(dead[0])
    _place(state, np.asarray([slot]), np.asarray([cx]), np.asarray([cy]))
    return slot


def remove_agent(state: SimulationState, agent: int) -> None:
    """Kill one agent and free its occupancy cell."""
    if not state.alive[agent]:
        raise ValueError(f"agent {agent} is not alive")
    state.alive[agent] = False
    state.occupancy[int(math.floor(state.y[agent])), int(math.floor(state.x[agent]))] = False


def trail_checksum(trail: np.ndarray) -> str:
    """SHA-256 over the raw field bytes; the bit-identity test primitive."""
    return hashlib.sha256(np.ascontiguousarray(trail).tobytes()).hexdigest()
