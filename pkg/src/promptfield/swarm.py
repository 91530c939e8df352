"""Bounded 2-D collective: circular agents under damped point dynamics,
soft pairwise repulsion, and a bilinearly interpolated external field.

All agents update synchronously from the pre-step state, so one step is a
pure function of (world, field, config) and whole trajectories reproduce
bit for bit from a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .errors import ConfigError, NumericalError, PlacementError
from .p2i import VectorField
from .rng import SplitMix64, mix64

_TWO_PI = 2.0 * math.pi
_INV_2_64 = 1.0 / (1 << 64)


@dataclass(frozen=True)
class PhysicsConfig:
    n_agents: int = 50
    arena: float = 500.0
    steps: int = 500
    radius: float = 5.0
    damping: float = 0.9
    v_max: float = 5.0
    force_gain: float = 1.0
    repulse_radius: float = 12.0
    repulse_stiffness: float = 1.0

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        for name in ("arena", "radius", "v_max", "force_gain", "repulse_radius", "repulse_stiffness"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.damping <= 1.0:
            raise ConfigError("damping must be in [0, 1]")
        if self.repulse_radius < 2 * self.radius:
            raise ConfigError("repulse_radius must be >= agent diameter")
        if self.arena <= 2 * self.radius:
            raise ConfigError("arena must exceed the agent diameter")


@dataclass(frozen=True)
class WorldState:
    positions: np.ndarray  # (N, 2), x then y
    velocities: np.ndarray  # (N, 2)
    arena: float
    step: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        vel = np.asarray(self.velocities, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2 or vel.shape != pos.shape:
            raise ConfigError(f"positions/velocities must both be (N, 2), got {pos.shape}/{vel.shape}")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise NumericalError("world state contains non-finite values")
        if pos.size and (pos.min() < 0.0 or pos.max() > self.arena):
            raise NumericalError("positions fall outside the arena")
        pos.setflags(write=False)
        vel.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    @property
    def n_agents(self) -> int:
        return int(self.positions.shape[0])


def init_world(cfg: PhysicsConfig, rng: SplitMix64) -> WorldState:
    """Place agents uniformly at random with no initial overlap.

    Rejection-samples each agent (x then y per attempt) until it clears all
    earlier agents by at least one diameter, up to 10,000 attempts apiece.
    """
    lo = cfg.radius
    hi = cfg.arena - cfg.radius
    span = hi - lo
    min_d2 = (2 * cfg.radius) ** 2
    placed = np.empty((cfg.n_agents, 2))
    for i in range(cfg.n_agents):
        for _ in range(10_000):
            x = lo + rng.next_float() * span
            y = lo + rng.next_float() * span
            d2 = (placed[:i, 0] - x) ** 2 + (placed[:i, 1] - y) ** 2
            if i == 0 or d2.min() >= min_d2:
                placed[i] = (x, y)
                break
        else:
            raise PlacementError(
                f"could not place agent {i} of {cfg.n_agents} in 10000 attempts"
            )
    return WorldState(placed, np.zeros_like(placed), cfg.arena, step=0)


def _bilinear(vectors: np.ndarray, px: np.ndarray, py: np.ndarray, arena: float) -> np.ndarray:
    """Sample the field at positions; vectorized over the trailing axis."""
    h, w = vectors.shape[:2]
    gx = np.clip(px / arena * w - 0.5, 0.0, w - 1.0)
    gy = np.clip(py / arena * h - 0.5, 0.0, h - 1.0)
    # gx/gy are clipped to >= 0, so integer truncation is floor
    j0 = np.minimum(gx.astype(np.intp), max(w - 2, 0))
    i0 = np.minimum(gy.astype(np.intp), max(h - 2, 0))
    j1 = np.minimum(j0 + 1, w - 1)
    i1 = np.minimum(i0 + 1, h - 1)
    tx = (gx - j0)[..., None]
    ty = (gy - i0)[..., None]
    ux = 1.0 - tx
    top = ux * vectors[i0, j0] + tx * vectors[i0, j1]
    bottom = ux * vectors[i1, j0] + tx * vectors[i1, j1]
    return (1.0 - ty) * top + ty * bottom


def sample_field(field: VectorField, position: np.ndarray, arena: float) -> np.ndarray:
    """Bilinear force at one position; grid nodes sit at cell centers
    ((j+0.5)*L/W, (i+0.5)*L/H) and positions outside the node lattice clamp
    to the edge values."""
    p = np.asarray(position, dtype=np.float64)
    return _bilinear(field.vectors, p[0:1], p[1:2], arena)[0]


def _repulsion_all(positions: np.ndarray, cfg: PhysicsConfig) -> np.ndarray:
    """Net soft repulsion on every agent from all neighbours within range."""
    n = positions.shape[0]
    diff = positions[:, None, :] - positions[None, :, :]  # diff[i, j] = x_i - x_j
    d = np.einsum("ijk,ijk->ij", diff, diff)
    np.sqrt(d, out=d)
    near = (d < cfg.repulse_radius) & (d > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(near, cfg.repulse_stiffness * (1.0 - d / cfg.repulse_radius) / d, 0.0)
    force = np.einsum("ij,ijk->ik", w, diff)

    # coincident pairs get a deterministic pair-keyed direction at full
    # stiffness; the higher index is pushed the opposite way.  d has n
    # diagonal zeros always; more means an off-diagonal coincidence.
    if n > 1 and np.count_nonzero(d == 0.0) > n:
        zi, zj = np.nonzero((d == 0.0) & ~np.eye(n, dtype=bool))
        for i, j in zip(zi.tolist(), zj.tolist()):
            if i < j:
                theta = _TWO_PI * (mix64(i, j) * _INV_2_64)
                push = cfg.repulse_stiffness * np.array([math.cos(theta), math.sin(theta)])
                force[i] += push
                force[j] -= push
    return force


def repulsion_force(world: WorldState, index: int, cfg: PhysicsConfig) -> np.ndarray:
    """Net repulsion force on one agent."""
    if not 0 <= index < world.n_agents:
        raise ConfigError(f"agent index {index} out of range")
    return _repulsion_all(world.positions, cfg)[index]


def step(world: WorldState, field: VectorField, cfg: PhysicsConfig) -> WorldState:
    """Advance one synchronous step: damp, force, cap speed, move, clamp walls."""
    pos = world.positions
    vel = _bilinear(field.vectors, pos[:, 0], pos[:, 1], world.arena)
    vel *= cfg.force_gain
    vel += cfg.damping * world.velocities
    vel += _repulsion_all(pos, cfg)

    # cap speed so the invariant |v| <= v_max holds exactly in floating
    # point: rescale with a factor strictly below the exact ratio and
    # repeat on the rare ulp-level leftovers (strictly decreasing, so
    # this terminates; in practice one pass suffices)
    speed = np.sqrt(np.einsum("ij,ij->i", vel, vel))
    over = speed > cfg.v_max
    while over.any():
        vel[over] *= np.nextafter(cfg.v_max / speed[over], 0.0)[:, None]
        speed = np.sqrt(np.einsum("ij,ij->i", vel, vel))
        over = speed > cfg.v_max

    moved = pos + vel
    lo = cfg.radius
    hi = world.arena - cfg.radius
    hit = (moved < lo) | (moved > hi)
    moved = np.clip(moved, lo, hi)
    vel[hit] = 0.0

    if not (np.all(np.isfinite(moved)) and np.all(np.isfinite(vel))):
        raise NumericalError(f"non-finite state at step {world.step + 1}")
    return WorldState(moved, vel, world.arena, world.step + 1)


TraceSink = Callable[[WorldState], None]


def run(
    world: WorldState,
    field: VectorField,
    cfg: PhysicsConfig,
    trace: TraceSink | None = None,
) -> WorldState:
    """Apply cfg.steps steps, optionally emitting every frame (initial included)."""
    if trace is not None:
        trace(world)
    for _ in range(cfg.steps):
        world = step(world, field, cfg)
        if trace is not None:
            trace(world)
    return world


def frame_record(world: WorldState) -> str:
    """One trace line: {"step": n, "positions": [[x, y], ...]}, 9 significant digits."""
    coords = ",".join(
        f"[{format(x, '.9g')},{format(y, '.9g')}]" for x, y in world.positions.tolist()
    )
    return f'{{"step":{world.step},"positions":[{coords}]}}'


def trace_writer(fh: TextIO) -> TraceSink:
    """Trace sink appending one frame record per line to a text stream."""

    def sink(world: WorldState) -> None:
        fh.write(frame_record(world) + "\n")

    return sink
