"""Random Waypoint mobility over a bounded rectangle and the induced
communication graph.

Every function is a pure state transition: callers own the state and the
RNG stream, so independent simulations can run side by side without any
shared mutable data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MobilityConfig",
    "MobilityState",
    "Adjacency",
    "init_mobility",
    "step_mobility",
    "connectivity",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class MobilityConfig:
    """Movement parameters: area size in meters, speed interval in m/s,
    pause on waypoint arrival in seconds, communication radius in meters,
    and the duration of one simulation step in seconds."""

    area_width: float = 1000.0
    area_height: float = 1000.0
    speed_min: float = 5.0
    speed_max: float = 7.0
    pause: float = 1.0
    radius: float = 250.0
    step: float = 1.0

    def __post_init__(self) -> None:
        if self.area_width <= 0 or self.area_height <= 0:
            raise ValueError("area_width and area_height must be positive")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("speeds must satisfy 0 < speed_min <= speed_max")
        if self.pause < 0:
            raise ValueError("pause must be nonnegative")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.step <= 0:
            raise ValueError("step must be positive")


@dataclass
class MobilityState:
    """Positions, current waypoints, speeds and remaining pause times for
    all nodes.  Arrays are (n, 2) for coordinates and (n,) otherwise."""

    positions: np.ndarray
    waypoints: np.ndarray
    speeds: np.ndarray
    pause_remaining: np.ndarray

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "MobilityState":
        return MobilityState(
            self.positions.copy(),
            self.waypoints.copy(),
            self.speeds.copy(),
            self.pause_remaining.copy(),
        )


@dataclass
class Adjacency:
    """Symmetric boolean connectivity matrix with a True diagonal (a node
    always reaches itself)."""

    edges: np.ndarray

    @property
    def n(self) -> int:
        return self.edges.shape[0]


def _uniform_points(n: int, cfg: MobilityConfig, rng: np.random.Generator) -> np.ndarray:
    pts = np.empty((n, 2))
    pts[:, 0] = rng.uniform(0.0, cfg.area_width, size=n)
    pts[:, 1] = rng.uniform(0.0, cfg.area_height, size=n)
    return pts


def init_mobility(n: int, cfg: MobilityConfig, rng: np.random.Generator) -> MobilityState:
    """Place ``n`` nodes uniformly in the area, each with a fresh waypoint
    and a speed drawn uniformly from [speed_min, speed_max]."""
    if n < 1:
        raise ValueError("need at least one node")
    positions = _uniform_points(n, cfg, rng)
    waypoints = _uniform_points(n, cfg, rng)
    speeds = rng.uniform(cfg.speed_min, cfg.speed_max, size=n)
    return MobilityState(positions, waypoints, speeds, np.zeros(n))


def step_mobility(state: MobilityState, cfg: MobilityConfig, rng: np.random.Generator) -> MobilityState:
    """Advance every node by one step of ``cfg.step`` seconds.

    Moving nodes head straight for their waypoint at their current speed
    and are clamped at the waypoint, where the pause starts within the
    same step.  Paused nodes burn pause time; once it runs out they draw a
    new uniform waypoint and a new uniform speed.
    """
    out = state.copy()
    for i in range(state.n):
        pos = out.positions[i]
        wp = out.waypoints[i]
        to_wp = wp - pos
        dist = float(np.hypot(to_wp[0], to_wp[1]))
        if out.pause_remaining[i] > 0.0 or dist == 0.0:
            out.pause_remaining[i] = max(0.0, out.pause_remaining[i] - cfg.step)
            if out.pause_remaining[i] == 0.0:
                out.waypoints[i] = _uniform_points(1, cfg, rng)[0]
                out.speeds[i] = rng.uniform(cfg.speed_min, cfg.speed_max)
            continue
        travel = out.speeds[i] * cfg.step
        if travel >= dist:
            out.positions[i] = wp
            out.pause_remaining[i] = cfg.pause
            if cfg.pause == 0.0:
                out.waypoints[i] = _uniform_points(1, cfg, rng)[0]
                out.speeds[i] = rng.uniform(cfg.speed_min, cfg.speed_max)
        else:
            out.positions[i] = pos + to_wp * (travel / dist)
    return out


def connectivity(state: MobilityState, radius: float) -> Adjacency:
    """Disk model link matrix: nodes are connected iff their Euclidean
    distance is at most ``radius``; the diagonal is always True."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    diff = state.positions[:, None, :] - state.positions[None, :, :]
    dist_sq = np.einsum("ijk,ijk->ij", diff, diff)
    edges = dist_sq <= radius * radius
    np.fill_diagonal(edges, True)
    return Adjacency(edges)


def write_trajectory_csv(path, snapshots) -> None:
    """Dump a trajectory as CSV rows ``t,node_id,x,y`` with coordinates in
    meters at 6 decimal places.  ``snapshots`` is an iterable of
    ``(t, positions)`` pairs."""
    with open(path, "w", newline="\n") as fh:
        fh.write("t,node_id,x,y\n")
        for t, positions in snapshots:
            for i, (x, y) in enumerate(np.asarray(positions)):
                fh.write(f"{t},{i},{x:.6f},{y:.6f}\n")
