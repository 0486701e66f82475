"""Per-round node churn: Bernoulli dropout with exponentially distributed
absence durations, plus bookkeeping of when each node last took part.

The state machine here tracks churn only.  Whether a node can actually
exchange models additionally depends on the connectivity graph; the engine
intersects the two.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChurnConfig",
    "AccessibilityState",
    "init_accessibility",
    "step_accessibility",
    "absence_duration",
    "rounds_since_accessible",
    "partition_nodes",
    "state_to_dict",
    "state_from_dict",
    "write_state_json",
    "read_state_json",
]


@dataclass(frozen=True)
class ChurnConfig:
    """``dropout_p`` is the per-round probability that an accessible node
    drops out; ``rate`` is the rate of the exponential absence duration
    (the ``lambda`` knob in config files), so mean absence is 1/rate."""

    dropout_p: float = 0.0
    rate: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout_p <= 1.0:
            raise ValueError("dropout_p must lie in [0, 1]")
        if self.rate <= 0.0:
            raise ValueError("rate must be positive")


@dataclass
class AccessibilityState:
    """``accessible`` flags per node, scheduled rejoin rounds for dropped
    nodes, and the last round each node was accessible (-1 before the
    first round)."""

    accessible: np.ndarray
    rejoin_at: dict
    last_accessible: np.ndarray

    @property
    def n(self) -> int:
        return self.accessible.shape[0]

    def copy(self) -> "AccessibilityState":
        return AccessibilityState(
            self.accessible.copy(), dict(self.rejoin_at), self.last_accessible.copy()
        )


def init_accessibility(n: int) -> AccessibilityState:
    if n < 1:
        raise ValueError("need at least one node")
    return AccessibilityState(np.ones(n, dtype=bool), {}, np.full(n, -1, dtype=np.int64))


def absence_duration(rate: float, rng: np.random.Generator) -> float:
    """One continuous exponential absence draw with the given rate (mean
    1/rate), before discretization to whole rounds."""
    if rate <= 0.0:
        raise ValueError("rate must be positive")
    return float(rng.exponential(1.0 / rate))


def step_accessibility(
    state: AccessibilityState, cfg: ChurnConfig, t: int, rng: np.random.Generator
) -> AccessibilityState:
    """Advance the churn state machine to round ``t``.

    Dropped nodes whose rejoin round has arrived come back first.  Then
    every node that began the round accessible (a node that just rejoined
    is not eligible again until the next round) independently drops with
    probability ``dropout_p`` and is scheduled to rejoin after
    ceil(Exp(rate)) whole rounds.  Finally ``last_accessible`` is stamped
    for all nodes accessible at the end of the round.
    """
    out = state.copy()
    eligible = state.accessible.copy()
    for i in sorted(out.rejoin_at):
        if out.rejoin_at[i] <= t:
            out.accessible[i] = True
            del out.rejoin_at[i]
    for i in range(out.n):
        if eligible[i] and cfg.dropout_p > 0.0 and rng.random() < cfg.dropout_p:
            out.accessible[i] = False
            out.rejoin_at[i] = t + math.ceil(absence_duration(cfg.rate, rng))
    out.last_accessible[out.accessible] = t
    return out


def rounds_since_accessible(state: AccessibilityState, t: int, i: int) -> int:
    """Rounds elapsed since node ``i`` was last accessible; 0 when it is
    accessible at round ``t``."""
    if not 0 <= i < state.n:
        raise ValueError(f"unknown node id {i}")
    return int(t - state.last_accessible[i])


def partition_nodes(state: AccessibilityState):
    """Split all nodes into the accessible set and its complement.

    Returns ``(accessible_set, dropped_set, n1, n2)`` with n1 + n2 = n.
    """
    accessible = {i for i in range(state.n) if state.accessible[i]}
    dropped = {i for i in range(state.n) if not state.accessible[i]}
    return accessible, dropped, len(accessible), len(dropped)


def state_to_dict(state: AccessibilityState) -> dict:
    return {
        "accessible": state.accessible.astype(int).tolist(),
        "rejoin_at": {str(k): int(v) for k, v in state.rejoin_at.items()},
        "last_accessible": state.last_accessible.tolist(),
    }


def state_from_dict(payload: dict) -> AccessibilityState:
    return AccessibilityState(
        np.asarray(payload["accessible"], dtype=bool),
        {int(k): int(v) for k, v in payload["rejoin_at"].items()},
        np.asarray(payload["last_accessible"], dtype=np.int64),
    )


def write_state_json(path, state: AccessibilityState) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(state_to_dict(state), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_state_json(path) -> AccessibilityState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
