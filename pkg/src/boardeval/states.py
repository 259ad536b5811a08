"""Continuous-parameter states, per-half episodes and feature encoding.

A state is (event type, location, time, score, team side). Each half
yields one episode per analyzed team; the final state of an episode is
terminal and carries value 0 regardless of its reward. A coarse
discretizer turns episode collections into a finite chain with an
empirical transition matrix, which the exact solvers consume as an
oracle for the fitted iteration.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import PitchSpec, Position
from .events import EventType, SignificantEvent

SIDES = ("home", "away")

DEFAULT_EVENT_TYPES: tuple[EventType, ...] = tuple(EventType)


class StateError(ValueError):
    pass


@dataclass(frozen=True)
class StateFeature:
    event_type: EventType
    location: Position
    t: float
    own_score: int
    opp_score: int
    side: str  # "home" | "away"

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise StateError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.own_score < 0 or self.opp_score < 0:
            raise StateError("scores must be non-negative")


@dataclass(frozen=True)
class Episode:
    """Time-ordered chain of states with aligned rewards; the last state
    is the terminal one."""

    states: tuple[StateFeature, ...]
    rewards: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.states:
            raise StateError("episode must contain at least one state")
        if len(self.states) != len(self.rewards):
            raise StateError("states and rewards must align")
        ts = [s.t for s in self.states]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise StateError("episode states must be strictly time-ordered")

    def __len__(self) -> int:
        return len(self.states)


def build_episode(
    events: Sequence[SignificantEvent], half_length: float, side: str
) -> Episode:
    """Episode for one half from one team's perspective."""
    if not events:
        raise StateError("cannot build an episode from an empty event list")
    states = []
    for e in events:
        if not 0.0 <= e.t <= half_length:
            raise StateError(f"event time {e.t} outside [0, {half_length}]")
        states.append(
            StateFeature(
                event_type=e.event_type,
                location=e.location,
                t=e.t,
                own_score=e.own_score,
                opp_score=e.opp_score,
                side=side,
            )
        )
    return Episode(states=tuple(states), rewards=tuple(int(e.reward) for e in events))


def exact_backward_values(ep: Episode, gamma: float = 1.0) -> np.ndarray:
    """Backward recursion v[i] = r[i] + gamma * v[i+1], terminal pinned 0.

    With gamma = 1 the first value telescopes to the sum of all
    non-terminal rewards: the goal difference over the rest of the half.
    """
    if not 0.0 <= gamma <= 1.0:
        raise StateError(f"gamma must be in [0, 1], got {gamma}")
    v = np.zeros(len(ep))
    for i in range(len(ep) - 2, -1, -1):
        v[i] = ep.rewards[i] + gamma * v[i + 1]
    return v


# ---------------------------------------------------------------------------
# Feature encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncodingSchema:
    """Deterministic map from a state to a dense numeric vector.

    Layout: one-hot event type ++ (x/L, y/W) ++ t/half_length ++ score
    block ++ side bit. ``score_mode`` "pair" keeps (own, opp); "diff"
    encodes own - opp only.
    """

    event_types: tuple[EventType, ...] = DEFAULT_EVENT_TYPES
    pitch: PitchSpec = PitchSpec()
    half_length: float = 2700.0
    score_mode: str = "pair"

    def __post_init__(self) -> None:
        if self.score_mode not in ("pair", "diff"):
            raise StateError(f"bad score_mode {self.score_mode!r}")
        if len(set(self.event_types)) != len(self.event_types):
            raise StateError("duplicate event types in schema")

    @property
    def dim(self) -> int:
        return len(self.event_types) + 3 + (2 if self.score_mode == "pair" else 1) + 1

    @property
    def feature_names(self) -> list[str]:
        names = [f"is_{e.value}" for e in self.event_types]
        names += ["x_frac", "y_frac", "t_frac"]
        names += ["own", "opp"] if self.score_mode == "pair" else ["score_diff"]
        names.append("is_home")
        return names

    def encode(self, s: StateFeature) -> np.ndarray:
        try:
            e_idx = self.event_types.index(s.event_type)
        except ValueError:
            raise StateError(f"event type {s.event_type} not covered by the schema")
        v = np.zeros(self.dim)
        v[e_idx] = 1.0
        base = len(self.event_types)
        v[base] = s.location.x / self.pitch.length
        v[base + 1] = s.location.y / self.pitch.width
        v[base + 2] = s.t / self.half_length
        if self.score_mode == "pair":
            v[base + 3] = s.own_score
            v[base + 4] = s.opp_score
            v[base + 5] = 1.0 if s.side == "home" else 0.0
        else:
            v[base + 3] = s.own_score - s.opp_score
            v[base + 4] = 1.0 if s.side == "home" else 0.0
        return v

    def encode_batch(self, states: Sequence[StateFeature]) -> np.ndarray:
        return np.array([self.encode(s) for s in states]) if states else np.zeros((0, self.dim))

    def to_dict(self) -> dict:
        return {
            "event_types": [e.value for e in self.event_types],
            "pitch": {"length": self.pitch.length, "width": self.pitch.width},
            "half_length": self.half_length,
            "score_mode": self.score_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingSchema":
        return cls(
            event_types=tuple(EventType(v) for v in d["event_types"]),
            pitch=PitchSpec(d["pitch"]["length"], d["pitch"]["width"]),
            half_length=float(d["half_length"]),
            score_mode=d["score_mode"],
        )

    @property
    def schema_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Discretized empirical chain (oracle device)
# ---------------------------------------------------------------------------

TERMINAL_LABEL = "TERMINAL"


@dataclass(frozen=True)
class Discretizer:
    """Coarse state key: grid cell x event type x time bucket x score-diff
    bucket. Score-diff buckets are (<= -1, 0, >= +1)."""

    grid: tuple[int, int] = (6, 4)
    time_buckets: int = 3
    pitch: PitchSpec = PitchSpec()
    half_length: float = 2700.0

    def __post_init__(self) -> None:
        if self.grid[0] < 1 or self.grid[1] < 1 or self.time_buckets < 1:
            raise StateError("grid dims and time_buckets must be >= 1")

    def key_for(self, s: StateFeature) -> tuple:
        nx, ny = self.grid
        ix = min(int(s.location.x / self.pitch.length * nx), nx - 1)
        iy = min(int(s.location.y / self.pitch.width * ny), ny - 1)
        it = min(int(s.t / self.half_length * self.time_buckets), self.time_buckets - 1)
        diff = s.own_score - s.opp_score
        isc = -1 if diff <= -1 else (1 if diff >= 1 else 0)
        return (s.event_type.value, ix, iy, it, isc)


@dataclass
class DiscretizedChain:
    """Empirical Markov reward process over discretized states.

    The last index is an absorbing zero-reward terminal; each episode's
    final state transitions into it and contributes reward 0 (matching
    the terminal-value rule of the fitted iteration). Rewards are mean
    observed rewards per state and P rows are count ratios.
    """

    index: dict[tuple, int]
    labels: list
    transition: np.ndarray  # (n, n) row-stochastic
    rewards: np.ndarray  # (n,)
    counts: np.ndarray  # (n, n) raw transition counts
    terminal_index: int
    discretizer: Discretizer

    @property
    def n_states(self) -> int:
        return len(self.labels)


def discretize_and_estimate(
    episodes: Iterable[Episode], disc: Discretizer = Discretizer()
) -> DiscretizedChain:
    """Estimate the finite chain visited by a collection of episodes."""
    episodes = list(episodes)
    if not episodes:
        raise StateError("need at least one episode")

    index: dict[tuple, int] = {}

    def idx(key: tuple) -> int:
        if key not in index:
            index[key] = len(index)
        return index[key]

    trans: list[tuple[int, int]] = []
    rsum: dict[int, float] = {}
    rcnt: dict[int, int] = {}
    for ep in episodes:
        keys = [idx(disc.key_for(s)) for s in ep.states]
        for pos, k in enumerate(keys):
            terminal = pos == len(keys) - 1
            r = 0.0 if terminal else float(ep.rewards[pos])
            rsum[k] = rsum.get(k, 0.0) + r
            rcnt[k] = rcnt.get(k, 0) + 1
            trans.append((k, -1 if terminal else keys[pos + 1]))

    n = len(index) + 1
    term = n - 1
    counts = np.zeros((n, n))
    for a, b in trans:
        counts[a, term if b == -1 else b] += 1.0
    counts[term, term] = 1.0

    transition = counts / counts.sum(axis=1, keepdims=True)
    rewards = np.zeros(n)
    for k, s in rsum.items():
        rewards[k] = s / rcnt[k]

    labels = [None] * n
    for key, i in index.items():
        labels[i] = key
    labels[term] = TERMINAL_LABEL
    return DiscretizedChain(
        index=index,
        labels=labels,
        transition=transition,
        rewards=rewards,
        counts=counts,
        terminal_index=term,
        discretizer=disc,
    )


def write_episode(ep: Episode, path: str | Path) -> None:
    """Export: one line per state, terminal flagged on the last."""
    lines = ["t,e,x,y,own,opp,h,reward,terminal"]
    for i, (s, r) in enumerate(zip(ep.states, ep.rewards)):
        lines.append(
            f"{s.t:.3f},{s.event_type.value},{s.location.x:.3f},{s.location.y:.3f},"
            f"{s.own_score},{s.opp_score},{s.side},{r},{int(i == len(ep) - 1)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
