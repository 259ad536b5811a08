"""Significant-event extraction and reward attachment.

Two event families form the nodes of a half's chain: in-play events (the
start of a detected intense period, located at the ball) and stoppage
events (restarts taken after a dead ball long enough for both teams to
reset their shape). Goals reward the last significant event that
precedes them: +1 when the analyzed team scored, -1 otherwise.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from .core import (
    DEAD_BALL_STARTERS,
    DEFAULT_ATTACK_TABLE,
    RESTART_KINDS,
    AttackDirectionTable,
    FrameSeries,
    PitchSpec,
    Position,
    RawEvent,
    RawEventKind,
    normalize_to_attack_frame,
)
import numpy as np

from .intensity import (
    DetectorConfig,
    IntensePeriod,
    intensity_series,
    periods_from_intensity,
)

log = logging.getLogger(__name__)


class EventType(enum.Enum):
    IN_PLAY = "IN"
    THROW_IN = "TI"
    FREE_KICK_DIRECT = "FK"
    FREE_KICK_INDIRECT = "IFK"
    CORNER_KICK = "CK"
    PENALTY_KICK = "PK"
    KICKOFF = "KO"


RESTART_EVENT_TYPES: dict[RawEventKind, EventType] = {
    RawEventKind.THROW_IN: EventType.THROW_IN,
    RawEventKind.FREE_KICK_DIRECT: EventType.FREE_KICK_DIRECT,
    RawEventKind.FREE_KICK_INDIRECT: EventType.FREE_KICK_INDIRECT,
    RawEventKind.CORNER_KICK: EventType.CORNER_KICK,
    RawEventKind.PENALTY_KICK: EventType.PENALTY_KICK,
    RawEventKind.KICKOFF: EventType.KICKOFF,
}


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class SignificantEvent:
    kind: str  # "in-play" | "stoppage"
    event_type: EventType
    t: float
    location: Position  # attack-normalized for the analyzed team
    team: str  # restart-taking team, "-" for in-play events
    own_score: int = 0
    opp_score: int = 0
    reward: int = 0


@dataclass(frozen=True)
class ExtractionConfig:
    reset_threshold: float = 5.0  # min dead-ball seconds for a reset period
    detector: DetectorConfig = DetectorConfig()
    # Intense periods become in-play events only when their score clears
    # this multiple of the half's median convolution value; the detector
    # itself reports every local peak, including pure noise floor.
    min_score_ratio: float = 2.5

    def __post_init__(self) -> None:
        if self.reset_threshold <= 0:
            raise ExtractionError("reset_threshold must be positive")
        if self.min_score_ratio < 0:
            raise ExtractionError("min_score_ratio must be non-negative")


def extract_inplay_events(
    periods: list[IntensePeriod],
    frames: FrameSeries,
    analyzed_team: str,
    table: AttackDirectionTable = DEFAULT_ATTACK_TABLE,
    pitch: PitchSpec = PitchSpec(),
) -> list[SignificantEvent]:
    """One in-play event per intense period, at the ball's position when
    the period starts."""
    out = []
    for p in periods:
        idx = frames.nearest_index(p.start, max_gap=1.0)
        if idx is None:
            raise ExtractionError(f"no frame near period start t={p.start:.1f}")
        ball = Position(float(frames.ball_xy[idx, 0]), float(frames.ball_xy[idx, 1]))
        loc = normalize_to_attack_frame(ball, analyzed_team, frames.half_id, table, pitch)
        out.append(
            SignificantEvent(
                kind="in-play",
                event_type=EventType.IN_PLAY,
                t=p.start,
                location=loc,
                team="-",
            )
        )
    return out


def dead_ball_intervals(events: list[RawEvent]) -> list[tuple[float, float]]:
    """Closed [starter, restart] intervals during which the ball is dead."""
    spans = []
    pending: float | None = None
    for e in events:
        if e.kind in DEAD_BALL_STARTERS:
            if pending is None:
                pending = e.t
        elif e.kind in RESTART_KINDS or e.kind is RawEventKind.STOPPAGE_END:
            if pending is not None:
                spans.append((pending, e.t))
                pending = None
    return spans


def extract_stoppage_events(
    events: list[RawEvent],
    cfg: ExtractionConfig,
    analyzed_team: str,
    half_id: int = 1,
    table: AttackDirectionTable = DEFAULT_ATTACK_TABLE,
    pitch: PitchSpec = PitchSpec(),
) -> list[SignificantEvent]:
    """Restarts taken after a reset period, seen from one team.

    A restart qualifies when the dead ball before it lasted at least the
    reset threshold. Kickoffs always qualify: they follow either the
    interval break or a goal celebration, both reset periods by nature.

    The analyzed team's chain keeps its own restarts plus every kickoff.
    The state carries no event-team feature, so an opponent restart at
    mirrored coordinates would alias an own restart of opposite value;
    kickoffs are team-neutral (the conceding side takes them, which the
    score features already encode).
    """
    out = []
    pending: float | None = None
    for e in events:
        if e.kind in DEAD_BALL_STARTERS:
            if pending is None:
                pending = e.t
            continue
        if e.kind is RawEventKind.STOPPAGE_END:
            pending = None
            continue
        if e.kind not in RESTART_KINDS:
            continue
        qualified = e.kind is RawEventKind.KICKOFF or (
            pending is not None and e.t - pending >= cfg.reset_threshold
        )
        pending = None
        if not qualified:
            continue
        if e.kind is not RawEventKind.KICKOFF and e.team != analyzed_team:
            continue
        loc = normalize_to_attack_frame(e.location, analyzed_team, half_id, table, pitch)
        out.append(
            SignificantEvent(
                kind="stoppage",
                event_type=RESTART_EVENT_TYPES[e.kind],
                t=e.t,
                location=loc,
                team=e.team,
            )
        )
    return out


def merge_and_attach_rewards(
    inplay: list[SignificantEvent],
    stoppage: list[SignificantEvent],
    goals: list[tuple[float, str]],
    analyzed_team: str,
) -> list[SignificantEvent]:
    """Merge both event families in time order, fill running scores and
    attach each goal's reward to the last event strictly before it."""
    merged = sorted(inplay + stoppage, key=lambda e: e.t)
    deduped: list[SignificantEvent] = []
    for e in merged:
        if deduped and e.t == deduped[-1].t:
            log.warning("dropping significant event sharing t=%.3f", e.t)
            continue
        deduped.append(e)
    merged = deduped

    rewards = [0] * len(merged)
    for gt, gteam in sorted(goals, key=lambda g: g[0]):
        idx = None
        for i, e in enumerate(merged):
            if e.t < gt:
                idx = i
            else:
                break
        if idx is None:
            log.warning("goal at t=%.1f has no preceding significant event; reward dropped", gt)
            continue
        rewards[idx] += 1 if gteam == analyzed_team else -1
        if abs(rewards[idx]) > 1:
            log.warning("event at t=%.1f accumulated reward %+d from stacked goals", merged[idx].t, rewards[idx])

    out = []
    for e, r in zip(merged, rewards):
        own = sum(1 for gt, gteam in goals if gt < e.t and gteam == analyzed_team)
        opp = sum(1 for gt, gteam in goals if gt < e.t and gteam != analyzed_team)
        out.append(replace(e, reward=r, own_score=own, opp_score=opp))
    return out


def select_significant_periods(frames: FrameSeries, cfg: ExtractionConfig) -> list[IntensePeriod]:
    """Intense periods strong enough to act as in-play significant events:
    local peaks whose score clears min_score_ratio times the half's median
    convolution value."""
    sig = intensity_series(frames, cfg.detector)
    periods = periods_from_intensity(
        sig, cfg.detector, float(frames.times[0]), float(frames.times[-1])
    )
    floor = cfg.min_score_ratio * float(np.median(sig.conv))
    return [p for p in periods if p.score >= floor]


def significant_events_for_half(
    frames: FrameSeries,
    raw_events: list[RawEvent],
    cfg: ExtractionConfig,
    analyzed_team: str,
    table: AttackDirectionTable = DEFAULT_ATTACK_TABLE,
    pitch: PitchSpec = PitchSpec(),
    periods: list[IntensePeriod] | None = None,
) -> list[SignificantEvent]:
    """Full extraction for one half and one analyzed-team perspective.

    ``periods`` can be supplied to reuse a detection run across the two
    perspectives of the same half; pass pre-filtered periods there.
    """
    if periods is None:
        periods = select_significant_periods(frames, cfg)
    inplay = extract_inplay_events(periods, frames, analyzed_team, table, pitch)
    dead = dead_ball_intervals(raw_events)
    inplay = [e for e in inplay if not any(a <= e.t <= b for a, b in dead)]
    stoppage = extract_stoppage_events(raw_events, cfg, analyzed_team, frames.half_id, table, pitch)
    goals = [(e.t, e.team) for e in raw_events if e.kind is RawEventKind.GOAL]
    return merge_and_attach_rewards(inplay, stoppage, goals, analyzed_team)


def write_significant_events(events: list[SignificantEvent], path: str | Path) -> None:
    lines = ["kind,event_type,t,x,y,team,own_score,opp_score,reward"]
    for e in events:
        lines.append(
            f"{e.kind},{e.event_type.value},{e.t:.3f},{e.location.x:.3f},"
            f"{e.location.y:.3f},{e.team},{e.own_score},{e.opp_score},{e.reward}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
