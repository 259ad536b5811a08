"""Synthetic match generator with known ground truth.

Players are Ornstein-Uhlenbeck trackers of per-player anchor paths. Three
anchor regimes produce the structure the detector and the value model are
validated against:

* dispersed play: anchors sit on a formation grid, positions wobble
  around them, the player-distribution covariance stays large and stable;
* planted intense windows: anchors ramp toward the ball and orbit it with
  an oscillating radius, so the covariance contracts and keeps changing;
* sprint drills (decoys): a few anchor pairs swap by rotating half a turn
  around their midpoints at high speed. Pair rotation preserves the pair
  sum and the pair second moment around the midpoint, so mean player
  speed spikes while the covariance ellipse barely moves.

Scripted conversion probabilities attach goals to restart events, giving
every stoppage-type significant event an analytically known value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .core import (
    FrameSeries,
    PitchSpec,
    PlayerRef,
    Position,
    RawEvent,
    RawEventKind,
    sha256_file,
    write_events,
    write_frames,
)

HOME_TEAM = "A"  # team A is "home" and kicks off half 1, attacking rightward
AWAY_TEAM = "B"

DEFAULT_CONVERSIONS: dict[RawEventKind, float] = {
    RawEventKind.PENALTY_KICK: 0.75,
    RawEventKind.FREE_KICK_DIRECT: 0.18,
    RawEventKind.FREE_KICK_INDIRECT: 0.10,
    RawEventKind.CORNER_KICK: 0.12,
    RawEventKind.THROW_IN: 0.04,
    RawEventKind.KICKOFF: 0.0,
}

# Motion model constants (tuned against the detector, see tests).
PLAYER_THETA = 0.8  # OU pull rate toward the anchor, 1/s
PLAYER_SIGMA = 1.0  # background position noise, m/sqrt(s)
GK_SIGMA = 0.15
BALL_THETA = 1.2
BALL_SIGMA = 0.6
WINDOW_PULL = 0.85  # fraction of the anchor->ball gap closed in a window
WINDOW_RAMP_S = 12.0  # contraction spread wider than the box filter
WINDOW_RELEASE_S = 18.0  # recovery slower than entry so the entry peak wins
WINDOW_ORBIT_SPREAD = 0.25  # orbit footprint relative to the formation spread
WINDOW_ORBIT_PERIOD_S = 8.0
WINDOW_ORBIT_WOBBLE = 0.25
WINDOW_SIGMA_BOOST = 1.1
DRILL_PAIR_DISTANCE = (24.0, 31.0)  # keeps decoys loud in speed, quiet in covariance
GOAL_DELAY_S = (5.0, 12.0)
KICKOFF_DELAY_S = (6.0, 10.0)
PENALTY_SETUP_S = (12.0, 18.0)


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class PlantedWindow:
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class SprintDrill:
    start: float
    duration: float
    n_pairs: int = 5


@dataclass(frozen=True)
class ScheduledStop:
    """A dead ball starting at t, restarted `duration` seconds later."""

    t: float
    kind: RawEventKind
    duration: float
    team: str


@dataclass(frozen=True)
class SimulatorConfig:
    seed: int
    match_id: str = "sim"
    half_id: int = 1
    frame_rate: float = 25.0
    half_length: float = 2700.0
    planted_windows: tuple[PlantedWindow, ...] = ()
    sprint_drills: tuple[SprintDrill, ...] = ()
    stoppage_schedule: tuple[ScheduledStop, ...] = ()
    conversion_table: dict[RawEventKind, float] = field(
        default_factory=lambda: dict(DEFAULT_CONVERSIONS)
    )
    pitch: PitchSpec = PitchSpec()
    # Goal coin flips and delays draw from their own stream so that two
    # configs sharing an outcome_seed (mirrored halves) convert the same
    # schedule entries, whatever their motion noise does.
    outcome_seed: int | None = None

    def __post_init__(self) -> None:
        for k, p in self.conversion_table.items():
            if not 0.0 <= p <= 1.0:
                raise SimulationError(f"conversion probability for {k} out of [0, 1]: {p}")
        wins = sorted(self.planted_windows, key=lambda w: w.start)
        for w in wins:
            if w.start < 0 or w.end > self.half_length:
                raise SimulationError(f"window [{w.start}, {w.end}] outside the half")
        for a, b in zip(wins, wins[1:]):
            if b.start < a.end:
                raise SimulationError(f"windows overlap at t={b.start}")
        for s in self.stoppage_schedule:
            if s.t < 0 or s.t + s.duration > self.half_length:
                raise SimulationError(f"stoppage at t={s.t} outside the half")


@dataclass(frozen=True)
class GroundTruth:
    intense_windows: tuple[PlantedWindow, ...]
    goals: tuple[tuple[float, str], ...]
    conversions: dict[RawEventKind, float]
    drills: tuple[SprintDrill, ...] = ()


def _formation_anchors(pitch: PitchSpec, attacks_right: bool, rng: np.random.Generator) -> np.ndarray:
    """Anchor points for GK + 10 outfielders, ordered GK first."""
    L, W = pitch.length, pitch.width
    ys4 = np.array([0.2, 0.4, 0.6, 0.8]) * W
    pts = [(0.04 * L, 0.5 * W)]
    pts += [(0.20 * L, y) for y in ys4]
    pts += [(0.38 * L, y) for y in ys4]
    pts += [(0.52 * L, 0.35 * W), (0.52 * L, 0.65 * W)]
    a = np.asarray(pts)
    if not attacks_right:
        a = np.column_stack([L - a[:, 0], W - a[:, 1]])
    return a + rng.uniform(-2.0, 2.0, size=a.shape)


def _attacked_goal_x(pitch: PitchSpec, team: str, half_id: int) -> float:
    attacks_right = (team == HOME_TEAM) == (half_id == 1)
    return pitch.length if attacks_right else 0.0


def _restart_location(
    stop: ScheduledStop, ball_at: np.ndarray, cfg: SimulatorConfig, rng: np.random.Generator
) -> tuple[float, float]:
    L, W = cfg.pitch.length, cfg.pitch.width
    gx = _attacked_goal_x(cfg.pitch, stop.team, cfg.half_id)
    toward = 1.0 if gx > L / 2 else -1.0
    kind = stop.kind
    if kind is RawEventKind.THROW_IN:
        x = float(np.clip(ball_at[0] + rng.uniform(-5, 5), 2.0, L - 2.0))
        y = 0.0 if ball_at[1] < W / 2 else W
        return x, y
    if kind is RawEventKind.CORNER_KICK:
        return (gx - toward * 0.3, 0.3 if rng.random() < 0.5 else W - 0.3)
    if kind is RawEventKind.PENALTY_KICK:
        return (gx - toward * 11.0, W / 2)
    if kind is RawEventKind.FREE_KICK_DIRECT:
        x = L / 2 + toward * rng.uniform(0.12, 0.38) * L
        return (x, rng.uniform(0.2, 0.8) * W)
    if kind is RawEventKind.FREE_KICK_INDIRECT:
        x = L / 2 + toward * rng.uniform(-0.15, 0.15) * L
        return (x, rng.uniform(0.2, 0.8) * W)
    if kind is RawEventKind.KICKOFF:
        return (L / 2, W / 2)
    return (float(ball_at[0]), float(ball_at[1]))


def _starter_kind(restart: RawEventKind) -> RawEventKind:
    if restart in (RawEventKind.THROW_IN, RawEventKind.CORNER_KICK):
        return RawEventKind.OUT_OF_BOUNDS
    return RawEventKind.FOUL


def _ou_filter(anchors: np.ndarray, noise: np.ndarray, theta: float, dt: float, start: np.ndarray) -> np.ndarray:
    """y[k] = (1-c) y[k-1] + c anchors[k] + noise[k], y[0] = start."""
    c = theta * dt
    u = c * anchors + noise
    u[0] = start
    return lfilter([1.0], [1.0, -(1.0 - c)], u, axis=0)


def simulate_half(cfg: SimulatorConfig) -> tuple[FrameSeries, list[RawEvent], GroundTruth]:
    """Generate one half of tracking data, an event log and ground truth.

    Deterministic: identical configs give bit-identical outputs.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    rng_outcome = np.random.default_rng(
        np.random.SeedSequence(cfg.seed if cfg.outcome_seed is None else cfg.outcome_seed)
    )
    pitch = cfg.pitch
    L, W = pitch.length, pitch.width
    dt = 1.0 / cfg.frame_rate
    times = np.round(np.arange(0.0, cfg.half_length + dt / 2, dt), 3)
    T = len(times)

    # --- event timeline -----------------------------------------------------
    events: list[RawEvent] = []
    goals: list[tuple[float, str]] = []
    dead_spans: list[tuple[float, float, tuple[float, float]]] = []  # (t0, t1, ball spot)

    def emit(t: float, kind: RawEventKind, team: str, x: float, y: float) -> None:
        events.append(RawEvent(round(t, 3), kind, team, Position(round(x, 3), round(y, 3))))

    kicker = HOME_TEAM if cfg.half_id == 1 else AWAY_TEAM
    emit(0.0, RawEventKind.KICKOFF, kicker, L / 2, W / 2)

    ball_hint = np.array([L / 2, W / 2])
    schedule = sorted(cfg.stoppage_schedule, key=lambda s: s.t)

    # Stratified conversion sampling: per kind, round(p * n) entries convert
    # (probabilistic rounding keeps the expectation at p for fractional
    # counts). The realized rate matches the scripted probability almost
    # exactly, which the scripted-value checks lean on; team signs stay
    # independent so continuation values remain zero-mean.
    converts_flag = [False] * len(schedule)
    by_kind: dict[RawEventKind, list[int]] = {}
    for i, stop in enumerate(schedule):
        by_kind.setdefault(stop.kind, []).append(i)
    for kind in sorted(by_kind, key=lambda k: k.value):
        idxs = by_kind[kind]
        expected = cfg.conversion_table.get(kind, 0.0) * len(idxs)
        n_hits = int(expected)
        if rng_outcome.random() < expected - n_hits:
            n_hits += 1
        for j in rng_outcome.permutation(len(idxs))[:n_hits]:
            converts_flag[idxs[j]] = True

    for stop_i, stop in enumerate(schedule):
        loc = _restart_location(stop, ball_hint, cfg, rng)
        t_restart = stop.t + stop.duration
        starter = _starter_kind(stop.kind)
        emit(stop.t, starter, stop.team, *loc)
        emit(t_restart, stop.kind, stop.team, *loc)
        dead_spans.append((stop.t, t_restart, loc))
        ball_hint = np.array(loc)

        converts = converts_flag[stop_i]
        t_goal = t_restart + rng_outcome.uniform(*GOAL_DELAY_S)
        t_ko = t_goal + rng_outcome.uniform(*KICKOFF_DELAY_S)
        if converts and t_ko < cfg.half_length - 1.0:
            gx = _attacked_goal_x(pitch, stop.team, cfg.half_id)
            emit(t_goal, RawEventKind.GOAL, stop.team, gx, W / 2)
            goals.append((round(t_goal, 3), stop.team))
            other = AWAY_TEAM if stop.team == HOME_TEAM else HOME_TEAM
            emit(t_ko, RawEventKind.KICKOFF, other, L / 2, W / 2)
            dead_spans.append((t_goal, t_ko, (L / 2, W / 2)))
            ball_hint = np.array([L / 2, W / 2])

    emit(cfg.half_length, RawEventKind.HALF_END, "-", L / 2, W / 2)

    # Sparse pass events for log texture, kept clear of the schedule.
    busy = [(a, b + 25.0) for a, b, _ in dead_spans]
    for t in np.arange(37.0, cfg.half_length - 5, 53.0):
        tj = t + rng.uniform(-4, 4)
        if any(a - 5 <= tj <= b for a, b in busy):
            continue
        team = HOME_TEAM if rng.random() < 0.5 else AWAY_TEAM
        emit(tj, RawEventKind.PASS, team, rng.uniform(0.2, 0.8) * L, rng.uniform(0.2, 0.8) * W)

    events.sort(key=lambda e: e.t)

    # --- ball path ----------------------------------------------------------
    waypoints = np.empty((T, 2))
    wander_t = np.arange(0.0, cfg.half_length + 9.0, 9.0)
    wander_xy = np.column_stack(
        [rng.uniform(0.25 * L, 0.75 * L, len(wander_t)), rng.uniform(0.2 * W, 0.8 * W, len(wander_t))]
    )
    seg = np.clip(np.searchsorted(wander_t, times, side="right") - 1, 0, len(wander_t) - 1)
    waypoints[:] = wander_xy[seg]

    windows = sorted(cfg.planted_windows, key=lambda w: w.start)
    focals = np.column_stack(
        [
            rng.uniform(0.15 * L, 0.85 * L, len(windows)) if windows else np.empty(0),
            rng.uniform(0.3 * W, 0.7 * W, len(windows)) if windows else np.empty(0),
        ]
    )
    for w, focal in zip(windows, focals):
        sel = (times >= w.start - 3.0) & (times <= w.end)
        waypoints[sel] = focal

    ball_noise = rng.standard_normal((T, 2)) * (BALL_SIGMA * np.sqrt(dt))
    ball = _ou_filter(waypoints, ball_noise, BALL_THETA, dt, waypoints[0])
    for t0, t1, loc in dead_spans:
        ball[(times >= t0) & (times <= t1)] = loc
    ball = np.clip(ball, [0.0, 0.0], [L, W])

    # --- player anchor paths --------------------------------------------------
    home_right = cfg.half_id == 1
    anchors_a = _formation_anchors(pitch, home_right, rng)
    anchors_b = _formation_anchors(pitch, not home_right, rng)
    base = np.concatenate([anchors_a, anchors_b])  # (22, 2), GK at 0 and 11
    P = len(base)
    gk = np.zeros(P, dtype=bool)
    gk[[0, 11]] = True
    outfield = np.nonzero(~gk)[0]

    anchor_path = np.broadcast_to(base, (T, P, 2)).copy()

    # Sprint drills: anchor pairs run a full carousel turn around their
    # midpoint. Pair rotation keeps the pair mean fixed and the pair second
    # moment around it constant, so the covariance ellipse barely reacts
    # while mean player speed spikes.
    for drill in sorted(cfg.sprint_drills, key=lambda d: d.start):
        perm = list(rng.permutation(outfield))
        pairs: list[tuple[int, int]] = []
        used: set[int] = set()
        for p in perm:
            if p in used:
                continue
            for q in perm:
                if q == p or q in used:
                    continue
                gap = np.linalg.norm(base[p] - base[q])
                if DRILL_PAIR_DISTANCE[0] <= gap <= DRILL_PAIR_DISTANCE[1]:
                    pairs.append((p, q))
                    used.update((p, q))
                    break
            if len(pairs) == drill.n_pairs:
                break
        sel = (times >= drill.start) & (times <= drill.start + drill.duration)
        angle = 2 * np.pi * np.clip((times[sel] - drill.start) / drill.duration, 0.0, 1.0)
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        for p, q in pairs:
            ap, aq = base[p], base[q]
            mid = (ap + aq) / 2.0
            r = ap - mid
            rot = np.column_stack([cos_a * r[0] - sin_a * r[1], sin_a * r[0] + cos_a * r[1]])
            anchor_path[sel, p] = mid + rot
            anchor_path[sel, q] = mid - rot

    # Intense windows: anchors ramp toward an orbit slot around the ball.
    # The mix follows a 4th-power interpolation of the spread factor so the
    # ellipse AREA (~ spread^4) declines at a near-constant rate; a plateau
    # in the convolved signal before the window start would push detected
    # peaks outside it.
    sigma_t = np.full(T, 1.0)
    c_min = 1.0 - WINDOW_PULL * (1.0 - WINDOW_ORBIT_SPREAD)
    c_min4 = c_min**4
    for w in windows:
        i0, i1 = np.searchsorted(times, [w.start, w.end])
        slot_angle = rng.uniform(0, 2 * np.pi, P)
        slot_base = rng.uniform(3.0, 9.0, P)
        phase = rng.uniform(0, 2 * np.pi, P)
        tail = min(len(times), int(np.searchsorted(times, w.end + WINDOW_RELEASE_S)))
        span = slice(i0, tail)
        tt = times[span]
        u_up = np.clip((tt - w.start) / WINDOW_RAMP_S, 0.0, 1.0)
        u_dn = np.clip((tt - w.end) / WINDOW_RELEASE_S, 0.0, 1.0)
        c_up = (1.0 - (1.0 - c_min4) * u_up) ** 0.25
        c_dn = (c_min4 + (1.0 - c_min4) * u_dn) ** 0.25
        c = np.maximum(c_up, c_dn)
        s = (1.0 - c) / (1.0 - WINDOW_ORBIT_SPREAD)
        radius = slot_base[None, :] * (
            1.0 + WINDOW_ORBIT_WOBBLE * np.sin(2 * np.pi * tt[:, None] / WINDOW_ORBIT_PERIOD_S + phase[None, :])
        )
        target = ball[span, None, :] + radius[:, :, None] * np.stack(
            [np.cos(slot_angle), np.sin(slot_angle)], axis=-1
        )[None, :, :]
        mix = s[:, None, None]
        anchor_path[span] = (1.0 - mix) * anchor_path[span] + mix * target
        sigma_t[i0:i1] = WINDOW_SIGMA_BOOST

    scale = np.where(gk[None, :], GK_SIGMA, sigma_t[:, None] * PLAYER_SIGMA)
    noise = rng.standard_normal((T, P, 2)) * (scale[:, :, None] * np.sqrt(dt))
    # Stationary spread at kickoff; a clean-formation start would fake an
    # intensity transient in the opening seconds.
    sigma0 = np.where(gk, GK_SIGMA, PLAYER_SIGMA) / np.sqrt(2 * PLAYER_THETA)
    start = base + rng.standard_normal((P, 2)) * sigma0[:, None]
    pos = _ou_filter(anchor_path, noise, PLAYER_THETA, dt, start)
    pos = np.clip(pos, [0.0, 0.0], [L, W])

    roster = tuple(
        [PlayerRef("A", f"A{i:02d}", i == 0) for i in range(11)]
        + [PlayerRef("B", f"B{i:02d}", i == 0) for i in range(11)]
    )
    series = FrameSeries(
        match_id=cfg.match_id,
        half_id=cfg.half_id,
        frame_rate=cfg.frame_rate,
        times=times,
        ball_xy=ball,
        roster=roster,
        player_xy=pos,
    )

    if windows:
        _assert_planted_contrast(series, windows)

    truth = GroundTruth(
        intense_windows=tuple(windows),
        goals=tuple(goals),
        conversions=dict(cfg.conversion_table),
        drills=tuple(sorted(cfg.sprint_drills, key=lambda d: d.start)),
    )
    return series, events, truth


def _ellipse_areas_1hz(series: FrameSeries) -> tuple[np.ndarray, np.ndarray]:
    """Pooled-outfielder covariance ellipse area sampled once per second."""
    step = max(1, int(round(series.frame_rate)))
    idx = np.arange(0, len(series.times), step)
    mask = np.array([not r.is_goalkeeper for r in series.roster])
    xy = series.player_xy[idx][:, mask, :]
    dev = xy - xy.mean(axis=1, keepdims=True)
    sxx = np.einsum("gp,gp->g", dev[:, :, 0], dev[:, :, 0]) / xy.shape[1]
    syy = np.einsum("gp,gp->g", dev[:, :, 1], dev[:, :, 1]) / xy.shape[1]
    sxy = np.einsum("gp,gp->g", dev[:, :, 0], dev[:, :, 1]) / xy.shape[1]
    return series.times[idx], np.pi * (sxx * syy - sxy * sxy)


def _assert_planted_contrast(series: FrameSeries, windows: list[PlantedWindow]) -> None:
    t, areas = _ellipse_areas_1hz(series)
    inside = np.zeros(len(t), dtype=bool)
    for w in windows:
        inside |= (t >= w.start + WINDOW_RAMP_S) & (t <= w.end)
    if not inside.any() or inside.all():
        return
    if areas[inside].mean() >= 0.5 * areas[~inside].mean():
        raise SimulationError(
            "planted windows failed to contract the player distribution "
            f"(inside mean {areas[inside].mean():.0f}, outside {areas[~inside].mean():.0f})"
        )


# ---------------------------------------------------------------------------
# Season generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeasonConfig:
    master_seed: int = 20250809
    n_matches: int = 1
    half_length: float = 2700.0
    frame_rate: float = 25.0
    windows_per_half: int = 4
    drills_per_half: int = 4
    # Even per-kind counts keep the team assignment exactly balanced, which
    # keeps the symmetric simulator's expected goal difference at zero.
    stoppage_mix: dict[RawEventKind, int] = field(
        default_factory=lambda: {
            RawEventKind.THROW_IN: 2,
            RawEventKind.FREE_KICK_DIRECT: 2,
            RawEventKind.CORNER_KICK: 2,
            RawEventKind.FREE_KICK_INDIRECT: 2,
            RawEventKind.PENALTY_KICK: 2,
        }
    )
    conversion_table: dict[RawEventKind, float] = field(
        default_factory=lambda: dict(DEFAULT_CONVERSIONS)
    )
    pitch: PitchSpec = PitchSpec()

    def __post_init__(self) -> None:
        if self.n_matches < 1:
            raise SimulationError("n_matches must be >= 1")


# Seconds reserved after each scheduled slot: restart + goal window + kickoff.
SLOT_MARGIN_S = 45.0
WINDOW_DURATION_S = 20.0
DRILL_DURATION_S = 8.0


def build_half_config(season: SeasonConfig, seed: int, match_id: str, half_id: int) -> SimulatorConfig:
    """Lay out windows, drills and stoppages on an evenly jittered slot grid."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    stop_entries: list[tuple[RawEventKind, str]] = []
    for kind, n in season.stoppage_mix.items():
        # Independent fair team draws: the continuation value after any
        # event stays zero-mean (a balanced quota would bias it).
        stop_entries.extend(
            (kind, HOME_TEAM if rng.random() < 0.5 else AWAY_TEAM) for _ in range(n)
        )
    slots = ["window"] * season.windows_per_half + ["drill"] * season.drills_per_half + [
        "stop"
    ] * len(stop_entries)
    n_slots = len(slots)
    usable = season.half_length - 2 * SLOT_MARGIN_S
    if n_slots and usable / n_slots < SLOT_MARGIN_S:
        raise SimulationError(
            f"half of {season.half_length}s too short for {n_slots} scheduled slots"
        )
    order = rng.permutation(n_slots)
    spacing = usable / max(n_slots, 1)
    windows, drills, stops = [], [], []
    k_idx = 0
    for slot_i, kind_i in enumerate(order):
        t = SLOT_MARGIN_S + slot_i * spacing
        if spacing > SLOT_MARGIN_S:
            t += rng.uniform(0.0, spacing - SLOT_MARGIN_S)
        what = slots[kind_i]
        if what == "window":
            windows.append(PlantedWindow(round(t, 3), WINDOW_DURATION_S))
        elif what == "drill":
            drills.append(SprintDrill(round(t, 3), DRILL_DURATION_S))
        else:
            kind, team = stop_entries[k_idx]
            k_idx += 1
            dur = float(rng.uniform(*PENALTY_SETUP_S)) if kind is RawEventKind.PENALTY_KICK else float(
                rng.uniform(6.0, 12.0)
            )
            stops.append(ScheduledStop(round(t, 3), kind, round(dur, 3), team))
    return SimulatorConfig(
        seed=int(rng.integers(0, 2**63 - 1)),
        match_id=match_id,
        half_id=half_id,
        frame_rate=season.frame_rate,
        half_length=season.half_length,
        planted_windows=tuple(sorted(windows, key=lambda w: w.start)),
        sprint_drills=tuple(sorted(drills, key=lambda d: d.start)),
        stoppage_schedule=tuple(sorted(stops, key=lambda s: s.t)),
        conversion_table=dict(season.conversion_table),
        pitch=season.pitch,
        outcome_seed=int(rng.integers(0, 2**63 - 1)),
    )


def mirror_config(cfg: SimulatorConfig, motion_seed: int) -> SimulatorConfig:
    """Second-half config: same schedule with the teams swapped, sharing
    the first half's outcome stream.

    The shared coins make the mirrored half's goal sequence the exact
    team-swap of the first half's, so each match's two-half goal
    difference is identically zero. The near-zero kickoff value of the
    symmetric simulator rests on this pairing.
    """
    swap = {HOME_TEAM: AWAY_TEAM, AWAY_TEAM: HOME_TEAM}
    return replace(
        cfg,
        seed=motion_seed,
        half_id=2,
        stoppage_schedule=tuple(
            replace(s, team=swap[s.team]) for s in cfg.stoppage_schedule
        ),
    )


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    lines = ["record,f1,f2"]
    for w in truth.intense_windows:
        lines.append(f"window,{w.start:.3f},{w.end:.3f}")
    for d in truth.drills:
        lines.append(f"drill,{d.start:.3f},{d.start + d.duration:.3f}")
    for t, team in truth.goals:
        lines.append(f"goal,{t:.3f},{team}")
    for kind, p in sorted(truth.conversions.items(), key=lambda kv: kv[0].value):
        lines.append(f"conversion,{kind.value},{p:g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ground_truth(path: str | Path) -> GroundTruth:
    windows, drills, goals, conv = [], [], [], {}
    for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
        rec, f1, f2 = line.split(",")
        if rec == "window":
            windows.append(PlantedWindow(float(f1), float(f2) - float(f1)))
        elif rec == "drill":
            drills.append(SprintDrill(float(f1), float(f2) - float(f1)))
        elif rec == "goal":
            goals.append((float(f1), f2))
        elif rec == "conversion":
            conv[RawEventKind(f1)] = float(f2)
    return GroundTruth(tuple(windows), tuple(goals), conv, tuple(drills))


def simulate_match(season: SeasonConfig, match_seed: int, match_id: str):
    """Both halves of one match, in memory; half 2 mirrors half 1."""
    ss = np.random.SeedSequence(match_seed)
    half_seeds = ss.generate_state(2)
    cfg1 = build_half_config(season, int(half_seeds[0]), match_id, 1)
    cfg2 = mirror_config(cfg1, int(half_seeds[1]))
    return [simulate_half(cfg1), simulate_half(cfg2)]


def simulate_season(season: SeasonConfig, out_dir: str | Path) -> Path:
    """Write n_matches match directories plus a checksum manifest."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise SimulationError(f"output directory not writable: {e}") from e

    match_seeds = np.random.SeedSequence(season.master_seed).generate_state(season.n_matches)
    manifest: dict = {
        "master_seed": season.master_seed,
        "n_matches": season.n_matches,
        "half_length": season.half_length,
        "frame_rate": season.frame_rate,
        "pitch": {"length": season.pitch.length, "width": season.pitch.width},
        "conversions": {k.value: v for k, v in season.conversion_table.items()},
        "matches": [],
    }
    for m in range(season.n_matches):
        match_id = f"match_{m + 1:04d}"
        mdir = out_dir / match_id
        mdir.mkdir(exist_ok=True)
        files = {}
        for (series, events, truth), half_id in zip(
            simulate_match(season, int(match_seeds[m]), match_id), (1, 2)
        ):
            fpath = mdir / f"half{half_id}.frames.csv"
            epath = mdir / f"half{half_id}.events.csv"
            gpath = mdir / f"half{half_id}.truth.csv"
            write_frames(series, fpath)
            write_events(events, epath)
            write_ground_truth(truth, gpath)
            for p in (fpath, epath, gpath):
                files[p.name] = sha256_file(p)
        manifest["matches"].append({"match_id": match_id, "seed": int(match_seeds[m]), "files": files})
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out_dir
