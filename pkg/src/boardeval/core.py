"""Core domain types, pitch geometry and file ingestion.

Coordinates in the raw files are pitch-absolute metres. Orientation
convention for all downstream analysis: team A attacks toward +x in the
first half and toward -x in the second half (B the opposite). Positions
are re-expressed in an analyzed team's attack frame with
:func:`normalize_to_attack_frame`.
"""

from __future__ import annotations

import enum
import hashlib
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

FRAME_RATE_RANGE = (15.0, 30.0)
MIN_PLAYERS_PER_TEAM = 4


class CoreError(ValueError):
    """Raised on malformed inputs or broken invariants at ingestion."""


@dataclass(frozen=True)
class PitchSpec:
    """Playing-field dimensions in metres."""

    length: float = 105.0
    width: float = 68.0

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise CoreError("pitch dimensions must be positive")

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return (min(max(x, 0.0), self.length), min(max(y, 0.0), self.width))

    @property
    def center(self) -> "Position":
        return Position(self.length / 2.0, self.width / 2.0)


@dataclass(frozen=True)
class Position:
    """A point on the pitch, metres."""

    x: float
    y: float

    def clamped(self, pitch: PitchSpec) -> "Position":
        cx, cy = pitch.clamp(self.x, self.y)
        return Position(cx, cy)


@dataclass(frozen=True)
class PlayerState:
    team: str  # "A" | "B"
    player_id: str
    position: Position
    is_goalkeeper: bool = False


@dataclass(frozen=True)
class Frame:
    """One snapshot of all tracked entities."""

    t: float
    players: tuple[PlayerState, ...]
    ball: Position


@dataclass(frozen=True)
class PlayerRef:
    team: str
    player_id: str
    is_goalkeeper: bool = False


class RawEventKind(enum.Enum):
    KICKOFF = "kickoff"
    PASS = "pass"
    FOUL = "foul"
    THROW_IN = "throw-in"
    FREE_KICK_DIRECT = "free-kick-direct"
    FREE_KICK_INDIRECT = "free-kick-indirect"
    CORNER_KICK = "corner-kick"
    PENALTY_KICK = "penalty-kick"
    GOAL = "goal"
    OUT_OF_BOUNDS = "out-of-bounds"
    STOPPAGE_END = "stoppage-end"
    HALF_END = "half-end"
    OTHER = "other"


# Kinds that restart play after a dead ball.
RESTART_KINDS = frozenset(
    {
        RawEventKind.KICKOFF,
        RawEventKind.THROW_IN,
        RawEventKind.FREE_KICK_DIRECT,
        RawEventKind.FREE_KICK_INDIRECT,
        RawEventKind.CORNER_KICK,
        RawEventKind.PENALTY_KICK,
    }
)

# Kinds that put the ball out of play until the next restart.
DEAD_BALL_STARTERS = frozenset(
    {RawEventKind.FOUL, RawEventKind.OUT_OF_BOUNDS, RawEventKind.GOAL}
)


@dataclass(frozen=True)
class RawEvent:
    t: float
    kind: RawEventKind
    team: str
    location: Position


class _FrameView(Sequence[Frame]):
    """Lazy sequence adapter over the column-oriented frame storage."""

    def __init__(self, series: "FrameSeries"):
        self._s = series

    def __len__(self) -> int:
        return len(self._s.times)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return self._s.frame(i)

    def __iter__(self) -> Iterator[Frame]:
        for i in range(len(self)):
            yield self._s.frame(i)


@dataclass
class FrameSeries:
    """Time-ordered tracking data for one half.

    Stored column-oriented (numpy arrays) for speed; ``frames`` exposes the
    per-frame object view. ``player_xy`` is (T, P, 2) with NaN marking a
    player absent from a frame. Immutable after construction.
    """

    match_id: str
    half_id: int
    frame_rate: float
    times: np.ndarray  # (T,)
    ball_xy: np.ndarray  # (T, 2)
    roster: tuple[PlayerRef, ...]
    player_xy: np.ndarray  # (T, P, 2)
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.half_id not in (1, 2):
            raise CoreError(f"half_id must be 1 or 2, got {self.half_id}")
        lo, hi = FRAME_RATE_RANGE
        if not (lo <= self.frame_rate <= hi):
            raise CoreError(
                f"frame rate {self.frame_rate} outside supported range [{lo}, {hi}]"
            )
        if np.any(np.diff(self.times) <= 0):
            raise CoreError("non-monotonic timestamps")
        for a in (self.times, self.ball_xy, self.player_xy):
            a.setflags(write=False)

    @property
    def frames(self) -> Sequence[Frame]:
        return _FrameView(self)

    def frame(self, i: int) -> Frame:
        players = []
        for p, ref in enumerate(self.roster):
            xy = self.player_xy[i, p]
            if np.isnan(xy[0]):
                continue
            players.append(
                PlayerState(ref.team, ref.player_id, Position(float(xy[0]), float(xy[1])), ref.is_goalkeeper)
            )
        return Frame(
            t=float(self.times[i]),
            players=tuple(players),
            ball=Position(float(self.ball_xy[i, 0]), float(self.ball_xy[i, 1])),
        )

    def nearest_index(self, t: float, max_gap: float | None = None) -> int | None:
        """Index of the frame closest to ``t``, or None beyond ``max_gap``."""
        i = int(np.searchsorted(self.times, t))
        cands = [j for j in (i - 1, i) if 0 <= j < len(self.times)]
        best = min(cands, key=lambda j: abs(self.times[j] - t))
        if max_gap is not None and abs(self.times[best] - t) > max_gap:
            return None
        return best

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class AttackDirectionTable:
    """Which way each team attacks in each half: "right" means toward +x.

    The two teams must attack opposite goals within a half.
    """

    directions: dict[tuple[str, int], str] = field(
        default_factory=lambda: {
            ("A", 1): "right",
            ("B", 1): "left",
            ("A", 2): "left",
            ("B", 2): "right",
        }
    )

    def __post_init__(self) -> None:
        for (team, half), d in self.directions.items():
            if d not in ("right", "left"):
                raise CoreError(f"bad direction {d!r} for {(team, half)}")
        for half in {h for (_, h) in self.directions}:
            ds = {t: d for (t, h), d in self.directions.items() if h == half}
            if len(set(ds.values())) != len(ds):
                raise CoreError(f"teams share an attack direction in half {half}")

    def direction(self, team: str, half_id: int) -> str:
        try:
            return self.directions[(team, half_id)]
        except KeyError:
            raise CoreError(f"no attack direction for team {team!r} in half {half_id}")


DEFAULT_ATTACK_TABLE = AttackDirectionTable()


def normalize_to_attack_frame(
    p: Position,
    analyzed_team: str,
    half_id: int,
    table: AttackDirectionTable = DEFAULT_ATTACK_TABLE,
    pitch: PitchSpec = PitchSpec(),
) -> Position:
    """Re-express ``p`` so the analyzed team attacks toward x = length.

    A leftward-attacking team gets the point reflection through pitch
    center, (L - x, W - y); a rightward-attacking team the identity. The
    reflection is involutive, so applying twice restores the input.
    """
    if table.direction(analyzed_team, half_id) == "right":
        return p
    return Position(pitch.length - p.x, pitch.width - p.y)


# ---------------------------------------------------------------------------
# Frame / event file formats
#
# Frame file: '#' metadata line, then a CSV header and one row per
# (frame, entity):
#   #frame_rate_hz=<float> half_id=<int> match_id=<str>
#   t_seconds,entity_kind,team,player_id,x_m,y_m,gk
# Event file:
#   t_seconds,kind,team,x_m,y_m
# Both UTF-8 with '.' decimals. Floats are written with 3 decimals, which
# makes parse -> write an exact round trip on canonical files.
# ---------------------------------------------------------------------------

_FRAME_COLUMNS = ["t_seconds", "entity_kind", "team", "player_id", "x_m", "y_m", "gk"]
_EVENT_COLUMNS = ["t_seconds", "kind", "team", "x_m", "y_m"]


def _parse_frame_header(line: str) -> dict[str, str]:
    if not line.startswith("#"):
        raise CoreError("unparseable header: expected '#frame_rate_hz=... half_id=... match_id=...'")
    out: dict[str, str] = {}
    for tok in line[1:].strip().split():
        if "=" not in tok:
            raise CoreError(f"unparseable header token {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    missing = {"frame_rate_hz", "half_id", "match_id"} - out.keys()
    if missing:
        raise CoreError(f"unparseable header: missing {sorted(missing)}")
    return out


def parse_frames(path: str | Path, pitch: PitchSpec = PitchSpec()) -> FrameSeries:
    """Read a frame file into a validated FrameSeries.

    Out-of-bounds coordinates are clamped to the pitch. Malformed rows and
    degenerate frames (fewer than 4 players on either team) are dropped and
    counted in ``FrameSeries.warnings``.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = _parse_frame_header(fh.readline())
        body = fh.read()
    frame_rate = float(header["frame_rate_hz"])
    half_id = int(header["half_id"])
    match_id = header["match_id"]

    df = pd.read_csv(io.StringIO(body), dtype={"team": str, "player_id": str})
    if list(df.columns) != _FRAME_COLUMNS:
        raise CoreError(f"unexpected frame columns {list(df.columns)}")

    warnings: list[str] = []
    bad = (
        df["t_seconds"].isna()
        | df["x_m"].isna()
        | df["y_m"].isna()
        | ~df["entity_kind"].isin(["player", "ball"])
    )
    n_bad = int(bad.sum())
    if n_bad:
        warnings.append(f"skipped {n_bad} malformed rows")
        log.warning("%s: skipped %d malformed rows", path.name, n_bad)
        df = df[~bad]

    x = df["x_m"].to_numpy(float)
    y = df["y_m"].to_numpy(float)
    n_clamped = int(np.sum((x < 0) | (x > pitch.length) | (y < 0) | (y > pitch.width)))
    if n_clamped:
        warnings.append(f"clamped {n_clamped} out-of-bounds coordinates")
    df = df.assign(x_m=np.clip(x, 0.0, pitch.length), y_m=np.clip(y, 0.0, pitch.width))

    raw_t = df["t_seconds"].to_numpy(float)
    if np.any(np.diff(raw_t) < 0):  # rows of one frame share t; a decrease is disorder
        raise CoreError("non-monotonic timestamps")
    times = np.unique(raw_t)
    if len(times) == 0:
        raise CoreError("frame file contains no frames")

    players_df = df[df["entity_kind"] == "player"]
    ball_df = df[df["entity_kind"] == "ball"]

    roster_rows = players_df[["team", "player_id", "gk"]].drop_duplicates(
        subset=["team", "player_id"]
    )
    roster = tuple(
        PlayerRef(str(r.team), str(r.player_id), bool(int(r.gk)))
        for r in roster_rows.itertuples()
    )
    ref_idx = {(r.team, r.player_id): p for p, r in enumerate(roster)}

    t_idx = {t: i for i, t in enumerate(times)}
    T, P = len(times), len(roster)
    player_xy = np.full((T, P, 2), np.nan)
    rows_i = players_df["t_seconds"].map(t_idx).to_numpy(int)
    rows_p = np.array(
        [ref_idx[(tm, pid)] for tm, pid in zip(players_df["team"], players_df["player_id"])],
        dtype=int,
    )
    player_xy[rows_i, rows_p, 0] = players_df["x_m"].to_numpy(float)
    player_xy[rows_i, rows_p, 1] = players_df["y_m"].to_numpy(float)

    ball_xy = np.full((T, 2), np.nan)
    bi = ball_df["t_seconds"].map(t_idx).to_numpy(int)
    ball_xy[bi, 0] = ball_df["x_m"].to_numpy(float)
    ball_xy[bi, 1] = ball_df["y_m"].to_numpy(float)

    # Reject degenerate frames: missing ball or short-handed teams.
    present = ~np.isnan(player_xy[:, :, 0])
    team_a = np.array([r.team == "A" for r in roster])
    count_a = present[:, team_a].sum(axis=1)
    count_b = present[:, ~team_a].sum(axis=1)
    ok = (
        (count_a >= MIN_PLAYERS_PER_TEAM)
        & (count_b >= MIN_PLAYERS_PER_TEAM)
        & ~np.isnan(ball_xy[:, 0])
    )
    n_degen = int((~ok).sum())
    if n_degen:
        warnings.append(f"dropped {n_degen} degenerate frames")
        log.warning("%s: dropped %d degenerate frames", path.name, n_degen)
    if not ok.any():
        raise CoreError("frame file contains no usable frames")

    return FrameSeries(
        match_id=match_id,
        half_id=half_id,
        frame_rate=frame_rate,
        times=times[ok],
        ball_xy=ball_xy[ok],
        roster=roster,
        player_xy=player_xy[ok],
        warnings=tuple(warnings),
    )


def write_frames(series: FrameSeries, path: str | Path) -> None:
    """Serialize a FrameSeries in the canonical frame file format."""
    lines = [
        f"#frame_rate_hz={series.frame_rate:g} half_id={series.half_id} "
        f"match_id={series.match_id}",
        ",".join(_FRAME_COLUMNS),
    ]
    for i in range(len(series.times)):
        t = series.times[i]
        for p, ref in enumerate(series.roster):
            xy = series.player_xy[i, p]
            if np.isnan(xy[0]):
                continue
            lines.append(
                f"{t:.3f},player,{ref.team},{ref.player_id},"
                f"{xy[0]:.3f},{xy[1]:.3f},{int(ref.is_goalkeeper)}"
            )
        b = series.ball_xy[i]
        lines.append(f"{t:.3f},ball,-,ball,{b[0]:.3f},{b[1]:.3f},0")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_events(path: str | Path) -> list[RawEvent]:
    """Read an event log; unknown kinds are kept under RawEventKind.OTHER."""
    df = pd.read_csv(path, dtype={"team": str, "kind": str})
    missing = set(_EVENT_COLUMNS) - set(df.columns)
    if missing:
        raise CoreError(f"event file missing columns {sorted(missing)}")
    known = {k.value: k for k in RawEventKind}
    events = []
    for r in df.itertuples():
        kind = known.get(str(r.kind), RawEventKind.OTHER)
        events.append(
            RawEvent(
                t=float(r.t_seconds),
                kind=kind,
                team=str(r.team),
                location=Position(float(r.x_m), float(r.y_m)),
            )
        )
    events.sort(key=lambda e: e.t)
    return events


def write_events(events: Iterable[RawEvent], path: str | Path) -> None:
    lines = [",".join(_EVENT_COLUMNS)]
    for e in events:
        lines.append(
            f"{e.t:.3f},{e.kind.value},{e.team},{e.location.x:.3f},{e.location.y:.3f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
