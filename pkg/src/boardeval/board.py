"""Board evaluation: sweep a trained value model over the pitch.

A grid query fixes event type, time, score and side, and evaluates the
model at every cell center. Heatmaps map values linearly onto a diverging
blue-white-red palette over [-M, M], M the maximum absolute value in the
grid, rendered offense left-to-right over a pitch-line overlay.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .core import PitchSpec, Position
from .events import EventType
from .regress import Regressor
from .states import EncodingSchema, StateFeature


class BoardError(ValueError):
    pass


@dataclass(frozen=True)
class BoardQuery:
    event_type: EventType
    t: float
    own_score: int = 0
    opp_score: int = 0
    side: str = "home"
    nx: int = 105
    ny: int = 68

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise BoardError("grid resolution must be at least 2x2")


@dataclass(frozen=True)
class ValueGrid:
    query: BoardQuery
    values: np.ndarray  # (nx, ny), [i, j] at cell center ((i+.5)L/nx, (j+.5)W/ny)
    m_abs: float

    def to_payload(self) -> dict:
        """Wire format of the heatmap endpoint: row-major over y rows from
        y = 0, x ascending within each row."""
        return {
            "query": {
                "event": self.query.event_type.value,
                "t": self.query.t,
                "own": self.query.own_score,
                "opp": self.query.opp_score,
                "side": self.query.side,
            },
            "nx": self.query.nx,
            "ny": self.query.ny,
            "M": self.m_abs,
            "values": [float(v) for v in self.values.T.reshape(-1)],
        }


def _query_states(q: BoardQuery, pitch: PitchSpec) -> list[StateFeature]:
    states = []
    for j in range(q.ny):
        for i in range(q.nx):
            states.append(
                StateFeature(
                    event_type=q.event_type,
                    location=Position((i + 0.5) * pitch.length / q.nx, (j + 0.5) * pitch.width / q.ny),
                    t=q.t,
                    own_score=q.own_score,
                    opp_score=q.opp_score,
                    side=q.side,
                )
            )
    return states


def evaluate_grid(model: Regressor, q: BoardQuery, schema: EncodingSchema) -> ValueGrid:
    """Predicted value at every cell center of the query grid."""
    if q.event_type not in schema.event_types:
        raise BoardError(f"unknown event type {q.event_type}")
    if not 0.0 <= q.t <= schema.half_length:
        raise BoardError(f"t={q.t} outside [0, {schema.half_length}]")
    states = _query_states(q, schema.pitch)
    X = schema.encode_batch(states)
    pred = model.predict(X)
    values = pred.reshape(q.ny, q.nx).T  # to [i, j]
    return ValueGrid(query=q, values=values, m_abs=float(np.max(np.abs(values))))


def point_value(model: Regressor, state: StateFeature, schema: EncodingSchema) -> float:
    """Model value at exact continuous coordinates, no grid snapping."""
    if state.event_type not in schema.event_types:
        raise BoardError(f"unknown event type {state.event_type}")
    return float(model.predict(schema.encode(state)[None, :])[0])


# ---------------------------------------------------------------------------
# Rendering. All masks and the palette are written in terms of centered
# coordinates and |u|, which makes the image exactly symmetric under a
# 180-degree rotation combined with a red/blue channel swap whenever the
# grid itself is antisymmetric.
# ---------------------------------------------------------------------------

_LINE_GRAY = 90


def _palette(u: np.ndarray) -> np.ndarray:
    """Diverging blue-white-red, white at 0, u in [-1, 1]."""
    u = np.clip(u, -1.0, 1.0)
    shade = np.round(245 - 205 * np.abs(u)).astype(np.uint8)
    base = np.full(u.shape + (3,), 245, dtype=np.uint8)
    hot = u > 0
    cold = u < 0
    base[hot, 1] = shade[hot]
    base[hot, 2] = shade[hot]
    base[cold, 0] = shade[cold]
    base[cold, 1] = shade[cold]
    return base


def _pitch_line_mask(width_px: int, height_px: int, pitch: PitchSpec) -> np.ndarray:
    L, W = pitch.length, pitch.width
    mx = (np.arange(width_px) + 0.5 - width_px / 2) * (L / width_px)
    my = (np.arange(height_px) + 0.5 - height_px / 2) * (W / height_px)
    cx, cy = np.meshgrid(mx, my)
    ax, ay = np.abs(cx), np.abs(cy)
    w = 0.75 * max(L / width_px, W / height_px)

    half_l, half_w = L / 2, W / 2
    box_x, box_y = half_l - 16.5, 40.32 / 2
    goal_x, goal_y = half_l - 5.5, 18.32 / 2
    spot_x = half_l - 11.0

    border = ((ax >= half_l - w) & (ay <= half_w)) | ((ay >= half_w - w) & (ax <= half_l))
    halfway = ax < w
    circle = np.abs(np.hypot(cx, cy) - 9.15) < w
    boxes = (np.abs(ax - box_x) < w) & (ay <= box_y)
    boxes |= (np.abs(ay - box_y) < w) & (ax >= box_x) & (ax <= half_l)
    goals = (np.abs(ax - goal_x) < w) & (ay <= goal_y)
    goals |= (np.abs(ay - goal_y) < w) & (ax >= goal_x) & (ax <= half_l)
    spots = (np.abs(ax - spot_x) < 2 * w) & (ay < 2 * w)
    return border | halfway | circle | boxes | goals | spots


def render_heatmap(grid: ValueGrid, pitch: PitchSpec | None = None, cell_px: int = 8) -> bytes:
    """PNG of the grid, offense left-to-right, y up; deterministic bytes."""
    pitch = pitch or PitchSpec()
    q = grid.query
    u = grid.values / grid.m_abs if grid.m_abs > 0 else np.zeros_like(grid.values)
    # values[i, j] -> image rows top-down: row 0 is y = width (top).
    cells = u.T[::-1, :]  # (ny, nx), row 0 = top
    img = _palette(np.kron(cells, np.ones((cell_px, cell_px))))
    mask = _pitch_line_mask(q.nx * cell_px, q.ny * cell_px, pitch)
    img[mask] = _LINE_GRAY
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()
