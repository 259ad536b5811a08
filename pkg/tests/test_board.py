import io

import numpy as np
import pytest
from PIL import Image

from boardeval.board import (
    BoardError,
    BoardQuery,
    ValueGrid,
    evaluate_grid,
    point_value,
    render_heatmap,
)
from boardeval.core import PitchSpec, Position
from boardeval.events import EventType
from boardeval.regress import LinearModel, RegressorSpec, TableModel
from boardeval.states import EncodingSchema, StateFeature


SCHEMA = EncodingSchema()


def constant_model(c):
    m = LinearModel(RegressorSpec(kind="linear"))
    m.weights = np.zeros(SCHEMA.dim)
    m.intercept = c
    return m


def query(**kw):
    args = dict(event_type=EventType.FREE_KICK_DIRECT, t=500.0, nx=21, ny=14)
    args.update(kw)
    return BoardQuery(**args)


class TestEvaluateGrid:
    def test_constant_model(self):
        grid = evaluate_grid(constant_model(0.4), query(), SCHEMA)
        assert grid.values.shape == (21, 14)
        assert np.all(grid.values == 0.4)
        assert grid.m_abs == pytest.approx(0.4)

    def test_single_trained_cell_lookup(self):
        q = query()
        cell_state = StateFeature(
            q.event_type,
            Position((3 + 0.5) * 105.0 / q.nx, (5 + 0.5) * 68.0 / q.ny),
            q.t,
            0,
            0,
            "home",
        )
        table = TableModel().fit(SCHEMA.encode(cell_state)[None, :], np.array([1.0]))
        grid = evaluate_grid(table, q, SCHEMA)
        assert grid.values[3, 5] == 1.0
        assert grid.values.sum() == 1.0

    def test_point_value_consistency_bitwise(self):
        rng = np.random.default_rng(0)
        m = LinearModel(RegressorSpec(kind="linear"))
        m.weights = rng.normal(size=SCHEMA.dim)
        m.intercept = 0.1
        q = query()
        grid = evaluate_grid(m, q, SCHEMA)
        for i, j in [(0, 0), (10, 7), (20, 13)]:
            s = StateFeature(
                q.event_type,
                Position((i + 0.5) * 105.0 / q.nx, (j + 0.5) * 68.0 / q.ny),
                q.t,
                q.own_score,
                q.opp_score,
                q.side,
            )
            assert point_value(m, s, SCHEMA) == grid.values[i, j]

    def test_unknown_event_rejected(self):
        schema = EncodingSchema(event_types=(EventType.THROW_IN,))
        with pytest.raises(BoardError, match="unknown event"):
            evaluate_grid(constant_model(0.0), query(event_type=EventType.KICKOFF), schema)

    def test_time_outside_half_rejected(self):
        with pytest.raises(BoardError, match="outside"):
            evaluate_grid(constant_model(0.0), query(t=99999.0), SCHEMA)

    def test_payload_shape(self):
        grid = evaluate_grid(constant_model(0.25), query(nx=26, ny=17), SCHEMA)
        payload = grid.to_payload()
        assert payload["nx"] == 26 and payload["ny"] == 17
        assert len(payload["values"]) == 442
        assert payload["M"] == pytest.approx(0.25)
        assert payload["query"]["event"] == "FK"
        # row-major over y rows: index j*nx + i
        assert payload["values"][5 * 26 + 3] == grid.values[3, 5]


class TestRenderHeatmap:
    def test_zero_grid_uniform_midpoint(self):
        grid = evaluate_grid(constant_model(0.0), query(), SCHEMA)
        png = render_heatmap(grid, cell_px=4)
        img = np.asarray(Image.open(io.BytesIO(png)))
        line_gray = 90
        body = img[(img != line_gray).any(axis=2)]
        assert np.all(body == 245)

    def test_hottest_cell_is_pure_red(self):
        values = np.zeros((21, 14))
        values[4, 6] = 0.5
        grid = ValueGrid(query=query(), values=values, m_abs=0.5)
        png = render_heatmap(grid, cell_px=4)
        img = np.asarray(Image.open(io.BytesIO(png)))
        # cell (4, 6): columns 16..20, image rows count y downward
        row = (14 - 1 - 6) * 4 + 1
        col = 4 * 4 + 1
        assert tuple(img[row, col]) == (245, 40, 40)

    def test_antisymmetric_grid_renders_rotated_channel_swap(self):
        rng = np.random.default_rng(1)
        half = rng.normal(size=(21, 7))
        values = np.concatenate([half, -half[::-1, ::-1]], axis=1)
        grid = ValueGrid(query=query(), values=values, m_abs=float(np.abs(values).max()))
        png = render_heatmap(grid, cell_px=4)
        img = np.asarray(Image.open(io.BytesIO(png)))
        rotated = img[::-1, ::-1]
        swapped = rotated[:, :, [2, 1, 0]]  # negate value = swap red/blue
        assert np.array_equal(img, swapped)

    def test_bytes_deterministic(self):
        grid = evaluate_grid(constant_model(0.3), query(), SCHEMA)
        assert render_heatmap(grid) == render_heatmap(grid)

    def test_argmax_cell_invariant_under_scaling(self):
        rng = np.random.default_rng(2)
        values = rng.normal(size=(21, 14))
        g1 = ValueGrid(query=query(), values=values, m_abs=float(np.abs(values).max()))
        g2 = ValueGrid(query=query(), values=values * 7, m_abs=float(np.abs(values).max() * 7))
        p1 = np.asarray(Image.open(io.BytesIO(render_heatmap(g1, cell_px=2))))
        p2 = np.asarray(Image.open(io.BytesIO(render_heatmap(g2, cell_px=2))))
        assert np.array_equal(p1, p2)
