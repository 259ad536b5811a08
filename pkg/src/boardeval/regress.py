"""Regression models behind one fit/predict interface.

LinearModel solves the normal equations with a tiny ridge term so the
collinear one-hot block stays invertible. RandomForestModel grows CART
regression trees on bootstrap samples with variance-reduction splits;
split candidates come from per-feature bin edges (exact unique-value
midpoints when a feature has few distinct values, quantile bins
otherwise). TableModel memorizes the mean target per distinct input row
and backs the oracle tests.

All models are seed-deterministic and immutable once fitted; predictions
are computed row-wise-stable so a value never depends on batch size.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .states import EncodingSchema

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class RegressorSpec:
    kind: str = "forest"  # linear | forest | table
    n_trees: int = 100
    max_depth: int | None = 12
    min_samples_leaf: int = 5
    bootstrap: bool = True
    feature_fraction: float = 1.0
    max_bins: int = 64
    ridge: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "forest", "table"):
            raise RegressionError(f"unknown regressor kind {self.kind!r}")
        if self.n_trees < 1 or self.min_samples_leaf < 1 or self.max_bins < 2:
            raise RegressionError("bad forest hyperparameters")
        if not 0.0 < self.feature_fraction <= 1.0:
            raise RegressionError("feature_fraction must be in (0, 1]")


def _check_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise RegressionError("X must be 2-D (rows, features)")
    if len(X) != len(y):
        raise RegressionError("X and y lengths differ")
    if len(X) == 0:
        raise RegressionError("empty dataset")
    if not np.isfinite(y).all():
        raise RegressionError("targets must be finite")
    return X, y


class LinearModel:
    """Least squares with intercept via ridge-stabilized normal equations."""

    def __init__(self, spec: RegressorSpec = RegressorSpec(kind="linear")):
        self.spec = spec
        self.weights: np.ndarray | None = None
        self.intercept: float = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearModel":
        X, y = _check_xy(X, y)
        if np.all(np.ptp(X, axis=0) == 0):
            log.warning("all feature columns constant; fit degenerates to intercept-only")
        Xa = np.column_stack([X, np.ones(len(X))])
        A = Xa.T @ Xa + self.spec.ridge * np.eye(Xa.shape[1])
        w = np.linalg.solve(A, Xa.T @ y)
        self.weights = w[:-1]
        self.intercept = float(w[-1])
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise RegressionError("model not fitted")
        X = np.asarray(X, dtype=float)
        if X.shape[1] != len(self.weights):
            raise RegressionError(
                f"dimensionality mismatch: model {len(self.weights)}, input {X.shape[1]}"
            )
        # (X * w).sum(axis=1) reduces over the feature axis only, so a row's
        # prediction is bit-identical for any batch size.
        return (X * self.weights).sum(axis=1) + self.intercept


class TableModel:
    """Mean target per distinct feature row; 0 for unseen rows."""

    def __init__(self, spec: RegressorSpec = RegressorSpec(kind="table")):
        self.spec = spec
        self.table: dict[bytes, float] | None = None
        self.dim: int | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "TableModel":
        X, y = _check_xy(X, y)
        sums: dict[bytes, float] = {}
        counts: dict[bytes, int] = {}
        for row, target in zip(X, y):
            k = row.tobytes()
            sums[k] = sums.get(k, 0.0) + float(target)
            counts[k] = counts.get(k, 0) + 1
        self.table = {k: sums[k] / counts[k] for k in sums}
        self.dim = X.shape[1]
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.table is None:
            raise RegressionError("model not fitted")
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.dim:
            raise RegressionError("dimensionality mismatch")
        return np.array([self.table.get(row.tobytes(), 0.0) for row in X])


@dataclass
class _Tree:
    feature: np.ndarray  # (nodes,) int, -1 for leaves
    threshold: np.ndarray  # (nodes,) float
    left: np.ndarray  # (nodes,) int
    right: np.ndarray  # (nodes,) int
    value: np.ndarray  # (nodes,) float leaf means

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return self.value[node]
            rows = np.nonzero(active)[0]
            go_left = X[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])


def _bin_edges(col: np.ndarray, max_bins: int) -> np.ndarray:
    """Candidate cut values: unique-value midpoints, or quantiles when the
    feature has more distinct values than bins."""
    uniq = np.unique(col)
    if len(uniq) <= 1:
        return np.empty(0)
    if len(uniq) <= max_bins:
        return (uniq[:-1] + uniq[1:]) / 2.0
    qs = np.quantile(col, np.linspace(0, 1, max_bins + 1)[1:-1])
    return np.unique(qs)


def _grow_tree(
    bins: np.ndarray,
    edges: list[np.ndarray],
    y: np.ndarray,
    rows: np.ndarray,
    spec: RegressorSpec,
    rng: np.random.Generator,
) -> _Tree:
    """Level-synchronous CART growth.

    Every tree level builds one joint (node, feature, bin) histogram with
    a single bincount pass, then picks each node's best variance-reduction
    split vectorized over the whole frontier. Orders of magnitude fewer
    numpy calls than per-node scanning, identical split rule.
    """
    n_features = bins.shape[1]
    n_sub = max(1, int(round(spec.feature_fraction * n_features)))
    n_cuts = np.array([len(e) for e in edges])
    B = int(n_cuts.max()) + 1 if n_cuts.size else 1
    cut_valid = np.zeros((n_features, B), dtype=bool)  # usable cut positions
    for f in range(n_features):
        cut_valid[f, : n_cuts[f]] = True

    xb = bins[rows]  # (n, d) bin index per bootstrap row
    yv = y[rows]
    max_depth = spec.max_depth if spec.max_depth is not None else 2**31

    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [0.0]

    node_of = np.zeros(len(rows), dtype=np.int64)  # frontier slot per row
    frontier = np.array([0])  # tree node id per slot
    depth = 0
    while len(frontier) and depth < max_depth:
        M = len(frontier)
        live = node_of >= 0
        key = (node_of[live, None] * n_features + np.arange(n_features)[None, :]) * B + xb[live]
        counts = np.bincount(key.ravel(), minlength=M * n_features * B).reshape(M, n_features, B)
        ysums = np.bincount(
            key.ravel(),
            weights=np.broadcast_to(yv[live, None], key.shape).ravel(),
            minlength=M * n_features * B,
        ).reshape(M, n_features, B)

        node_cnt = counts[:, 0, :].sum(axis=1)
        node_sum = ysums[:, 0, :].sum(axis=1)
        for slot, node in enumerate(frontier):
            value[node] = float(node_sum[slot] / node_cnt[slot]) if node_cnt[slot] else 0.0

        c_left = np.cumsum(counts, axis=2)
        s_left = np.cumsum(ysums, axis=2)
        c_right = node_cnt[:, None, None] - c_left
        s_right = node_sum[:, None, None] - s_left
        ok = (
            cut_valid[None, :, :]
            & (c_left >= spec.min_samples_leaf)
            & (c_right >= spec.min_samples_leaf)
        )
        if n_sub < n_features:
            picks = np.argsort(rng.random((M, n_features)), axis=1)[:, :n_sub]
            fmask = np.zeros((M, n_features), dtype=bool)
            np.put_along_axis(fmask, picks, True, axis=1)
            ok &= fmask[:, :, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = np.where(ok, s_left**2 / c_left + s_right**2 / c_right, -np.inf)
        gain = gain - (node_sum**2 / np.maximum(node_cnt, 1))[:, None, None]

        flat = gain.reshape(M, -1)
        best = np.argmax(flat, axis=1)
        best_gain = flat[np.arange(M), best]
        splittable = (best_gain > 1e-12) & (node_cnt >= 2 * spec.min_samples_leaf)

        new_frontier: list[int] = []
        slot_children = np.full((M, 2), -1, dtype=np.int64)
        split_f = np.full(M, -1, dtype=np.int64)
        split_k = np.zeros(M, dtype=np.int64)
        for slot, node in enumerate(frontier):
            if not splittable[slot]:
                continue
            f, k = divmod(int(best[slot]), B)
            split_f[slot], split_k[slot] = f, k
            feature[node] = f
            threshold[node] = float(edges[f][k])
            cl, sl = c_left[slot, f, k], s_left[slot, f, k]
            child_means = (sl / cl, (node_sum[slot] - sl) / (node_cnt[slot] - cl))
            for side in (0, 1):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                # Children start at their means so a depth cutoff on the
                # next level leaves correct leaf values behind.
                value.append(float(child_means[side]))
                child = len(feature) - 1
                slot_children[slot, side] = len(new_frontier)
                new_frontier.append(child)
            left[node] = new_frontier[slot_children[slot, 0]]
            right[node] = new_frontier[slot_children[slot, 1]]

        if not new_frontier:
            break
        slots = node_of[live]
        f_of_row = split_f[slots]
        row_split = f_of_row >= 0
        go_left = np.zeros(len(slots), dtype=bool)
        rows_idx = np.nonzero(row_split)[0]
        go_left[rows_idx] = (
            xb[live][rows_idx, f_of_row[rows_idx]] <= split_k[slots[rows_idx]]
        )
        new_slots = np.where(
            row_split,
            np.where(go_left, slot_children[slots, 0], slot_children[slots, 1]),
            -1,
        )
        upd = node_of[live].copy()
        upd[:] = new_slots
        node_of[live] = upd
        frontier = np.array(new_frontier)
        depth += 1

    return _Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value),
    )


class RandomForestModel:
    """Bagged CART regression trees; predictions are leaf-mean averages and
    therefore bounded by the training-target range."""

    def __init__(self, spec: RegressorSpec = RegressorSpec(kind="forest")):
        self.spec = spec
        self.trees: list[_Tree] = []
        self.dim: int | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForestModel":
        X, y = _check_xy(X, y)
        n, d = X.shape
        edges = [_bin_edges(X[:, f], self.spec.max_bins) for f in range(d)]
        bins = np.empty((n, d), dtype=np.int64)
        for f in range(d):
            bins[:, f] = np.searchsorted(edges[f], X[:, f], side="left")

        # Child seeds per tree: parallel training would not change results.
        seeds = np.random.SeedSequence(self.spec.seed).spawn(self.spec.n_trees)
        self.trees = []
        for s in seeds:
            rng = np.random.default_rng(s)
            rows = rng.integers(0, n, size=n) if self.spec.bootstrap else np.arange(n)
            self.trees.append(_grow_tree(bins, edges, y, rows, self.spec, rng))
        self.dim = d
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise RegressionError("model not fitted")
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.dim:
            raise RegressionError(
                f"dimensionality mismatch: model {self.dim}, input {X.shape[1]}"
            )
        acc = np.zeros(len(X))
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)


Regressor = LinearModel | RandomForestModel | TableModel


def make_regressor(spec: RegressorSpec) -> Regressor:
    if spec.kind == "linear":
        return LinearModel(spec)
    if spec.kind == "forest":
        return RandomForestModel(spec)
    return TableModel(spec)


def fit_model(spec: RegressorSpec, X: np.ndarray, y: np.ndarray) -> Regressor:
    return make_regressor(spec).fit(X, y)


def rmse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Root mean square error between predictions and reference values."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise RegressionError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise RegressionError("rmse of empty input")
    return float(np.sqrt(np.mean((p - t) ** 2)))


# ---------------------------------------------------------------------------
# Model files: versioned JSON with a schema hash, shared by CLI and service.
# ---------------------------------------------------------------------------


def _payload(model: Regressor) -> dict:
    if isinstance(model, LinearModel):
        return {"weights": list(model.weights), "intercept": model.intercept}
    if isinstance(model, RandomForestModel):
        return {
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                }
                for t in model.trees
            ],
            "dim": model.dim,
        }
    if isinstance(model, TableModel):
        return {
            "dim": model.dim,
            "rows": [list(np.frombuffer(k)) for k in model.table],
            "values": list(model.table.values()),
        }
    raise RegressionError(f"cannot serialize {type(model).__name__}")


def save_model(
    model: Regressor, schema: EncodingSchema, path: str | Path, meta: dict | None = None
) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": model.spec.kind,
        "spec": {
            "n_trees": model.spec.n_trees,
            "max_depth": model.spec.max_depth,
            "min_samples_leaf": model.spec.min_samples_leaf,
            "bootstrap": model.spec.bootstrap,
            "feature_fraction": model.spec.feature_fraction,
            "max_bins": model.spec.max_bins,
            "ridge": model.spec.ridge,
            "seed": model.spec.seed,
        },
        "schema": schema.to_dict(),
        "schema_hash": schema.schema_hash,
        "meta": meta or {},
        "payload": _payload(model),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[Regressor, EncodingSchema, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise RegressionError(f"unsupported model format version {doc.get('format_version')}")
    schema = EncodingSchema.from_dict(doc["schema"])
    if schema.schema_hash != doc["schema_hash"]:
        raise RegressionError("model schema hash mismatch")
    spec = RegressorSpec(kind=doc["kind"], **doc["spec"])
    payload = doc["payload"]
    if doc["kind"] == "linear":
        model = LinearModel(spec)
        model.weights = np.array(payload["weights"])
        model.intercept = float(payload["intercept"])
    elif doc["kind"] == "forest":
        model = RandomForestModel(spec)
        model.dim = int(payload["dim"])
        model.trees = [
            _Tree(
                feature=np.array(t["feature"], dtype=np.int64),
                threshold=np.array(t["threshold"]),
                left=np.array(t["left"], dtype=np.int64),
                right=np.array(t["right"], dtype=np.int64),
                value=np.array(t["value"]),
            )
            for t in payload["trees"]
        ]
    else:
        model = TableModel(spec)
        model.dim = int(payload["dim"])
        model.table = {
            np.asarray(row, dtype=float).tobytes(): float(v)
            for row, v in zip(payload["rows"], payload["values"])
        }
    return model, schema, doc["meta"]
