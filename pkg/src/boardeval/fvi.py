"""Fitted-value iteration over episode collections.

The loop alternates two phases: fit the regression model on the current
per-state values, then refresh every value from the freshly fitted model
with v(X_t) <- r(e_t) + gamma * phi(X_{t+1}), pinning each episode's
terminal state to 0. Values start at the raw rewards. Only training
episodes feed the regression dataset; held-out episodes measure RMSE
against exact backward values (the integrated goal difference).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .regress import Regressor, RegressorSpec, make_regressor, rmse
from .states import EncodingSchema, Episode, StateFeature, exact_backward_values

log = logging.getLogger(__name__)

Encoder = Callable[[StateFeature], np.ndarray]


class FviError(ValueError):
    pass


@dataclass(frozen=True)
class FviConfig:
    gamma: float = 1.0
    max_iterations: int = 50
    tolerance: float = 1e-4  # early stop on max |delta v|
    regressor: RegressorSpec = RegressorSpec(kind="forest")
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise FviError("gamma must be in [0, 1]")
        if self.max_iterations < 1:
            raise FviError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise FviError("tolerance must be positive")
        if not 0.0 < self.train_fraction <= 1.0:
            raise FviError("train_fraction must be in (0, 1]")


@dataclass
class FviResult:
    model: Regressor
    iterations: int
    max_delta_per_iteration: list[float]
    train_rmse: float
    validation_rmse: float  # NaN when no episodes were held out
    history: list[dict] = field(default_factory=list)
    n_train_episodes: int = 0
    n_validation_episodes: int = 0


def split_episodes(
    episodes: Sequence[Episode],
    train_fraction: float,
    seed: int,
    groups: Sequence[object] | None = None,
) -> tuple[list[Episode], list[Episode]]:
    """Seeded shuffle split; at least one episode always lands in train.

    With ``groups`` (e.g. one match id per episode) whole groups move
    together, so a match's perspectives and halves never straddle the
    split.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if groups is None:
        order = rng.permutation(len(episodes))
        n_train = max(1, int(round(train_fraction * len(episodes))))
        train_idx, valid_idx = order[:n_train], order[n_train:]
    else:
        if len(groups) != len(episodes):
            raise FviError("groups must align with episodes")
        uniq = sorted(set(groups), key=str)
        order = rng.permutation(len(uniq))
        n_train = max(1, int(round(train_fraction * len(uniq))))
        chosen = {uniq[i] for i in order[:n_train]}
        train_idx = [i for i, g in enumerate(groups) if g in chosen]
        valid_idx = [i for i, g in enumerate(groups) if g not in chosen]
    return [episodes[i] for i in train_idx], [episodes[i] for i in valid_idx]


def _exact_values(episodes: Sequence[Episode], gamma: float) -> np.ndarray:
    if not episodes:
        return np.zeros(0)
    return np.concatenate([exact_backward_values(ep, gamma) for ep in episodes])


def run_fvi(
    episodes: Sequence[Episode],
    cfg: FviConfig,
    schema: EncodingSchema | None = None,
    encoder: Encoder | None = None,
    groups: Sequence[object] | None = None,
) -> FviResult:
    """Train a value model on episode data.

    States are encoded through ``schema`` (or a custom ``encoder``, which
    the oracle tests use to key states by their discretized cell).
    ``groups`` controls the train/validation split granularity, typically
    one match id per episode.
    """
    if not episodes:
        raise FviError("need at least one episode")
    if encoder is None:
        schema = schema or EncodingSchema()
        encoder = schema.encode

    train, valid = split_episodes(episodes, cfg.train_fraction, cfg.seed, groups)

    feats = [np.array([encoder(s) for s in ep.states]) for ep in train]
    X = np.concatenate(feats)
    offsets = np.cumsum([0] + [len(ep) for ep in train])
    terminal = np.zeros(len(X), dtype=bool)
    terminal[offsets[1:] - 1] = True
    rewards = np.concatenate([np.array(ep.rewards, dtype=float) for ep in train])

    v = rewards.copy()  # initialize values from rewards
    model = make_regressor(cfg.regressor)
    deltas: list[float] = []
    history: list[dict] = []
    exact_train = _exact_values(train, cfg.gamma)
    exact_valid = _exact_values(valid, cfg.gamma)
    X_valid = (
        np.concatenate([np.array([encoder(s) for s in ep.states]) for ep in valid])
        if valid
        else None
    )

    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        # Fresh randomization per refit: reusing one bag set across
        # iterations lets its idiosyncrasies compound through the value
        # updates instead of averaging out.
        spec = replace(cfg.regressor, seed=cfg.regressor.seed + iterations)
        model = make_regressor(spec).fit(X, v)

        # Successor of row i is row i+1 within its episode; terminal rows
        # are overwritten with 0, so the cross-episode spill never leaks.
        pred = model.predict(X)
        v_new = np.empty_like(v)
        v_new[:-1] = rewards[:-1] + cfg.gamma * pred[1:]
        v_new[-1] = 0.0
        v_new[terminal] = 0.0
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
        deltas.append(delta)

        entry = {"iter": iterations, "max_delta_v": delta}
        entry["train_rmse"] = rmse(pred, exact_train)
        entry["valid_rmse"] = (
            rmse(model.predict(X_valid), exact_valid) if X_valid is not None else float("nan")
        )
        history.append(entry)
        if delta < cfg.tolerance:
            break

    train_rmse = rmse(model.predict(X), exact_train)
    valid_rmse = (
        rmse(model.predict(X_valid), exact_valid) if X_valid is not None else float("nan")
    )
    return FviResult(
        model=model,
        iterations=iterations,
        max_delta_per_iteration=deltas,
        train_rmse=train_rmse,
        validation_rmse=valid_rmse,
        history=history,
        n_train_episodes=len(train),
        n_validation_episodes=len(valid),
    )


def table_regressor(seed: int = 0) -> RegressorSpec:
    """Spec for the memorizing per-key regressor used by oracle tests."""
    return RegressorSpec(kind="table", seed=seed)


def write_training_report(result: FviResult, path: str | Path) -> None:
    lines = ["iter,max_delta_v,train_rmse,valid_rmse"]
    for h in result.history:
        lines.append(
            f"{h['iter']},{h['max_delta_v']:.6g},{h['train_rmse']:.6g},{h['valid_rmse']:.6g}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
