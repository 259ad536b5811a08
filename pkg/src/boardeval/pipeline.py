"""Dataset-level plumbing shared by the CLI, the service and the tests:
walking match directories, rebuilding episodes from raw files, training
and highlight/recall tables.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FrameSeries, PitchSpec, RawEvent, parse_events, parse_frames
from .events import (
    ExtractionConfig,
    SignificantEvent,
    select_significant_periods,
    significant_events_for_half,
    write_significant_events,
)
from .fvi import FviConfig, FviResult, run_fvi, write_training_report
from .intensity import (
    DetectorConfig,
    IntensePeriod,
    detect_intense_periods,
    speed_baseline_periods,
)
from .regress import save_model
from .simulate import GroundTruth, read_ground_truth
from .states import EncodingSchema, Episode, build_episode

log = logging.getLogger(__name__)

PERSPECTIVES = (("A", "home"), ("B", "away"))


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class HalfData:
    match_id: str
    half_id: int
    frames: FrameSeries
    events: list[RawEvent]
    truth: GroundTruth | None


def read_manifest(data_dir: str | Path) -> dict:
    p = Path(data_dir) / "manifest.json"
    if not p.exists():
        return {}
    return json.loads(p.read_text(encoding="utf-8"))


def match_dirs(data_dir: str | Path) -> list[Path]:
    dirs = sorted(d for d in Path(data_dir).iterdir() if d.is_dir() and d.name.startswith("match_"))
    if not dirs:
        raise PipelineError(f"no match directories under {data_dir}")
    return dirs


def load_half(match_dir: Path, half_id: int, pitch: PitchSpec = PitchSpec()) -> HalfData:
    frames = parse_frames(match_dir / f"half{half_id}.frames.csv", pitch)
    events = parse_events(match_dir / f"half{half_id}.events.csv")
    truth_path = match_dir / f"half{half_id}.truth.csv"
    truth = read_ground_truth(truth_path) if truth_path.exists() else None
    return HalfData(match_dir.name, half_id, frames, events, truth)


def iter_halves(data_dir: str | Path, pitch: PitchSpec = PitchSpec(), match_id: str | None = None):
    for mdir in match_dirs(data_dir):
        if match_id is not None and mdir.name != match_id:
            continue
        for half_id in (1, 2):
            if (mdir / f"half{half_id}.frames.csv").exists():
                yield load_half(mdir, half_id, pitch)


def half_perspectives(
    half: HalfData, ecfg: ExtractionConfig, pitch: PitchSpec = PitchSpec()
) -> list[tuple[str, str, list[SignificantEvent]]]:
    """(team, side, significant events) for both analyzed teams, reusing
    one detection pass."""
    periods = select_significant_periods(half.frames, ecfg)
    out = []
    for team, side in PERSPECTIVES:
        evs = significant_events_for_half(
            half.frames, half.events, ecfg, team, pitch=pitch, periods=periods
        )
        out.append((team, side, evs))
    return out


def episodes_from_dataset(
    data_dir: str | Path,
    ecfg: ExtractionConfig,
    half_length: float,
    pitch: PitchSpec = PitchSpec(),
) -> tuple[list[Episode], list[str]]:
    """Episodes plus their match ids (the split group of each episode)."""
    episodes, groups = [], []
    for half in iter_halves(data_dir, pitch):
        for _, side, evs in half_perspectives(half, ecfg, pitch):
            if evs:
                episodes.append(build_episode(evs, half_length, side))
                groups.append(half.match_id)
    if not episodes:
        raise PipelineError("dataset produced no episodes")
    return episodes, groups


def train_from_dataset(
    data_dir: str | Path,
    model_path: str | Path,
    fvi_cfg: FviConfig,
    ecfg: ExtractionConfig,
    half_length: float | None = None,
    pitch: PitchSpec | None = None,
    report_path: str | Path | None = None,
) -> tuple[FviResult, EncodingSchema]:
    manifest = read_manifest(data_dir)
    if half_length is None:
        half_length = float(manifest.get("half_length", 2700.0))
    if pitch is None:
        pd = manifest.get("pitch", {})
        pitch = PitchSpec(pd.get("length", 105.0), pd.get("width", 68.0))
    schema = EncodingSchema(half_length=half_length, pitch=pitch)
    episodes, groups = episodes_from_dataset(data_dir, ecfg, half_length, pitch)
    result = run_fvi(episodes, fvi_cfg, schema=schema, groups=groups)
    valid_rmse = result.validation_rmse
    meta = {
        "gamma": fvi_cfg.gamma,
        "regressor": fvi_cfg.regressor.kind,
        "iterations": result.iterations,
        "train_rmse": result.train_rmse,
        "validation_rmse": None if np.isnan(valid_rmse) else valid_rmse,
        "n_train_episodes": result.n_train_episodes,
        "n_validation_episodes": result.n_validation_episodes,
        "data_dir": str(data_dir),
    }
    save_model(result.model, schema, model_path, meta)
    if report_path is not None:
        write_training_report(result, report_path)
    return result, schema


# ---------------------------------------------------------------------------
# Highlights and recall-vs-rank tables
# ---------------------------------------------------------------------------


def write_highlights(periods: list[IntensePeriod], path: str | Path) -> None:
    ranked = sorted(periods, key=lambda p: -p.score)
    lines = ["rank,peak_t,start,end,score"]
    for rank, p in enumerate(ranked, start=1):
        lines.append(f"{rank},{p.peak_t:.3f},{p.start:.3f},{p.end:.3f},{p.score:.6g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def peak_in_window_hits(periods: list[IntensePeriod], truth: GroundTruth) -> int:
    return sum(
        1
        for w in truth.intense_windows
        if any(w.start <= p.peak_t <= w.end for p in periods)
    )


def recall_at_rank(
    detections: list[tuple[float, object, float]],
    windows: list[tuple[object, float, float]],
    k: int,
) -> float:
    """Pooled recall at rank k.

    detections: (score, half key, peak time); windows: (half key, start,
    end). A window counts as recovered when a top-k peak from its half
    falls inside it.
    """
    if not windows:
        return 0.0
    top = sorted(detections, key=lambda d: -d[0])[:k]
    hit = 0
    for key, ws, we in windows:
        if any(h == key and ws <= t <= we for (_, h, t) in top):
            hit += 1
    return hit / len(windows)


def match_recall_table(
    halves: list[HalfData], det_cfg: DetectorConfig, max_rank: int = 40
) -> list[dict]:
    """Recall-vs-rank rows comparing the covariance detector against the
    mean-speed baseline on ground-truth halves."""
    cov, spd, windows = [], [], []
    for half in halves:
        if half.truth is None:
            continue
        key = (half.match_id, half.half_id)
        for p in detect_intense_periods(half.frames, det_cfg):
            cov.append((p.score, key, p.peak_t))
        for p in speed_baseline_periods(half.frames, det_cfg):
            spd.append((p.score, key, p.peak_t))
        for w in half.truth.intense_windows:
            windows.append((key, w.start, w.end))
    if not windows:
        raise PipelineError("no ground-truth windows available for recall")
    rows = []
    for k in range(1, max_rank + 1):
        rows.append(
            {
                "k": k,
                "recall": recall_at_rank(cov, windows, k),
                "baseline_recall": recall_at_rank(spd, windows, k),
            }
        )
    return rows


def write_recall_table(rows: list[dict], path: str | Path) -> None:
    lines = ["k,recall,baseline_recall"]
    for r in rows:
        lines.append(f"{r['k']},{r['recall']:.4f},{r['baseline_recall']:.4f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def extract_to_files(
    half: HalfData, ecfg: ExtractionConfig, out_dir: Path, half_length: float, pitch: PitchSpec
) -> list[Path]:
    from .states import write_episode

    written = []
    for team, side, evs in half_perspectives(half, ecfg, pitch):
        if not evs:
            log.warning("%s half %d: no significant events for team %s", half.match_id, half.half_id, team)
            continue
        sig_path = out_dir / f"half{half.half_id}.sig_{team}.csv"
        write_significant_events(evs, sig_path)
        ep_path = out_dir / f"half{half.half_id}.episode_{team}.csv"
        write_episode(build_episode(evs, half_length, side), ep_path)
        written += [sig_path, ep_path]
    return written
