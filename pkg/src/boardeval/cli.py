"""Command-line front end: simulate -> extract -> train -> evaluate -> serve.

Every subcommand is deterministic for fixed inputs and seeds; failures
exit nonzero with a single machine-readable {"error": ...} line on
stderr. A JSON config file can preload any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .board import BoardQuery, evaluate_grid, point_value, render_heatmap
from .core import PitchSpec, Position, RawEventKind
from .events import EventType, ExtractionConfig
from .fvi import FviConfig
from .intensity import DetectorConfig, intensity_series, write_signal_dump
from .pipeline import (
    extract_to_files,
    iter_halves,
    match_dirs,
    match_recall_table,
    read_manifest,
    train_from_dataset,
    write_highlights,
    write_recall_table,
)
from .regress import RegressorSpec, load_model
from .simulate import DEFAULT_CONVERSIONS, SeasonConfig, simulate_season
from .states import StateFeature


def _fail(msg: str) -> int:
    print(json.dumps({"error": msg}), file=sys.stderr)
    return 1


_STOP_CODES = {
    "TI": RawEventKind.THROW_IN,
    "FK": RawEventKind.FREE_KICK_DIRECT,
    "IFK": RawEventKind.FREE_KICK_INDIRECT,
    "CK": RawEventKind.CORNER_KICK,
    "PK": RawEventKind.PENALTY_KICK,
}


def _parse_stops(text: str) -> dict[RawEventKind, int]:
    """Parse a compact stoppage mix like "PK:2,TI:3"."""
    mix: dict[RawEventKind, int] = {}
    for part in text.split(","):
        code, _, count = part.partition(":")
        kind = _STOP_CODES.get(code.strip().upper())
        if kind is None:
            raise ValueError(f"unknown stoppage kind {code!r} (use {sorted(_STOP_CODES)})")
        mix[kind] = int(count)
    return mix


def _parse_score(text: str) -> tuple[int, int]:
    try:
        own, opp = text.split(":")
        own_i, opp_i = int(own), int(opp)
    except ValueError:
        raise ValueError(f"score must look like 0:0, got {text!r}")
    if own_i < 0 or opp_i < 0:
        raise ValueError("scores must be non-negative")
    return own_i, opp_i


def _merged(args: argparse.Namespace, section: str, key: str, default):
    """Flag value if given, else config-file value, else default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    return args.config_data.get(section, {}).get(key, default)


def _detector_cfg(args) -> DetectorConfig:
    return DetectorConfig(
        n_seconds=float(_merged(args, "detector", "n-seconds", 10.0)),
        sample_rate=float(_merged(args, "detector", "sample-rate", 1.0)),
        include_goalkeepers=bool(_merged(args, "detector", "include-goalkeepers", False)),
        window_mode=str(_merged(args, "detector", "window-mode", "forward")),
    )


def _extraction_cfg(args) -> ExtractionConfig:
    return ExtractionConfig(
        reset_threshold=float(_merged(args, "extraction", "reset-threshold", 5.0)),
        detector=_detector_cfg(args),
        min_score_ratio=float(_merged(args, "extraction", "min-score-ratio", 2.5)),
    )


def cmd_simulate(args) -> int:
    conversions = dict(DEFAULT_CONVERSIONS)
    if args.penalty_conversion is not None:
        conversions[RawEventKind.PENALTY_KICK] = args.penalty_conversion
    stops = _merged(args, "simulate", "stops", None)
    season_kw = {}
    if stops is not None:
        season_kw["stoppage_mix"] = _parse_stops(stops) if isinstance(stops, str) else stops
    season = SeasonConfig(
        master_seed=int(_merged(args, "simulate", "seed", 20250809)),
        n_matches=int(_merged(args, "simulate", "matches", 1)),
        half_length=float(_merged(args, "simulate", "half-length", 2700.0)),
        frame_rate=float(_merged(args, "simulate", "frame-rate", 25.0)),
        windows_per_half=int(_merged(args, "simulate", "windows-per-half", 4)),
        drills_per_half=int(_merged(args, "simulate", "drills-per-half", 4)),
        conversion_table=conversions,
        **season_kw,
    )
    out = simulate_season(season, args.out)
    print(f"wrote {season.n_matches} matches to {out}")
    return 0


def cmd_extract(args) -> int:
    ecfg = _extraction_cfg(args)
    manifest = read_manifest(args.data)
    half_length = float(args.half_length or manifest.get("half_length", 2700.0))
    pitch = PitchSpec()
    n = 0
    for half in iter_halves(args.data, pitch, match_id=args.match):
        out_dir = Path(args.data) / half.match_id
        written = extract_to_files(half, ecfg, out_dir, half_length, pitch)
        n += len(written)
    print(f"wrote {n} extraction files under {args.data}")
    return 0


def cmd_highlights(args) -> int:
    from .intensity import detect_intense_periods, speed_baseline_periods

    det = _detector_cfg(args)
    halves = list(iter_halves(args.data, match_id=args.match))
    if not halves:
        return _fail(f"no halves found for match {args.match!r}")
    for half in halves:
        out_dir = Path(args.data) / half.match_id
        write_highlights(
            detect_intense_periods(half.frames, det),
            out_dir / f"half{half.half_id}.highlights.csv",
        )
        write_highlights(
            speed_baseline_periods(half.frames, det),
            out_dir / f"half{half.half_id}.highlights_speed.csv",
        )
        if args.dump_signals:
            sig = intensity_series(half.frames, det)
            write_signal_dump(sig, out_dir / f"half{half.half_id}.signals.csv")
    with_truth = [h for h in halves if h.truth is not None]
    if with_truth:
        rows = match_recall_table(with_truth, det, max_rank=args.max_rank)
        out_dir = Path(args.data) / halves[0].match_id
        write_recall_table(rows, out_dir / "recall.csv")
        last = rows[-1]
        print(
            f"top-{last['k']} recall: method {last['recall']:.3f} "
            f"baseline {last['baseline_recall']:.3f}"
        )
    else:
        print("no ground truth; skipped recall table")
    return 0


def cmd_train(args) -> int:
    spec = RegressorSpec(
        kind=args.regressor,
        n_trees=int(_merged(args, "train", "trees", 100)),
        max_depth=int(_merged(args, "train", "depth", 12)),
        min_samples_leaf=int(_merged(args, "train", "min-leaf", 5)),
        max_bins=int(_merged(args, "train", "max-bins", 64)),
        seed=int(_merged(args, "train", "seed", 0)),
    )
    cfg = FviConfig(
        gamma=float(_merged(args, "train", "gamma", 1.0)),
        max_iterations=int(_merged(args, "train", "iterations", 50)),
        tolerance=float(_merged(args, "train", "tolerance", 1e-4)),
        regressor=spec,
        train_fraction=float(_merged(args, "train", "train-fraction", 0.7)),
        seed=int(_merged(args, "train", "seed", 0)),
    )
    report = args.report or (str(args.model) + ".report.csv")
    result, schema = train_from_dataset(
        args.data,
        args.model,
        cfg,
        _extraction_cfg(args),
        half_length=args.half_length,
        report_path=report,
    )
    print(
        f"trained {args.regressor} in {result.iterations} iterations; "
        f"validation RMSE {result.validation_rmse:.4f}; model at {args.model}"
    )
    return 0


def _query_from_args(args, schema) -> BoardQuery:
    own, opp = _parse_score(args.score)
    return BoardQuery(
        event_type=EventType(args.event),
        t=args.time,
        own_score=own,
        opp_score=opp,
        side=args.side,
        nx=args.nx,
        ny=args.ny,
    )


def cmd_heatmap(args) -> int:
    model, schema, _ = load_model(args.model)
    q = _query_from_args(args, schema)
    grid = evaluate_grid(model, q, schema)
    png = render_heatmap(grid, schema.pitch)
    Path(args.out).write_bytes(png)
    grid_out = args.grid_out or (str(Path(args.out).with_suffix("")) + ".grid.json")
    Path(grid_out).write_text(json.dumps(grid.to_payload(), sort_keys=True) + "\n")
    print(f"wrote {args.out} and {grid_out} (M={grid.m_abs:.6g})")
    return 0


def cmd_value(args) -> int:
    model, schema, _ = load_model(args.model)
    own, opp = _parse_score(args.score)
    state = StateFeature(
        event_type=EventType(args.event),
        location=Position(args.x, args.y),
        t=args.time,
        own_score=own,
        opp_score=opp,
        side=args.side,
    )
    print(json.dumps({"value": point_value(model, state, schema)}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.model, args.data)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in sorted(Path(args.models).glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            continue
        if "format_version" not in doc:
            continue
        meta = doc.get("meta", {})
        rows.append(
            {
                "model": path.name,
                "kind": doc["kind"],
                "validation_rmse": meta.get("validation_rmse"),
                "iterations": meta.get("iterations"),
            }
        )
    if not rows:
        return _fail(f"no model files under {args.models}")
    by_kind: dict[str, list[float]] = {}
    print("model,kind,validation_rmse,iterations")
    for r in rows:
        print(f"{r['model']},{r['kind']},{r['validation_rmse']},{r['iterations']}")
        if r["validation_rmse"] is not None:
            by_kind.setdefault(r["kind"], []).append(r["validation_rmse"])
    for kind, vals in sorted(by_kind.items()):
        print(f"# {kind}: mean validation RMSE {sum(vals) / len(vals):.4f} over {len(vals)} models")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boardeval", description=__doc__)
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic season with ground truth")
    s.add_argument("--out", required=True)
    s.add_argument("--matches", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--half-length", type=float)
    s.add_argument("--frame-rate", type=float)
    s.add_argument("--windows-per-half", type=int)
    s.add_argument("--drills-per-half", type=int)
    s.add_argument("--penalty-conversion", type=float)
    s.add_argument("--stops", help='stoppage mix per half, e.g. "PK:2,TI:3,FK:2"')
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("extract", help="write significant-event and episode files")
    s.add_argument("--data", required=True)
    s.add_argument("--match")
    s.add_argument("--half-length", type=float)
    s.add_argument("--reset-threshold", type=float)
    s.add_argument("--min-score-ratio", type=float)
    s.add_argument("--n-seconds", type=float)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("highlights", help="ranked intense periods, speed baseline and recall table")
    s.add_argument("--data", required=True)
    s.add_argument("--match")
    s.add_argument("--max-rank", type=int, default=40)
    s.add_argument("--dump-signals", action="store_true")
    s.add_argument("--n-seconds", type=float)
    s.set_defaults(func=cmd_highlights)

    s = sub.add_parser("train", help="fitted-value iteration over a dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--regressor", choices=["linear", "forest"], default="forest")
    s.add_argument("--gamma", type=float)
    s.add_argument("--iterations", type=int)
    s.add_argument("--tolerance", type=float)
    s.add_argument("--trees", type=int)
    s.add_argument("--depth", type=int)
    s.add_argument("--min-leaf", type=int)
    s.add_argument("--max-bins", type=int)
    s.add_argument("--train-fraction", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--half-length", type=float)
    s.add_argument("--report")
    s.add_argument("--reset-threshold", type=float)
    s.add_argument("--min-score-ratio", type=float)
    s.add_argument("--n-seconds", type=float)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("heatmap", help="render a board-evaluation heatmap")
    s.add_argument("--model", required=True)
    s.add_argument("--event", required=True)
    s.add_argument("--time", type=float, required=True)
    s.add_argument("--score", default="0:0")
    s.add_argument("--side", choices=["home", "away"], default="home")
    s.add_argument("--nx", type=int, default=105)
    s.add_argument("--ny", type=int, default=68)
    s.add_argument("--out", required=True)
    s.add_argument("--grid-out")
    s.set_defaults(func=cmd_heatmap)

    s = sub.add_parser("value", help="value of one exact state")
    s.add_argument("--model", required=True)
    s.add_argument("--event", required=True)
    s.add_argument("--time", type=float, required=True)
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--y", type=float, required=True)
    s.add_argument("--score", default="0:0")
    s.add_argument("--side", choices=["home", "away"], default="home")
    s.set_defaults(func=cmd_value)

    s = sub.add_parser("serve", help="read-only HTTP API over a trained model")
    s.add_argument("--model", required=True)
    s.add_argument("--data")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8822)
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("report", help="aggregate validation RMSE per model family")
    s.add_argument("--models", required=True, help="directory of model JSON files")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.config_data = {}
    if args.config:
        try:
            args.config_data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            return _fail(f"cannot read config {args.config}: {e}")
    try:
        return args.func(args)
    except Exception as e:  # noqa: BLE001 - single CLI error funnel
        return _fail(str(e))


if __name__ == "__main__":
    sys.exit(main())
