#!/usr/bin/env python3
"""End-to-end demo: simulate a small season, train linear and forest value
models, compare their validation RMSE and render a few board-evaluation
heatmaps into an output directory.
"""

import argparse
from pathlib import Path

from boardeval.board import BoardQuery, evaluate_grid, render_heatmap
from boardeval.events import EventType, ExtractionConfig
from boardeval.fvi import FviConfig
from boardeval.pipeline import train_from_dataset
from boardeval.regress import RegressorSpec, load_model
from boardeval.simulate import SeasonConfig, simulate_season


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_run")
    ap.add_argument("--matches", type=int, default=12)
    ap.add_argument("--seed", type=int, default=20250809)
    ap.add_argument("--half-length", type=float, default=900.0)
    args = ap.parse_args()

    out = Path(args.out)
    data = out / "season"
    print(f"simulating {args.matches} matches into {data} ...")
    season = SeasonConfig(
        master_seed=args.seed,
        n_matches=args.matches,
        half_length=args.half_length,
        frame_rate=15.0,
        windows_per_half=3,
        drills_per_half=2,
    )
    simulate_season(season, data)

    ecfg = ExtractionConfig()
    for kind in ("linear", "forest"):
        spec = RegressorSpec(kind=kind, n_trees=40, max_depth=10, max_bins=32, seed=1)
        cfg = FviConfig(gamma=1.0, max_iterations=25, tolerance=1e-3, regressor=spec,
                        train_fraction=0.7, seed=1)
        model_path = out / f"model_{kind}.json"
        print(f"training {kind} ...")
        result, _ = train_from_dataset(
            data, model_path, cfg, ecfg, report_path=out / f"model_{kind}.report.csv"
        )
        print(
            f"  {kind}: {result.iterations} iterations, "
            f"validation RMSE {result.validation_rmse:.4f}"
        )

    model, schema, _ = load_model(out / "model_forest.json")
    for event, t in ((EventType.FREE_KICK_DIRECT, 500.0), (EventType.PENALTY_KICK, 500.0),
                     (EventType.IN_PLAY, 500.0), (EventType.KICKOFF, 0.0)):
        q = BoardQuery(event, t, 0, 0, "home", 105, 68)
        grid = evaluate_grid(model, q, schema)
        png = out / f"heatmap_{event.value}.png"
        png.write_bytes(render_heatmap(grid, schema.pitch))
        print(f"  {png}  (M = {grid.m_abs:.3f})")
    print("done.")


if __name__ == "__main__":
    main()
