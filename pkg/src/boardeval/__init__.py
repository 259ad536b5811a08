"""Board evaluation for invasion sports.

Extracts intensity-based significant events from tracking data, models
each half as a Markov chain of continuous-parameter states, estimates
event values by fitted-value iteration and serves pitch-wide value
heatmaps via CLI and HTTP.
"""

from .board import BoardQuery, ValueGrid, evaluate_grid, point_value, render_heatmap
from .core import (
    AttackDirectionTable,
    Frame,
    FrameSeries,
    PitchSpec,
    Position,
    RawEvent,
    RawEventKind,
    normalize_to_attack_frame,
    parse_events,
    parse_frames,
)
from .events import (
    EventType,
    ExtractionConfig,
    SignificantEvent,
    significant_events_for_half,
)
from .fvi import FviConfig, FviResult, run_fvi
from .intensity import (
    DetectorConfig,
    IntensePeriod,
    IntensitySeries,
    covariance_at,
    detect_intense_periods,
    ellipse_area,
    find_local_peaks,
    intensity_series,
    speed_baseline_periods,
)
from .mrp import MrpSolution, solve_closed_form, value_iterate
from .regress import (
    LinearModel,
    RandomForestModel,
    RegressorSpec,
    TableModel,
    load_model,
    make_regressor,
    rmse,
    save_model,
)
from .simulate import GroundTruth, SeasonConfig, SimulatorConfig, simulate_half, simulate_season
from .states import (
    Discretizer,
    EncodingSchema,
    Episode,
    StateFeature,
    build_episode,
    discretize_and_estimate,
    exact_backward_values,
)

__version__ = "0.1.0"
