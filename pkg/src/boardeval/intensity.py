"""Intense-period detection from the players' spatial distribution.

Pipeline: per-second covariance of player positions -> ellipse area
S(t) = pi * (product of eigenvalues) -> absolute temporal difference
f(t) = |S(t) - S(t-1)| -> box-filter convolution -> strict local peaks,
each peak spanning [t - N, t + N]. A mean-player-speed variant of the
same pipeline serves as a comparison baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Frame, FrameSeries

__all__ = [
    "DetectorConfig",
    "IntensitySeries",
    "IntensePeriod",
    "covariance_at",
    "ellipse_area",
    "intensity_series",
    "box_convolve",
    "find_local_peaks",
    "detect_intense_periods",
    "speed_baseline_periods",
]


class DetectorError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    """Knobs of the intense-period detector.

    n_seconds is the half-window used both by the box filter and by the
    local-peak search; detected periods span 2 * n_seconds. window_mode
    "forward" averages f over [t, t + N]; "trailing" over [t - N, t].
    """

    n_seconds: float = 10.0
    sample_rate: float = 1.0
    include_goalkeepers: bool = False
    distribution_teams: str = "both"  # both | A-only | B-only
    window_mode: str = "forward"

    def __post_init__(self) -> None:
        if self.n_seconds < 1:
            raise DetectorError("n_seconds must be >= 1")
        if self.sample_rate <= 0:
            raise DetectorError("sample_rate must be positive")
        if self.distribution_teams not in ("both", "A-only", "B-only"):
            raise DetectorError(f"bad distribution_teams {self.distribution_teams!r}")
        if self.window_mode not in ("forward", "trailing"):
            raise DetectorError(f"bad window_mode {self.window_mode!r}")


@dataclass(frozen=True)
class IntensitySeries:
    """Sampled intensity signals for one half.

    s_values sits on t_grid; f_values and conv sit on t_grid[1:] (a
    difference consumes one sample). n_samples is the nominal box-filter
    length in samples; windows truncated at the series edge use fewer.
    """

    t_grid: np.ndarray
    s_values: np.ndarray
    f_values: np.ndarray
    conv: np.ndarray
    n_samples: int

    @property
    def f_times(self) -> np.ndarray:
        return self.t_grid[1:]


@dataclass(frozen=True)
class IntensePeriod:
    peak_t: float
    start: float
    end: float
    score: float


def _included_mask(series: FrameSeries, cfg: DetectorConfig) -> np.ndarray:
    mask = np.ones(len(series.roster), dtype=bool)
    if not cfg.include_goalkeepers:
        mask &= np.array([not r.is_goalkeeper for r in series.roster])
    if cfg.distribution_teams == "A-only":
        mask &= np.array([r.team == "A" for r in series.roster])
    elif cfg.distribution_teams == "B-only":
        mask &= np.array([r.team == "B" for r in series.roster])
    return mask


def covariance_at(frame: Frame, cfg: DetectorConfig = DetectorConfig()) -> np.ndarray:
    """Population covariance of the included players' (x, y) coordinates."""
    pts = [
        (p.position.x, p.position.y)
        for p in frame.players
        if (cfg.include_goalkeepers or not p.is_goalkeeper)
        and (
            cfg.distribution_teams == "both"
            or p.team == cfg.distribution_teams[0]
        )
    ]
    if len(pts) < 2:
        raise DetectorError(f"need >= 2 included players, got {len(pts)}")
    xy = np.asarray(pts, dtype=float)
    dev = xy - xy.mean(axis=0)
    return dev.T @ dev / len(pts)


def ellipse_area(cov: np.ndarray) -> float:
    """Area pi * a * b of the covariance ellipse, (a, b) the eigenvalues."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise DetectorError(f"expected a 2x2 matrix, got shape {cov.shape}")
    scale = max(1.0, float(np.abs(cov).max()))
    if abs(cov[0, 1] - cov[1, 0]) > 1e-9 * scale:
        raise DetectorError("covariance matrix must be symmetric")
    eig = np.linalg.eigvalsh(cov)
    return float(np.pi * eig[0] * eig[1])


def _areas_and_speeds(
    series: FrameSeries, cfg: DetectorConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample S(t) and mean player speed on the detector grid.

    Returns (grid_times, areas, mean_speeds); mean_speeds[i] is the speed
    into grid point i and is NaN at i = 0. Grid points with no frame
    within half a sample period are dropped.
    """
    dt = 1.0 / cfg.sample_rate
    t0, t1 = float(series.times[0]), float(series.times[-1])
    grid = t0 + np.arange(0.0, (t1 - t0) + 1e-9, dt)

    idx = np.searchsorted(series.times, grid)
    idx = np.clip(idx, 1, len(series.times) - 1)
    left_closer = np.abs(series.times[idx - 1] - grid) <= np.abs(series.times[idx] - grid)
    nearest = np.where(left_closer, idx - 1, idx)
    ok = np.abs(series.times[nearest] - grid) <= 0.5 * dt
    grid, nearest = grid[ok], nearest[ok]

    mask = _included_mask(series, cfg)
    if mask.sum() < 2:
        raise DetectorError("fewer than 2 included players in the series")
    xy = series.player_xy[nearest][:, mask, :]  # (G, P, 2)
    if np.isnan(xy).any():
        # Rare uneven-roster path: per-point covariance over present players.
        areas = np.empty(len(grid))
        for i in range(len(grid)):
            pts = xy[i][~np.isnan(xy[i, :, 0])]
            if len(pts) < 2:
                areas[i] = np.nan
                continue
            dev = pts - pts.mean(axis=0)
            areas[i] = ellipse_area(dev.T @ dev / len(pts))
        keep = ~np.isnan(areas)
        grid, xy, areas = grid[keep], xy[keep], areas[keep]
    else:
        dev = xy - xy.mean(axis=1, keepdims=True)
        sxx = np.einsum("gp,gp->g", dev[:, :, 0], dev[:, :, 0]) / xy.shape[1]
        syy = np.einsum("gp,gp->g", dev[:, :, 1], dev[:, :, 1]) / xy.shape[1]
        sxy = np.einsum("gp,gp->g", dev[:, :, 0], dev[:, :, 1]) / xy.shape[1]
        tr = sxx + syy
        det = sxx * syy - sxy * sxy
        disc = np.sqrt(np.maximum(tr * tr / 4.0 - det, 0.0))
        areas = np.pi * (tr / 2.0 + disc) * (tr / 2.0 - disc)

    sel_times = series.times[nearest]
    speeds = np.full(len(grid), np.nan)
    if len(grid) >= 2:
        disp = np.linalg.norm(np.diff(xy, axis=0), axis=2)  # (G-1, P)
        step = np.diff(sel_times)
        with np.errstate(invalid="ignore"):
            per_player = disp / step[:, None]
        speeds[1:] = np.nanmean(per_player, axis=1)
    return grid, areas, speeds


def box_convolve(f: np.ndarray, sample_rate: float, n_seconds: float, window_mode: str = "forward") -> np.ndarray:
    """Box-filter average of f, window truncated at the series edge.

    Forward mode averages f over [t, t + N] (the literal support of the
    filter kernel); trailing mode mirrors it to [t - N, t].
    """
    f = np.asarray(f, dtype=float)
    w = int(round(n_seconds * sample_rate)) + 1
    csum = np.concatenate(([0.0], np.cumsum(f)))
    i = np.arange(len(f))
    if window_mode == "forward":
        hi = np.minimum(i + w, len(f))
        lo = i
    else:
        hi = i + 1
        lo = np.maximum(i + 1 - w, 0)
    return (csum[hi] - csum[lo]) / (hi - lo)


def find_local_peaks(values: np.ndarray, times: np.ndarray, n_seconds: float) -> np.ndarray:
    """Times t where values(t) strictly exceeds every other sample in
    [t - N, t + N]; plateaus of equal maxima yield no peak, and edge points
    compare only against in-range neighbors."""
    return times[np.asarray(_peak_indices(values, times, n_seconds), dtype=int)]


def _peak_indices(values: np.ndarray, times: np.ndarray, n_seconds: float) -> list[int]:
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return []
    if len(times) != len(values):
        raise DetectorError("values and times must align")
    steps = np.diff(times)
    if len(steps) and not np.allclose(steps, steps[0], rtol=0, atol=1e-9):
        raise DetectorError("peak search requires a uniform grid")
    dt = float(steps[0]) if len(steps) else 1.0
    w = int(round(n_seconds / dt))

    pad = np.full(w, -np.inf)
    padded = np.concatenate([pad, values, pad])
    windows = np.lib.stride_tricks.sliding_window_view(padded, 2 * w + 1)
    left_max = windows[:, :w].max(axis=1) if w else np.full(len(values), -np.inf)
    right_max = windows[:, w + 1 :].max(axis=1) if w else np.full(len(values), -np.inf)
    hits = (values > left_max) & (values > right_max)
    return list(np.nonzero(hits)[0])


def intensity_series(series: FrameSeries, cfg: DetectorConfig = DetectorConfig()) -> IntensitySeries:
    """Compute S, f and the convolved signal for one half."""
    if series.duration < 2 * cfg.n_seconds + 2:
        raise DetectorError(
            f"series spans {series.duration:.1f}s, need >= {2 * cfg.n_seconds + 2:.1f}s"
        )
    grid, areas, _ = _areas_and_speeds(series, cfg)
    f = np.abs(np.diff(areas))
    conv = box_convolve(f, cfg.sample_rate, cfg.n_seconds, cfg.window_mode)
    return IntensitySeries(
        t_grid=grid,
        s_values=areas,
        f_values=f,
        conv=conv,
        n_samples=int(round(cfg.n_seconds * cfg.sample_rate)) + 1,
    )


def _periods_from_signal(
    signal: np.ndarray,
    times: np.ndarray,
    cfg: DetectorConfig,
    t_lo: float,
    t_hi: float,
) -> list[IntensePeriod]:
    periods = []
    for i in _peak_indices(signal, times, cfg.n_seconds):
        peak = float(times[i])
        periods.append(
            IntensePeriod(
                peak_t=peak,
                start=max(t_lo, peak - cfg.n_seconds),
                end=min(t_hi, peak + cfg.n_seconds),
                score=float(signal[i]),
            )
        )
    periods.sort(key=lambda p: p.peak_t)
    return periods


def periods_from_intensity(
    sig: IntensitySeries, cfg: DetectorConfig, t_lo: float, t_hi: float
) -> list[IntensePeriod]:
    """Peak extraction over an already computed intensity series."""
    return _periods_from_signal(sig.conv, sig.f_times, cfg, t_lo, t_hi)


def detect_intense_periods(
    series: FrameSeries, cfg: DetectorConfig = DetectorConfig()
) -> list[IntensePeriod]:
    """Intense periods of one half, sorted by peak time.

    Each period spans [peak - N, peak + N] clipped to the half and carries
    the convolution value at its peak as a ranking score.
    """
    sig = intensity_series(series, cfg)
    return periods_from_intensity(sig, cfg, float(series.times[0]), float(series.times[-1]))


def speed_baseline_periods(
    series: FrameSeries, cfg: DetectorConfig = DetectorConfig()
) -> list[IntensePeriod]:
    """Baseline detector: the same pipeline over mean player speed."""
    if series.duration < 2 * cfg.n_seconds + 2:
        raise DetectorError(
            f"series spans {series.duration:.1f}s, need >= {2 * cfg.n_seconds + 2:.1f}s"
        )
    grid, _, speeds = _areas_and_speeds(series, cfg)
    sig = speeds[1:]
    conv = box_convolve(sig, cfg.sample_rate, cfg.n_seconds, cfg.window_mode)
    return _periods_from_signal(
        conv, grid[1:], cfg, float(series.times[0]), float(series.times[-1])
    )


def write_signal_dump(sig: IntensitySeries, path: str | Path) -> None:
    """Diagnostic export: t, S, f, conv (f and conv blank on the first row)."""
    lines = ["t,S,f,conv"]
    lines.append(f"{sig.t_grid[0]:.3f},{sig.s_values[0]:.6f},,")
    for i, t in enumerate(sig.t_grid[1:]):
        lines.append(
            f"{t:.3f},{sig.s_values[i + 1]:.6f},{sig.f_values[i]:.6f},{sig.conv[i]:.6f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
