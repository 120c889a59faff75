"""Demand and available-wind series: CSV ingestion, synthesis, forecasts."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

DEMAND_MIN = 180.0
DEMAND_MAX = 540.0
DEMAND_MEAN = 320.0
WIND_MIN = 0.0
WIND_MAX = 400.0
WIND_MEAN = 272.0

FORECAST_POINTS = 30
FORECAST_INTERVAL = 15  # minutes

CSV_HEADER = ["minute", "demand_kw", "wind_avail_kw"]


class SeriesError(ValueError):
    pass


@dataclass
class ExogenousSeries:
    demand: np.ndarray
    wind_avail: np.ndarray

    def __post_init__(self):
        self.demand = np.asarray(self.demand, dtype=float)
        self.wind_avail = np.asarray(self.wind_avail, dtype=float)
        if self.demand.shape != self.wind_avail.shape:
            raise SeriesError("demand and wind series lengths differ")

    def __len__(self) -> int:
        return len(self.demand)

    def at(self, minute: int):
        i = minute % len(self)
        return float(self.demand[i]), float(self.wind_avail[i])


@dataclass
class Forecast:
    values: np.ndarray  # exactly 30 points, 15 minutes apart

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (FORECAST_POINTS,):
            raise SeriesError("forecast must have exactly 30 points")


@dataclass
class SeriesStats:
    """Extremes and fastest per-minute ramps, feeding the recovery scenarios."""

    demand_high: float
    demand_ramp: float
    wind_low: float
    wind_ramp: float
    demand_low: float
    demand_drop: float


def series_stats(series: ExogenousSeries) -> SeriesStats:
    d, w = series.demand, series.wind_avail
    demand_ramp = float(np.max(np.diff(d), initial=0.0))
    demand_drop = float(np.max(-np.diff(d), initial=0.0))
    wind_ramp = float(np.max(-np.diff(w), initial=0.0))
    return SeriesStats(
        demand_high=float(d.max()),
        demand_ramp=max(demand_ramp, 0.0),
        wind_low=float(w.min()),
        wind_ramp=max(wind_ramp, 0.0),
        demand_low=float(d.min()),
        demand_drop=max(demand_drop, 0.0),
    )


def load_series(path) -> ExogenousSeries:
    """Parse the minute,demand_kw,wind_avail_kw CSV and validate bounds."""
    demand, wind = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise SeriesError(f"{path}: expected header {','.join(CSV_HEADER)}")
        expected_minute = 0
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise SeriesError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            try:
                minute = int(row[0])
                d = float(row[1])
                w = float(row[2])
            except ValueError as exc:
                raise SeriesError(f"{path}:{lineno}: {exc}") from None
            if minute != expected_minute:
                raise SeriesError(
                    f"{path}:{lineno}: minutes must increase by 1 "
                    f"(expected {expected_minute}, got {minute})"
                )
            if not np.isfinite(d) or d < 0:
                raise SeriesError(f"{path}:{lineno}: demand {d} out of range")
            if not WIND_MIN <= w <= WIND_MAX:
                raise SeriesError(
                    f"{path}:{lineno}: wind {w} outside [{WIND_MIN}, {WIND_MAX}]"
                )
            demand.append(d)
            wind.append(w)
            expected_minute += 1
    if not demand:
        raise SeriesError(f"{path}: empty series")
    return ExogenousSeries(np.array(demand), np.array(wind))


def save_series(series: ExogenousSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, (d, w) in enumerate(zip(series.demand, series.wind_avail)):
            writer.writerow([i, repr(float(d)), repr(float(w))])


def synth_series(seed: int, days: int, profile: str = "nominal") -> ExogenousSeries:
    """Deterministic synthetic series matching the published ranges.

    Demand: mean 320 kW with a diurnal swing plus a bounded random walk,
    clipped to [180, 540].  Wind: mean-reverting walk around 272 kW,
    clipped to [0, 400].  The adversarial profile adds deep wind dropouts
    with steep demand ramps for recovery-shield stress tests.
    """
    if days < 1:
        raise SeriesError("days must be >= 1")
    n = days * 1440
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    diurnal = 80.0 * np.sin(2 * np.pi * (t - 480) / 1440.0)
    walk = np.cumsum(rng.normal(0.0, 1.2, n))
    walk -= np.linspace(0, walk[-1], n)  # pin endpoints to avoid drift
    demand = DEMAND_MEAN + diurnal + np.clip(walk, -110, 110)

    wind = np.empty(n)
    w = WIND_MEAN + rng.normal(0, 40)
    for i in range(n):
        w += 0.02 * (WIND_MEAN - w) + rng.normal(0.0, 6.0)
        wind[i] = w

    if profile == "adversarial":
        # deep wind dropouts while demand ramps hard toward its peak
        for day in range(days):
            start = day * 1440 + int(rng.integers(200, 900))
            length = int(rng.integers(180, 420))
            end = min(n, start + length)
            wind[start:end] *= np.linspace(1.0, 0.0, end - start) ** 2
            ramp_len = min(end, start + 60) - start
            demand[start : start + ramp_len] += np.linspace(0, 200, ramp_len)
            demand[start + ramp_len : end] += 200
    elif profile != "nominal":
        raise SeriesError(f"unknown profile {profile!r}")

    return ExogenousSeries(
        np.clip(demand, DEMAND_MIN, DEMAND_MAX),
        np.clip(wind, WIND_MIN, WIND_MAX),
    )


def forecast_at(
    series: ExogenousSeries,
    t: int,
    kind: str,
    noise_scale: float = 0.0,
    noise_seed: int = 0,
) -> Forecast:
    """Persistence-of-truth forecast with lead-time-growing noise.

    noise_scale 0 gives perfect foresight.  The noise standard deviation
    at lead k (1..30) is noise_scale * k.  Wrap-around indexing pads
    lookahead past the end of the series.
    """
    if kind == "demand":
        base = series.demand
        lo, hi = 0.0, np.inf
    elif kind == "wind":
        base = series.wind_avail
        lo, hi = WIND_MIN, WIND_MAX
    else:
        raise SeriesError(f"unknown forecast kind {kind!r}")
    idx = (t + FORECAST_INTERVAL * np.arange(1, FORECAST_POINTS + 1)) % len(series)
    values = base[idx].astype(float)
    if noise_scale > 0:
        rng = np.random.default_rng((noise_seed, t))
        leads = np.arange(1, FORECAST_POINTS + 1)
        values = values + rng.normal(0.0, 1.0, FORECAST_POINTS) * noise_scale * leads
        values = np.clip(values, lo, hi)
    return Forecast(values)
